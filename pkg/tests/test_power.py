"""Power matrices and the equivalence verifiers."""

import cmath
import math
import random

import mpmath
import numpy as np
import pytest

from summatrix import InfiniteMatrix, Kind, PowerMatrixSpec, PowerSeries, Status, build, get_matrix, get_series
from summatrix.power import (
    FORMULAS, Consistency, check_subcritical, needs, verify_prop1, verify_theorem1II,
    verify_theorem1III,
)


def base():
    return InfiniteMatrix(lambda i, j: 1.0 / (1.0 + i + 2.0 * j), "test base")


G = PowerSeries(lambda k: 1.0 / (k + 2.0))
H = PowerSeries(lambda k: (k + 1.0) ** 0.5)


def exact_power(z, k):
    """z^k from 200-bit arithmetic, rounded once to double."""
    with mpmath.workprec(200):
        return complex(mpmath.mpc(z.real, z.imag) ** k)


def ulps(got, want):
    return abs(got - want) / np.spacing(abs(want))


def expected(kind, i, j, z):
    """The defining formula in double arithmetic, factors in formula order."""
    a = 1.0 / (1.0 + i + 2.0 * j)
    g = lambda k: complex(1.0 / (k + 2.0))
    h = lambda k: complex((k + 1.0) ** 0.5)
    zp = lambda k: exact_power(z, k)
    return {
        Kind.COLUMN_SIMPLE: lambda: a * zp(i),
        Kind.ROW_SIMPLE: lambda: a * zp(j),
        Kind.DOUBLE_SIMPLE: lambda: a * zp(i + j),
        Kind.COLUMN_GENERAL: lambda: a * g(i) * zp(i),
        Kind.ROW_GENERAL: lambda: a * h(j) * zp(j),
        Kind.TYPE2: lambda: a * g(i + j) * zp(i + j),
        Kind.TYPE3: lambda: a * g(i) * h(j) * zp(i + j),
    }[kind]()


@pytest.mark.parametrize("kind", list(Kind))
def test_random_probes_match_formulas(kind):
    rng = random.Random(hash(kind.value) % 1000)
    for _ in range(100):
        i, j = rng.randrange(0, 128), rng.randrange(0, 128)
        z = cmath.rect(rng.uniform(0.1, 1.3), rng.uniform(-math.pi, math.pi))
        M = build(PowerMatrixSpec(kind, base(), G, H, z))
        assert ulps(M.entry(i, j), expected(kind, i, j, z)) <= 1, (i, j, z)


def test_formula_table_and_needs():
    assert FORMULAS[Kind.TYPE3] == "a_ij g_i h_j z^(i+j)"
    assert needs(Kind.TYPE3) == {"g", "h"}
    assert needs(Kind.ROW_SIMPLE) == set()


def test_missing_series_rejected():
    with pytest.raises(ValueError, match="requires series g"):
        PowerMatrixSpec(Kind.TYPE2, base(), z=1)


def test_z_zero_convention():
    M = build(PowerMatrixSpec(Kind.DOUBLE_SIMPLE, base(), z=0))
    assert M.entry(0, 0) == 1
    assert M.entry(0, 1) == 0


def test_real_z_powers_are_exact():
    M = build(PowerMatrixSpec(Kind.ROW_SIMPLE, InfiniteMatrix(lambda i, j: 1.0 + 0 * (i + j)), z=0.5))
    assert M.entry(3, 10) == 0.5 ** 10


def test_far_entries_rebuilt_from_logs():
    A = get_matrix("example4")
    M = build(PowerMatrixSpec(Kind.ROW_SIMPLE, A, z=1e3))
    v = M.entry(0, 300)
    assert math.isfinite(abs(v)) and v != 0
    assert math.log(abs(v)) == pytest.approx(300 * math.log(1e3) - math.lgamma(301), rel=1e-12)


def test_scaling_duality():
    # the column power matrix of (b^(i+j)) at z equals the row one of its transpose
    A = get_matrix("example5", b="0.5")
    col = build(PowerMatrixSpec(Kind.COLUMN_SIMPLE, A, z=1.7))
    row = build(PowerMatrixSpec(Kind.ROW_SIMPLE, A, z=1.7))
    assert np.allclose(col.block(20, 20), row.block(20, 20).T, rtol=1e-14)


def test_prop1_column_general_agree():
    C = get_matrix("cesaro")
    rep = verify_prop1("column-general", C, get_series("ratio"), 1)
    assert rep.consistent is Consistency.AGREE
    assert rep.condition_i.passed and rep.condition_ii.regular.passed


def test_prop1_fails_on_both_sides():
    C = get_matrix("cesaro")
    rep = verify_prop1("column-general", C, get_series("ones"), 0.5)
    assert rep.consistent is Consistency.AGREE
    assert rep.condition_i.status is Status.FAIL
    assert rep.condition_ii.regular.status is Status.FAIL


def test_prop1_row_general_hypothesis():
    C = get_matrix("cesaro")
    rep = verify_prop1("row-general", C, get_series("osc"), 1)
    assert rep.consistent is Consistency.HYPOTHESIS_VIOLATED
    assert not rep.hypothesis_met


def test_prop1_rejects_other_kinds_and_irregular_base():
    with pytest.raises(ValueError, match="column-general or row-general"):
        verify_prop1("type2", get_matrix("cesaro"), get_series("ones"), 1)
    with pytest.raises(ValueError, match="requires regular base"):
        verify_prop1("column-general", get_matrix("zero"), get_series("ones"), 1)


def test_theorem1II_ratio():
    rep = verify_theorem1II(get_matrix("cesaro"), get_series("ratio"), 1)
    assert rep.consistent is Consistency.AGREE
    assert rep.condition_ii.regular.passed
    assert rep.diagnostics["shift_regular"] == "pass"
    assert rep.diagnostics["radius"]["series_radius"] == pytest.approx(1, abs=0.02)


def test_theorem1II_subcritical_side():
    rep = verify_theorem1II(get_matrix("cesaro"), get_series("ones"), 0.5)
    assert rep.consistent is Consistency.AGREE
    assert rep.condition_ii.regular.status is Status.FAIL
    assert abs(rep.condition_ii.row_sum_limit) < 1e-8


def test_theorem1II_hypothesis_violated():
    rep = verify_theorem1II(get_matrix("cesaro"), get_series("osc"), 1)
    assert rep.consistent is Consistency.HYPOTHESIS_VIOLATED
    assert rep.condition_i.status is Status.FAIL


def test_theorem1III_product_of_limits():
    C = get_matrix("cesaro")
    rep = verify_theorem1III(C, get_series("scaled-ratio", c="2"), get_series("scaled-ratio", c="0.5"), 1)
    assert rep.consistent is Consistency.AGREE
    assert rep.condition_i.evidence["limit_g"] == pytest.approx(2)
    assert rep.condition_ii.regular.passed


def test_theorem1III_needs_both_limits():
    with pytest.raises(ValueError, match="hypothesis unmet"):
        verify_theorem1III(get_matrix("cesaro"), get_series("osc"), get_series("ones"), 1)


@pytest.mark.parametrize("A, g, z", [("cesaro", "ones", 0.5), ("identity", "ones", 0.5), ("cesaro", "exp", 10)])
def test_subcritical_row_sums_vanish(A, g, z):
    rep = check_subcritical(get_matrix(A), get_series(g), z)
    assert rep.holds.passed
    assert rep.regularity.regular.status is Status.FAIL


def test_subcritical_requires_small_z():
    with pytest.raises(ValueError, match="subcritical"):
        check_subcritical(get_matrix("cesaro"), get_series("ones"), 1.5)


def test_theorem1II_constant_one_sequence():
    # g_k = 2^k at z = 0.5 makes g_k z^k identically 1
    rep = verify_theorem1II(get_matrix("cesaro"), get_series("geometric", b="2"), 0.5)
    assert rep.consistent is Consistency.AGREE
    assert rep.condition_i.passed and rep.condition_ii.regular.passed


def test_theorem1III_product_zero():
    rep = verify_theorem1III(get_matrix("cesaro"), get_series("ratio"), get_series("ratio"), 0.5)
    assert rep.consistent is Consistency.AGREE
    assert rep.condition_i.status is Status.FAIL
    assert rep.condition_ii.regular.status is Status.FAIL


def test_row_power_of_factorial_rows_fails():
    from summatrix.radius import membership_at
    spec = PowerMatrixSpec(Kind.ROW_SIMPLE, get_matrix("example3"))
    assert membership_at(spec, 0.1).status is Status.FAIL
