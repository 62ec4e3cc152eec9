"""Row radii and the radius of summability."""

import math

import pytest

from summatrix import Kind, PowerMatrixSpec, Status, TruncationPolicy, get_matrix, get_series
from summatrix.radius import (
    check_corollary3, check_prop2_monotone, check_prop4, membership_at, radius_of_summability,
    row_radii, row_radius,
)

FAST = TruncationPolicy(rows=256, cols=32, terms=1024)


def test_row_radius_geometric():
    assert row_radius(get_matrix("example5", b="0.5"), 3) == pytest.approx(2, rel=0.01)


def test_row_radius_entire_and_zero():
    assert math.isinf(row_radius(get_matrix("example4"), 0))
    assert row_radius(get_matrix("example3"), 0) == 0


def test_row_radii_minimum():
    rr = row_radii(get_matrix("example2"), FAST)
    assert len(rr.values) == FAST.rows
    assert rr.min_over_rows == pytest.approx(1, rel=0.01)


def test_membership_at():
    spec = PowerMatrixSpec(Kind.ROW_SIMPLE, get_matrix("example5", b="0.5"))
    assert membership_at(spec, 1.5, FAST).passed
    assert membership_at(spec, 2.5, FAST).status is Status.FAIL


@pytest.mark.parametrize("name, params, lo, hi", [
    ("example5", {"b": "0.5"}, 1.98, 2.0001),
    ("example2", {}, 0.98, 1.0001),
    ("cesaro", {}, 0.97, 1.0001),
])
def test_radius_brackets(name, params, lo, hi):
    est = radius_of_summability("row", get_matrix(name, **params), policy=FAST)
    assert lo <= est.lower <= est.upper <= hi
    assert not est.capped and not est.inconsistent


def test_radius_zero_for_factorial_rows():
    est = radius_of_summability("row", get_matrix("example3"), policy=FAST)
    assert est.lower == 0
    assert est.upper < 1e-3


def test_radius_capped_for_zero_matrix():
    est = radius_of_summability("row", get_matrix("zero"), policy=FAST)
    assert est.capped and est.upper == FAST.radius_cap


def test_non_row_kind_is_marked_extension():
    est = radius_of_summability("type2", get_matrix("cesaro"), g=get_series("ones"), policy=FAST)
    assert est.extension and est.notes


def test_refinement_never_widens():
    A = get_matrix("example5", b="0.5")
    coarse = radius_of_summability("row", A, policy=FAST.replace(bisection_steps=20))
    fine = radius_of_summability("row", A, policy=FAST.replace(bisection_steps=40))
    assert coarse.lower <= fine.lower and fine.upper <= coarse.upper


@pytest.mark.parametrize("name", ["example2", "example5", "cesaro", "identity"])
def test_corollary3_and_prop4(name):
    A = get_matrix(name)
    est = radius_of_summability("row", A, policy=FAST)
    assert check_corollary3(A, FAST, est).passed
    assert check_prop4(A, FAST, est).passed


def test_corollary3_vacuous_outside_Bc():
    v = check_corollary3(get_matrix("example3"), FAST)
    assert v.passed and v.evidence["vacuous"]


def test_monotone_geometric():
    A = get_matrix("example5", b="0.5")
    v = check_prop2_monotone("row", A, moduli=[0.5, 1, 1.5, 1.9, 2.1, 3], policy=FAST)
    assert v.passed
    assert v.evidence["verdicts"] == ["pass"] * 4 + ["fail"] * 2


def test_monotone_rejects_unsorted():
    with pytest.raises(ValueError, match="ascending"):
        check_prop2_monotone("row", get_matrix("cesaro"), moduli=[2, 1])
