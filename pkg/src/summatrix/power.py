"""Power matrices induced by a base matrix, and verifiers for the
equivalences between limit conditions on g_k z^k and regularity of the
induced matrix.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .matrices import (
    InfiniteMatrix,
    RegularityReport,
    Status,
    Verdict,
    _target_verdict,
    check_regular,
    conjunction,
    shifted_matrix,
)
from .numerics import (
    DEFAULT_POLICY,
    LimitEstimate,
    LimitStatus,
    PowerSeries,
    TruncationPolicy,
    estimate_limit,
    log_power_int,
    power_int,
    series_radius,
)


class Kind(str, enum.Enum):
    COLUMN_SIMPLE = "column"
    ROW_SIMPLE = "row"
    DOUBLE_SIMPLE = "double"
    COLUMN_GENERAL = "column-general"
    ROW_GENERAL = "row-general"
    TYPE2 = "type2"
    TYPE3 = "type3"


# Factors multiplied onto a_ij, in formula order.  Each is (axis, source)
# where axis is "i", "j" or "i+j" and source is "g", "h" or "z".
_FACTORS = {
    Kind.COLUMN_SIMPLE: (("i", "z"),),
    Kind.ROW_SIMPLE: (("j", "z"),),
    Kind.DOUBLE_SIMPLE: (("i+j", "z"),),
    Kind.COLUMN_GENERAL: (("i", "g"), ("i", "z")),
    Kind.ROW_GENERAL: (("j", "h"), ("j", "z")),
    Kind.TYPE2: (("i+j", "g"), ("i+j", "z")),
    Kind.TYPE3: (("i", "g"), ("j", "h"), ("i+j", "z")),
}

FORMULAS = {
    Kind.COLUMN_SIMPLE: "a_ij z^i",
    Kind.ROW_SIMPLE: "a_ij z^j",
    Kind.DOUBLE_SIMPLE: "a_ij z^(i+j)",
    Kind.COLUMN_GENERAL: "a_ij g_i z^i",
    Kind.ROW_GENERAL: "a_ij h_j z^j",
    Kind.TYPE2: "a_ij g_(i+j) z^(i+j)",
    Kind.TYPE3: "a_ij g_i h_j z^(i+j)",
}


def needs(kind: Kind) -> set:
    return {src for _axis, src in _FACTORS[Kind(kind)] if src != "z"}


@dataclass(frozen=True)
class PowerMatrixSpec:
    kind: Kind
    base: InfiniteMatrix
    g: Optional[PowerSeries] = None
    h: Optional[PowerSeries] = None
    z: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "z", complex(self.z))
        for name in needs(self.kind):
            if getattr(self, name) is None:
                raise ValueError(f"{self.kind.value} power matrix requires series {name}")

    def at(self, z) -> "PowerMatrixSpec":
        return PowerMatrixSpec(self.kind, self.base, self.g, self.h, z)


class PowerMatrix(InfiniteMatrix):
    """Entries a_ij times the kind's factors, evaluated in formula order.

    Entries whose linear value overflows or underflows are rebuilt from the
    log-magnitudes and phases of the factors, so blocks stay usable far
    beyond float range.
    """

    def __init__(self, spec: PowerMatrixSpec):
        self.spec = spec
        desc = f"{spec.kind.value} power matrix of {spec.base.description} at z={spec.z}"
        super().__init__(self._entries, desc, self._logs)

    def _factor(self, src: str, idx: np.ndarray):
        z = self.spec.z
        if src == "z":
            return power_int(z, idx), log_power_int(abs(z), idx)
        series = self.spec.g if src == "g" else self.spec.h
        with np.errstate(all="ignore"):
            vals = np.asarray(series.coeff(idx), dtype=complex)
            vals = np.broadcast_to(vals, idx.shape)
            if series.log_abs is not None:
                logs = np.broadcast_to(np.asarray(series.log_abs(idx), dtype=float), idx.shape)
            else:
                logs = np.log(np.abs(vals))
        return vals, logs

    def _parts(self, i, j, base_vals, base_logs):
        vals = base_vals
        logs = base_logs
        phase = _phase(base_vals)
        with np.errstate(all="ignore"):
            for axis, src in _FACTORS[self.spec.kind]:
                idx = i if axis == "i" else j if axis == "j" else i + j
                fv, fl = self._factor(src, idx)
                vals = vals * fv
                logs = logs + fl
                phase = phase * _phase(fv)
        return _repair(vals, logs, phase), logs

    def _entries(self, i, j):
        base = self.spec.base
        return self._parts(i, j, base.values(i, j), base.log_magnitudes(i, j))[0]

    def _logs(self, i, j):
        base = self.spec.base
        return self._parts(i, j, base.values(i, j), base.log_magnitudes(i, j))[1]

    def _compute_block(self, rows: int, cols: int):
        base = self.spec.base
        i = np.arange(rows)[:, None]
        j = np.arange(cols)[None, :]
        vals, logs = self._parts(i, j, base.block(rows, cols), base.log_block(rows, cols))
        shape = (rows, cols)
        return np.broadcast_to(vals, shape).copy(), np.broadcast_to(logs, shape).copy()


def _phase(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    mag = np.abs(v)
    with np.errstate(all="ignore"):
        unit = v / mag
    ok = np.isfinite(unit)
    signs = np.where(np.isinf(v.real), np.sign(v.real), 1.0) + 0j
    return np.where(ok, unit, signs)


def _repair(vals, logs, phase):
    vals = np.asarray(vals, dtype=complex)
    broken = ~np.isfinite(vals) | ((vals == 0) & (logs > -700))
    if not np.any(broken):
        return vals
    vals = np.array(np.broadcast_to(vals, np.broadcast(vals, logs).shape))
    logs_b = np.broadcast_to(logs, vals.shape)
    phase_b = np.broadcast_to(phase, vals.shape)
    broken = np.broadcast_to(broken, vals.shape)
    with np.errstate(all="ignore"):
        vals[broken] = phase_b[broken] * np.exp(logs_b[broken])
    return vals


def build(spec: PowerMatrixSpec) -> InfiniteMatrix:
    return PowerMatrix(spec)


# ---------------------------------------------------------------------------
# equivalence verifiers


class Consistency(str, enum.Enum):
    AGREE = "agree"
    DISAGREE = "disagree"
    INCONCLUSIVE = "inconclusive"
    HYPOTHESIS_VIOLATED = "hypothesis-violated"


@dataclass(frozen=True)
class EquivalenceReport:
    """Both sides of an equivalence, computed independently and compared.

    ``condition_i`` is the limit condition on the coefficient sequence,
    ``condition_ii`` the regularity report of the induced matrix.  When the
    convergence hypothesis of the statement is not met the comparison is
    reported as HYPOTHESIS_VIOLATED rather than Agree or Disagree.
    """

    condition_i: Verdict
    condition_ii: RegularityReport
    consistent: Consistency
    base: RegularityReport
    hypothesis_met: bool = True
    diagnostics: dict = field(default_factory=dict)


def _compare(ci: Status, cii: Status) -> Consistency:
    if Status.INCONCLUSIVE in (ci, cii):
        return Consistency.INCONCLUSIVE
    return Consistency.AGREE if ci is cii else Consistency.DISAGREE


def _regular_base(A: InfiniteMatrix, policy) -> RegularityReport:
    rep = check_regular(A, policy)
    if not rep.regular.passed:
        raise ValueError("proposition requires regular base "
                         f"(base regularity is {rep.regular.status.value})")
    return rep


def _radius_note(series: PowerSeries, z: complex, policy) -> dict:
    r = series_radius(series, policy)
    return {"series_radius": r, "abs_z": abs(z),
            "note": "condition (i) forces |z| to equal the series radius; recorded, not asserted"}


def _verify_single(kind: Kind, A, series, z, policy, hypothesis: bool) -> EquivalenceReport:
    base = _regular_base(A, policy)
    z = complex(z)
    est = estimate_limit(series.times_power(z), policy)
    ci = _target_verdict(est, 1.0, policy, sequence="g_k z^k" if kind is not Kind.ROW_GENERAL else "h_k z^k")
    spec = PowerMatrixSpec(kind, A, g=series if kind is not Kind.ROW_GENERAL else None,
                           h=series if kind is Kind.ROW_GENERAL else None, z=z)
    cii = check_regular(build(spec), policy)
    met = est.status is not LimitStatus.NOT_CONVERGED or not hypothesis
    consistent = _compare(ci.status, cii.regular.status)
    if not met:
        consistent = Consistency.HYPOTHESIS_VIOLATED
    diag = {"radius": _radius_note(series, z, policy)}
    return EquivalenceReport(ci, cii, consistent, base, met, diag)


def verify_prop1(kind, A: InfiniteMatrix, series: PowerSeries, z,
                 policy: TruncationPolicy = DEFAULT_POLICY) -> EquivalenceReport:
    """Regularity of the general column (row) power matrix versus g_k z^k -> 1.

    For the row kind the statement assumes {h_k z^k} converges; a
    non-convergent h_k z^k is reported as a hypothesis violation.
    """
    kind = Kind(kind)
    if kind not in (Kind.COLUMN_GENERAL, Kind.ROW_GENERAL):
        raise ValueError("verify_prop1 takes the column-general or row-general kind")
    return _verify_single(kind, A, series, z, policy, hypothesis=kind is Kind.ROW_GENERAL)


def verify_theorem1II(A: InfiniteMatrix, g: PowerSeries, z,
                      policy: TruncationPolicy = DEFAULT_POLICY) -> EquivalenceReport:
    """Regularity of the type-2 matrix a_ij g_(i+j) z^(i+j) versus g_k z^k -> 1.

    The statement assumes g_k z^k converges.  The regularity of the shift
    matrix b_ik = a_(i,k-i) used in the argument is included as a diagnostic.
    """
    rep = _verify_single(Kind.TYPE2, A, g, z, policy, hypothesis=True)
    shift = check_regular(shifted_matrix(A), policy)
    diag = dict(rep.diagnostics, shift_regular=shift.regular.status.value)
    return EquivalenceReport(rep.condition_i, rep.condition_ii, rep.consistent, rep.base,
                             rep.hypothesis_met, diag)


def verify_theorem1III(A: InfiniteMatrix, g: PowerSeries, h: PowerSeries, z,
                       policy: TruncationPolicy = DEFAULT_POLICY) -> EquivalenceReport:
    """Regularity of a_ij g_i h_j z^(i+j) versus lim g_k z^k * lim h_k z^k = 1."""
    base = _regular_base(A, policy)
    z = complex(z)
    eg = estimate_limit(g.times_power(z), policy)
    eh = estimate_limit(h.times_power(z), policy)
    if not (eg.converged and eh.converged):
        raise ValueError("theorem hypothesis unmet: both limits must exist "
                         f"(got {eg.status.value} and {eh.status.value})")
    value = eg.value * eh.value
    error = abs(eh.value) * eg.error + abs(eg.value) * eh.error + eg.error * eh.error
    prod = LimitEstimate(LimitStatus.CONVERGED, value, max(eg.spread, eh.spread), error,
                         eg.terms_used, "product")
    ci = _target_verdict(prod, 1.0, policy, limit_g=eg.value, limit_h=eh.value)
    cii = check_regular(build(PowerMatrixSpec(Kind.TYPE3, A, g=g, h=h, z=z)), policy)
    return EquivalenceReport(ci, cii, _compare(ci.status, cii.regular.status), base, True, {})


@dataclass(frozen=True)
class SubcriticalReport:
    regularity: RegularityReport
    holds: Verdict


def check_subcritical(A: InfiniteMatrix, g: PowerSeries, z,
                      policy: TruncationPolicy = DEFAULT_POLICY) -> SubcriticalReport:
    """Below the radius of g the type-2 matrix keeps conditions 1 and 2 but its
    row sums tend to 0, so it is not regular."""
    z = complex(z)
    r = series_radius(g, policy)
    if not abs(z) < r:
        raise ValueError(f"corollary requires subcritical z (|z| = {abs(z)}, radius = {r})")
    rep = check_regular(build(PowerMatrixSpec(Kind.TYPE2, A, g=g, z=z)), policy)
    col = conjunction(v.status for v in rep.cond2)
    if rep.row_sums is None:
        zero = Verdict(rep.cond3.status, dict(rep.cond3.evidence), policy)
    else:
        zero = _target_verdict(rep.row_sums, 0.0, policy)
    status = conjunction([rep.cond1.status, col, zero.status])
    ev = {"cond1": rep.cond1.status.value, "cond2": col.value, "row_sum_limit_zero": zero.status.value,
          "row_sum_limit": rep.row_sum_limit, "series_radius": r}
    return SubcriticalReport(rep, Verdict(status, ev, policy))
