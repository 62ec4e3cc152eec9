"""Row radii, radius of summability by bisection, and the monotonicity and
comparison checks built on them.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .matrices import InfiniteMatrix, Status, Verdict, check_bounded
from .numerics import (
    DEFAULT_POLICY,
    PowerSeries,
    TruncationPolicy,
    limsup_root_from_logs,
    radius_from_root,
)
from .power import Kind, PowerMatrixSpec, build

_WEAKNESS = {Status.FAIL: 0, Status.INCONCLUSIVE: 1, Status.PASS: 2}


@dataclass(frozen=True)
class RowRadii:
    values: tuple
    min_over_rows: float


@dataclass(frozen=True)
class Probe:
    modulus: float
    verdict: Verdict


@dataclass(frozen=True)
class RadiusEstimate:
    """Bracket [lower, upper] for the radius of summability.

    ``lower`` is the largest modulus with a Pass probe (0 if none passed);
    ``upper`` is the smallest modulus with a Fail probe, or the radius cap
    with ``capped`` set when no probe failed.  Inconclusive probes are kept
    in ``probes`` but never move either end.
    """

    lower: float
    upper: float
    capped: bool
    probes: tuple
    angles_sampled: int
    kind: Kind
    extension: bool
    inconsistent: bool = False
    notes: tuple = field(default_factory=tuple)


def row_radius(A: InfiniteMatrix, i: int, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """Radius of convergence of the power series with coefficients a_ij, j >= 0."""
    N = policy.terms
    k = np.arange(N // 2, N + 1)
    logs = A.log_magnitudes(np.full_like(k, i), k)
    return radius_from_root(limsup_root_from_logs(logs, k.astype(float), policy.window), policy)


def row_radii(A: InfiniteMatrix, policy: TruncationPolicy = DEFAULT_POLICY) -> RowRadii:
    I, N = policy.rows, policy.terms
    L = A.log_block(I, N)
    k = np.arange(N // 2, N, dtype=float)
    vals = tuple(radius_from_root(limsup_root_from_logs(L[r, N // 2:], k, policy.window), policy)
                 for r in range(I))
    return RowRadii(vals, min(vals))


def membership_at(spec: PowerMatrixSpec, z, policy: TruncationPolicy = DEFAULT_POLICY) -> Verdict:
    """Membership in B_c of the power matrix described by ``spec``, taken at ``z``."""
    rep = check_bounded(build(spec.at(z)), policy)
    return rep.member_of_Bc


def _membership_on_circle(spec, r, angles, policy) -> Verdict:
    worst = None
    for a in range(angles):
        z = r * cmath.exp(2j * math.pi * a / angles) if a else complex(r)
        v = membership_at(spec, z, policy)
        if worst is None or _WEAKNESS[v.status] < _WEAKNESS[worst.status]:
            worst = Verdict(v.status, dict(v.evidence, angle_index=a), policy)
    return worst


def radius_of_summability(kind, A: InfiniteMatrix, g: Optional[PowerSeries] = None,
                          h: Optional[PowerSeries] = None,
                          policy: TruncationPolicy = DEFAULT_POLICY,
                          angles: int = 1) -> RadiusEstimate:
    """Bisection on |z| over membership of the power matrix in B_c.

    Each step probes the midpoint of the widest unresolved gap: between the
    certified lower end and the smallest Inconclusive modulus, or between the
    largest Inconclusive modulus and the certified upper end.
    """
    kind = Kind(kind)
    spec = PowerMatrixSpec(kind, A, g, h, 0.0)
    lo, hi = 0.0, float(policy.radius_cap)
    capped = True
    open_points: list = []
    probes = []
    inconsistent = False
    seen = set()
    for _ in range(policy.bisection_steps):
        inside = sorted(m for m in open_points if lo < m < hi)
        if inside:
            gaps = [(lo, inside[0]), (inside[-1], hi)]
        else:
            gaps = [(lo, hi)]
        a, b = max(gaps, key=lambda ab: ab[1] - ab[0])
        mid = 0.5 * (a + b)
        if mid in seen or not (a < mid < b):
            break
        seen.add(mid)
        verdict = _membership_on_circle(spec, mid, angles, policy)
        probes.append(Probe(mid, verdict))
        if verdict.status is Status.PASS:
            if mid >= hi:
                inconsistent = True
            lo = max(lo, mid)
        elif verdict.status is Status.FAIL:
            if mid <= lo:
                inconsistent = True
            hi = min(hi, mid)
            capped = False
        else:
            open_points.append(mid)
    notes = []
    if kind is not Kind.ROW_SIMPLE:
        notes.append("radius for a non-row kind is an extension of the row-kind definition")
    return RadiusEstimate(lo, hi, capped, tuple(probes), angles, kind,
                          kind is not Kind.ROW_SIMPLE, inconsistent, tuple(notes))


def check_corollary3(A: InfiniteMatrix, policy: TruncationPolicy = DEFAULT_POLICY,
                     estimate: Optional[RadiusEstimate] = None) -> Verdict:
    """A member of B_c has radius of summability at least 1."""
    member = check_bounded(A, policy).member_of_Bc
    if not member.passed:
        return Verdict(Status.PASS, {"vacuous": True, "membership": member.status.value}, policy)
    est = estimate or radius_of_summability(Kind.ROW_SIMPLE, A, policy=policy)
    ev = {"vacuous": False, "upper": est.upper, "capped": est.capped, "threshold": 1 - 0.02}
    return Verdict(Status.PASS if est.upper >= 1 - 0.02 else Status.FAIL, ev, policy)


def check_prop4(A: InfiniteMatrix, policy: TruncationPolicy = DEFAULT_POLICY,
                estimate: Optional[RadiusEstimate] = None,
                radii: Optional[RowRadii] = None) -> Verdict:
    """The radius of summability does not exceed the smallest row radius."""
    est = estimate or radius_of_summability(Kind.ROW_SIMPLE, A, policy=policy)
    radii = radii or row_radii(A, policy)
    ok = est.lower <= radii.min_over_rows + 0.02
    ev = {"lower": est.lower, "min_row_radius": radii.min_over_rows, "slack": 0.02}
    return Verdict(Status.PASS if ok else Status.FAIL, ev, policy)


def check_prop2_monotone(kind, A: InfiniteMatrix, g: Optional[PowerSeries] = None,
                         h: Optional[PowerSeries] = None, moduli=(),
                         policy: TruncationPolicy = DEFAULT_POLICY) -> Verdict:
    """Membership along ascending moduli never passes after a failure."""
    moduli = [float(m) for m in moduli]
    if moduli != sorted(moduli):
        raise ValueError("moduli must be sorted ascending")
    spec = PowerMatrixSpec(Kind(kind), A, g, h, 0.0)
    statuses = [membership_at(spec, m, policy).status for m in moduli]
    first_fail = next((n for n, s in enumerate(statuses) if s is Status.FAIL), None)
    later_pass = None
    if first_fail is not None:
        later_pass = next((n for n in range(first_fail + 1, len(statuses))
                           if statuses[n] is Status.PASS), None)
    ev = {"moduli": moduli, "verdicts": [s.value for s in statuses]}
    if later_pass is not None:
        ev["witness"] = [moduli[first_fail], moduli[later_pass]]
        return Verdict(Status.FAIL, ev, policy)
    return Verdict(Status.PASS, ev, policy)
