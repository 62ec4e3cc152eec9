"""Infinite matrices, sequence transformation and the boundedness and
regularity checks.

A matrix maps c (convergent sequences) boundedly into c exactly when its
absolute row sums are uniformly bounded, every column has a limit and the row
sums have a limit.  It is regular (limit preserving) when in addition the
column limits are 0 and the row-sum limit is 1.  Each condition is checked on
a truncation and reported as a three-valued verdict.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .numerics import (
    DEFAULT_POLICY,
    LOG_FLOAT_MAX,
    LimitEstimate,
    LimitStatus,
    RowStatus,
    Sequence,
    TruncationPolicy,
    _log_abs,
    classify_rows,
    limits_of_arrays,
)
from .parallel import map_chunks


class Status(str, enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


def conjunction(statuses) -> Status:
    statuses = list(statuses)
    if any(s is Status.FAIL for s in statuses):
        return Status.FAIL
    if any(s is Status.INCONCLUSIVE for s in statuses):
        return Status.INCONCLUSIVE
    return Status.PASS


@dataclass(frozen=True)
class Verdict:
    """A three-valued outcome.  ``evidence`` holds witness indices and values."""

    status: Status
    evidence: dict = field(default_factory=dict)
    policy_used: TruncationPolicy = DEFAULT_POLICY

    @property
    def passed(self) -> bool:
        return self.status is Status.PASS


class InfiniteMatrix:
    """A lazily evaluated double sequence a_ij, i, j >= 0.

    ``fn(i, j)`` is vectorized over broadcast integer arrays.  ``log_abs``,
    when given, returns log|a_ij| and is used wherever entries leave float
    range.  Blocks of the form [0, rows) x [0, cols) are cached; the cache is
    invisible apart from speed.
    """

    def __init__(self, fn: Callable, description: str = "", log_abs: Optional[Callable] = None):
        self.fn = fn
        self.description = description
        self.log_abs = log_abs
        self._blocks: dict = {}

    def __repr__(self):
        return f"InfiniteMatrix({self.description!r})"

    def values(self, i, j) -> np.ndarray:
        i, j = np.broadcast_arrays(np.asarray(i), np.asarray(j))
        with np.errstate(all="ignore"):
            out = np.asarray(self.fn(i, j), dtype=complex)
        return np.broadcast_to(out, i.shape).copy() if out.shape != i.shape else out

    def log_magnitudes(self, i, j) -> np.ndarray:
        if self.log_abs is None:
            return _log_abs(self.values(i, j))
        i, j = np.broadcast_arrays(np.asarray(i), np.asarray(j))
        with np.errstate(all="ignore"):
            out = np.asarray(self.log_abs(i, j), dtype=float)
        return np.broadcast_to(out, i.shape).copy() if out.shape != i.shape else out

    def entry(self, i, j):
        """a_ij; a complex for scalar indices, an array for array indices."""
        out = self.values(i, j)
        return complex(out) if out.ndim == 0 else out

    def _compute_block(self, rows: int, cols: int):
        i = np.arange(rows)[:, None]
        j = np.arange(cols)[None, :]
        return self.values(i, j), self.log_magnitudes(i, j)

    def _block_pair(self, rows: int, cols: int):
        key = (rows, cols)
        hit = self._blocks.get(key)
        if hit is None:
            v, lg = self._compute_block(rows, cols)
            v.setflags(write=False)
            lg.setflags(write=False)
            hit = (v, lg)
            if len(self._blocks) >= 4:
                self._blocks.pop(next(iter(self._blocks)))
            self._blocks[key] = hit
        return hit

    def block(self, rows: int, cols: int) -> np.ndarray:
        return self._block_pair(rows, cols)[0]

    def log_block(self, rows: int, cols: int) -> np.ndarray:
        return self._block_pair(rows, cols)[1]


class ParamMatrix:
    """A family z -> A(z) of matrices with a common index domain."""

    def __init__(self, at: Callable, domain_note: str = ""):
        self._at = at
        self.domain_note = domain_note

    def at(self, z) -> InfiniteMatrix:
        return self._at(complex(z))


def zero_matrix() -> InfiniteMatrix:
    return InfiniteMatrix(lambda i, j: np.zeros(np.broadcast(i, j).shape), "zero matrix",
                          log_abs=lambda i, j: np.full(np.broadcast(i, j).shape, -np.inf))


def identity_matrix() -> InfiniteMatrix:
    return InfiniteMatrix(lambda i, j: (i == j).astype(float), "identity matrix")


def shifted_matrix(A: InfiniteMatrix) -> InfiniteMatrix:
    """b_ik = a_{i,k-i} for k >= i, else 0."""

    def fn(i, k):
        inside = k >= i
        vals = A.values(i, np.where(inside, k - i, 0))
        return np.where(inside, vals, 0)

    def log_abs(i, k):
        inside = k >= i
        vals = A.log_magnitudes(i, np.where(inside, k - i, 0))
        return np.where(inside, vals, -np.inf)

    return InfiniteMatrix(fn, f"shift of {A.description}", log_abs)


# ---------------------------------------------------------------------------
# transformation


@dataclass(frozen=True)
class TransformResult:
    """t_i = sum_{j<N} a_ij s_j for i < I, with per-row tail bounds.

    ``flagged_rows`` lists rows whose series did not certify as finite.
    """

    t: Sequence
    prefix: np.ndarray
    per_term_truncation: tuple
    limit: LimitEstimate
    flagged_rows: tuple = ()


def _row_tail_bounds(L: np.ndarray, policy: TruncationPolicy):
    batch = _classify(L, policy)
    bounds = []
    flagged = []
    for r, st in enumerate(batch.status):
        if st is RowStatus.FINITE:
            lt = batch.log_tail[r]
            bounds.append(math.exp(lt) if lt < LOG_FLOAT_MAX else math.inf)
        else:
            bounds.append(math.inf)
            flagged.append(r)
    return batch, tuple(bounds), tuple(flagged)


def _transform_from_terms(t_fn: Callable, prefix: np.ndarray, L: np.ndarray,
                          policy: TruncationPolicy) -> TransformResult:
    _batch, bounds, flagged = _row_tail_bounds(L, policy)
    n = policy.rows
    if any(r >= n // 4 for r in flagged):
        limit = LimitEstimate(LimitStatus.INCONCLUSIVE, None, math.inf, math.inf, n,
                              "rows", note="divergent or unresolved row sums")
    else:
        limit = limits_of_arrays(prefix[None, :], policy)[0]
    return TransformResult(Sequence(t_fn), prefix, bounds, limit, flagged)


def transform(A: InfiniteMatrix, s: Sequence, policy: TruncationPolicy = DEFAULT_POLICY) -> TransformResult:
    I, N = policy.rows, policy.terms
    sv = s.values(N)
    with np.errstate(all="ignore"):
        prefix = (A.block(I, N) * sv[None, :]).sum(axis=1)
        L = A.log_block(I, N) + s.log_magnitudes(N)[None, :]
    cols = np.arange(N)[None, :]

    def t_fn(k):
        k = np.asarray(k)
        flat = k.reshape(-1, 1)
        with np.errstate(all="ignore"):
            out = (A.values(flat, cols) * sv[None, :]).sum(axis=1)
        return out.reshape(k.shape)

    return _transform_from_terms(t_fn, prefix, L, policy)


def apply_operator_form(A: InfiniteMatrix, s: Sequence,
                        policy: TruncationPolicy = DEFAULT_POLICY) -> TransformResult:
    """result_i = a_i0 * lim s + sum_{1<=j<N} a_ij s_j."""
    if s.declared_limit is not None:
        lim = complex(s.declared_limit)
    else:
        est = limits_of_arrays(s.values(policy.rows)[None, :], policy)[0]
        if not est.converged:
            raise ValueError("limit required for operator form")
        lim = est.value
    I, N = policy.rows, policy.terms
    sv = s.values(N).copy()
    sv[0] = lim
    lg = s.log_magnitudes(N)
    lg[0] = math.log(abs(lim)) if lim != 0 else -math.inf
    with np.errstate(all="ignore"):
        prefix = (A.block(I, N) * sv[None, :]).sum(axis=1)
        L = A.log_block(I, N) + lg[None, :]
    cols = np.arange(N)[None, :]

    def t_fn(k):
        k = np.asarray(k)
        flat = k.reshape(-1, 1)
        with np.errstate(all="ignore"):
            out = (A.values(flat, cols) * sv[None, :]).sum(axis=1)
        return out.reshape(k.shape)

    return _transform_from_terms(t_fn, prefix, L, policy)


# ---------------------------------------------------------------------------
# boundedness and regularity


@dataclass(frozen=True)
class BoundednessReport:
    cond1: Verdict
    norm_estimate: Optional[float]
    cond2: tuple
    cond3: Verdict
    row_sum_limit: Optional[complex]
    member_of_Bc: Verdict
    row_sums: Optional[LimitEstimate] = None


@dataclass(frozen=True)
class RegularityReport:
    cond1: Verdict
    norm_estimate: Optional[float]
    cond2: tuple
    cond3: Verdict
    row_sum_limit: Optional[complex]
    regular: Verdict
    row_sums: Optional[LimitEstimate] = None


def _classify(L, policy):
    parts = map_chunks(lambda a, b: [classify_rows(L[a:b], policy)], L.shape[0], min_chunk=32)
    if len(parts) == 1:
        return parts[0]
    from .numerics import RowBatch
    return RowBatch(
        np.concatenate([p.status for p in parts]),
        np.concatenate([p.log_sum for p in parts]),
        np.concatenate([p.log_tail for p in parts]),
        np.concatenate([p.certified for p in parts]),
        np.concatenate([p.witness for p in parts]),
        [r for p in parts for r in p.reason],
    )


def _limits(X, policy, L=None):
    return map_chunks(lambda a, b: limits_of_arrays(X[a:b], policy, None if L is None else L[a:b]),
                      X.shape[0])


def _limit_evidence(est: LimitEstimate) -> dict:
    ev = {"limit_status": est.status.value, "method": est.method,
          "window_spread": est.spread, "error": est.error}
    if est.value is not None:
        ev["value"] = est.value
    if est.witness is not None:
        ev["witness"] = list(est.witness)
    if est.note:
        ev["note"] = est.note
    return ev


def _existence_verdict(est: LimitEstimate, policy, **extra) -> Verdict:
    ev = dict(extra, **_limit_evidence(est))
    if est.status is LimitStatus.CONVERGED:
        return Verdict(Status.PASS, ev, policy)
    if est.status is LimitStatus.NOT_CONVERGED:
        return Verdict(Status.FAIL, ev, policy)
    return Verdict(Status.INCONCLUSIVE, ev, policy)


def _target_verdict(est: LimitEstimate, target: complex, policy, **extra) -> Verdict:
    tol = 10 * policy.eps
    ev = dict(extra, target=target, tolerance=tol, **_limit_evidence(est))
    if est.status is LimitStatus.NOT_CONVERGED:
        return Verdict(Status.FAIL, ev, policy)
    if est.status is LimitStatus.INCONCLUSIVE:
        return Verdict(Status.INCONCLUSIVE, ev, policy)
    dev = abs(est.value - target)
    ev["deviation"] = dev
    if dev <= tol and est.error <= tol:
        return Verdict(Status.PASS, ev, policy)
    if dev > tol + est.error:
        return Verdict(Status.FAIL, ev, policy)
    return Verdict(Status.INCONCLUSIVE, ev, policy)


@dataclass(frozen=True)
class _Scan:
    cond1: Verdict
    norm: Optional[float]
    columns: list
    row_sums: Optional[LimitEstimate]
    row_sum_issue: Optional[Verdict]


def _scan(A: InfiniteMatrix, policy: TruncationPolicy) -> _Scan:
    I, J, N = policy.rows, policy.cols, policy.terms
    V = A.block(I, N)
    L = A.log_block(I, N)
    rows = _classify(L, policy)
    status = rows.status
    log_s = rows.log_sum

    # condition 1: uniformly bounded absolute row sums
    norm = None
    divergent = [r for r in range(I) if status[r] is RowStatus.DIVERGENT]
    unresolved = [r for r in range(I) if status[r] is RowStatus.INCONCLUSIVE]
    if divergent:
        r = divergent[0]
        cond1 = Verdict(Status.FAIL, {"row": r, "index": int(rows.witness[r]),
                                      "reason": rows.reason[r], "partial_log_sum": float(log_s[r])},
                        policy)
    elif unresolved:
        cond1 = Verdict(Status.INCONCLUSIVE, {"rows": unresolved[:8], "unresolved_count": len(unresolved),
                                              "reason": rows.reason[unresolved[0]]}, policy)
    else:
        top = int(np.argmax(log_s))
        first_half = float(np.max(log_s[:I // 2]))
        log_sup = float(log_s[top])
        base = {"sup_row": top, "log_sup": log_sup}
        if log_sup - first_half <= math.log1p(1e-6):
            norm = math.exp(log_sup) if log_sup < LOG_FLOAT_MAX else math.inf
            cond1 = Verdict(Status.PASS, dict(base, M=norm, method="sup stabilized"), policy)
        else:
            linear = log_sup < LOG_FLOAT_MAX - 1
            seq = np.exp(log_s) if linear else log_s
            est = limits_of_arrays(seq.astype(complex)[None, :], policy)[0]
            ev = dict(base, scale="linear" if linear else "log", **_limit_evidence(est))
            if est.status is LimitStatus.CONVERGED:
                lim = est.value.real
                if linear:
                    lim = math.log(lim) if lim > 0 else -math.inf
                log_m = max(log_sup, lim)
                norm = math.exp(log_m) if log_m < LOG_FLOAT_MAX else math.inf
                cond1 = Verdict(Status.PASS, dict(ev, M=norm, method="row sums converge"), policy)
            elif est.status is LimitStatus.NOT_CONVERGED:
                cond1 = Verdict(Status.FAIL, dict(ev, reason="absolute row sums keep growing"), policy)
            else:
                cond1 = Verdict(Status.INCONCLUSIVE, ev, policy)

    # condition 2: column limits
    J = min(J, N)
    columns = _limits(np.ascontiguousarray(V[:, :J].T), policy, np.ascontiguousarray(L[:, :J].T))

    # condition 3: row sums, using only rows in the region the detector reads
    tail_rows = range(I // 8, I)
    bad = [r for r in tail_rows if status[r] is RowStatus.DIVERGENT]
    open_ = [r for r in tail_rows if status[r] is RowStatus.INCONCLUSIVE]
    row_sums = None
    issue = None
    if bad:
        issue = Verdict(Status.FAIL, {"row": bad[0], "reason": "row series diverges: " + rows.reason[bad[0]]},
                        policy)
    elif open_:
        issue = Verdict(Status.INCONCLUSIVE, {"row": open_[0], "reason": "row series unresolved"}, policy)
    else:
        with np.errstate(all="ignore"):
            sums = V.sum(axis=1)
        row_sums = limits_of_arrays(sums[None, :], policy, log_s[None, :])[0]
    return _Scan(cond1, norm, columns, row_sums, issue)


def check_bounded(A: InfiniteMatrix, policy: TruncationPolicy = DEFAULT_POLICY) -> BoundednessReport:
    """Membership of A in B_c (bounded maps of c into c)."""
    sc = _scan(A, policy)
    cond2 = tuple(_existence_verdict(est, policy, column=j) for j, est in enumerate(sc.columns))
    if sc.row_sum_issue is not None:
        cond3, lim = sc.row_sum_issue, None
    else:
        cond3 = _existence_verdict(sc.row_sums, policy)
        lim = sc.row_sums.value
    member = _combine(sc.cond1, cond2, cond3, policy)
    return BoundednessReport(sc.cond1, sc.norm, cond2, cond3, lim, member, sc.row_sums)


def check_regular(A: InfiniteMatrix, policy: TruncationPolicy = DEFAULT_POLICY) -> RegularityReport:
    """Silverman-Toeplitz regularity: bounded rows, null columns, row sums to 1."""
    sc = _scan(A, policy)
    cond2 = tuple(_target_verdict(est, 0.0, policy, column=j) for j, est in enumerate(sc.columns))
    if sc.row_sum_issue is not None:
        cond3, lim = sc.row_sum_issue, None
    else:
        cond3 = _target_verdict(sc.row_sums, 1.0, policy)
        lim = sc.row_sums.value
    regular = _combine(sc.cond1, cond2, cond3, policy)
    return RegularityReport(sc.cond1, sc.norm, cond2, cond3, lim, regular, sc.row_sums)


def _combine(cond1: Verdict, cond2, cond3: Verdict, policy) -> Verdict:
    parts = {"cond1": cond1.status, "cond3": cond3.status}
    col_status = conjunction(v.status for v in cond2)
    parts["cond2"] = col_status
    ev = {k: v.value for k, v in parts.items()}
    failing = [v.evidence.get("column") for v in cond2 if v.status is Status.FAIL]
    if failing:
        ev["failing_columns"] = failing[:8]
    return Verdict(conjunction(parts.values()), ev, policy)


def operator_norm_estimate(A: InfiniteMatrix, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """The stabilized sup of absolute row sums; requires condition 1 to pass."""
    sc = _scan(A, policy)
    if not sc.cond1.passed:
        raise ValueError(f"norm undefined: row-sum condition is {sc.cond1.status.value}")
    return sc.norm
