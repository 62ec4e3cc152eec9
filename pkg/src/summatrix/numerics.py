"""Numerical substrate: truncation policy, lazy sequences, limit detection,
row-sum classification and limsup-root radius estimates.

Everything here works on numpy arrays.  A sequence is evaluated once on a
prefix of indices and the resulting arrays are analysed in bulk, so the same
machinery handles one sequence or a batch of matrix columns.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

# Magnitudes above this are compared in log space rather than linearly.
LOG_SPACE_THRESHOLD = 1e150
# Largest log-magnitude that still converts to a finite float.
LOG_FLOAT_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class TruncationPolicy:
    """Cutoffs and tolerances that turn the infinite conditions into finite checks.

    ``rows`` is I (rows scanned), ``cols`` is J (columns whose limits are
    tested), ``terms`` is N (terms per row sum), ``window`` is W (the Cauchy
    window).  ``radius_cap`` is the sentinel used for an unbounded radius.
    """

    rows: int = 512
    cols: int = 64
    terms: int = 2048
    eps: float = 1e-8
    window: int = 16
    radius_cap: float = 1e6
    bisection_steps: int = 40

    def __post_init__(self):
        for name in ("rows", "cols", "terms", "window", "bisection_steps"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ValueError(f"{name} must be an integer, got {value!r}")
            if value < 2:
                raise ValueError(f"{name} must be at least 2, got {value}")
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not (self.radius_cap > 0):
            raise ValueError(f"radius_cap must be positive, got {self.radius_cap}")
        if self.window > self.rows:
            raise ValueError("window must not exceed rows")

    def replace(self, **changes) -> "TruncationPolicy":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TruncationPolicy":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown policy keys: {sorted(unknown)}")
        return cls(**data)


DEFAULT_POLICY = TruncationPolicy()


def _as_complex(values, shape) -> np.ndarray:
    out = np.asarray(values, dtype=complex)
    if out.shape != shape:
        out = np.broadcast_to(out, shape).copy()
    return out


def _log_abs(values: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = np.array(np.log(np.abs(values)), dtype=float)
    # nan means the value itself was nan; treat it as an overflow marker
    out[np.isnan(out)] = np.inf
    return out


class _Stream:
    """Shared evaluation helpers for index-to-scalar streams."""

    def _fn(self) -> Callable:
        raise NotImplementedError

    def values(self, n: int, start: int = 0) -> np.ndarray:
        k = np.arange(start, start + n)
        with np.errstate(all="ignore"):
            return _as_complex(self._fn()(k), k.shape)

    def log_magnitudes(self, n: int, start: int = 0) -> np.ndarray:
        k = np.arange(start, start + n)
        if self.log_abs is not None:
            with np.errstate(all="ignore"):
                out = np.asarray(self.log_abs(k), dtype=float)
            return np.broadcast_to(out, k.shape).copy()
        return _log_abs(self.values(n, start))

    def __call__(self, k):
        with np.errstate(all="ignore"):
            return complex(np.asarray(self._fn()(np.asarray(k))).reshape(()))


@dataclass(frozen=True)
class Sequence(_Stream):
    """A lazily evaluated sequence s_0, s_1, ...

    ``term`` is vectorized: it receives an integer ndarray of indices and
    returns values broadcastable to that shape.  ``log_abs`` optionally gives
    log|s_k| directly, for terms whose magnitude is outside float range.
    ``declared_limit`` is trusted metadata and is never verified.
    """

    term: Callable
    declared_limit: Optional[complex] = None
    log_abs: Optional[Callable] = None

    def _fn(self):
        return self.term

    @classmethod
    def pointwise(cls, fn: Callable, **kwargs) -> "Sequence":
        """Wrap a scalar function of k."""
        vec = np.frompyfunc(lambda k: complex(fn(int(k))), 1, 1)
        return cls(lambda k: np.asarray(vec(k), dtype=complex), **kwargs)


@dataclass(frozen=True)
class PowerSeries(_Stream):
    """Coefficient stream g_0, g_1, ... of a formal power series."""

    coeff: Callable
    log_abs: Optional[Callable] = None

    def _fn(self):
        return self.coeff

    def as_sequence(self) -> Sequence:
        return Sequence(self.coeff, log_abs=self.log_abs)

    def times_power(self, z: complex) -> Sequence:
        """The sequence k -> g_k z^k."""
        z = complex(z)
        coeff, log_abs = self.coeff, self.log_abs

        def term(k):
            return np.asarray(coeff(k), dtype=complex) * power_int(z, k)

        log_fn = None
        if log_abs is not None:
            def log_fn(k):
                return np.asarray(log_abs(k), dtype=float) + log_power_int(abs(z), k)
        return Sequence(term, log_abs=log_fn)


# Double-double helpers: a value is an unevaluated sum hi + lo with |lo| tiny.
_SPLIT = 134217729.0  # 2^27 + 1


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _two_prod(a, b):
    p = a * b
    c = _SPLIT * a
    ah = c - (c - a)
    al = a - ah
    c = _SPLIT * b
    bh = c - (c - b)
    bl = b - bh
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _dd_add(xh, xl, yh, yl):
    s, e = _two_sum(xh, yh)
    e = e + (xl + yl)
    h = s + e
    return h, e - (h - s)


def _dd_mul(xh, xl, yh, yl):
    p, e = _two_prod(xh, yh)
    e = e + (xh * yl + xl * yh)
    h = p + e
    return h, e - (h - p)


def _ddc_mul(x, y):
    """Complex product of (re_hi, re_lo, im_hi, im_lo) quadruples."""
    arh, arl, aih, ail = x
    brh, brl, bih, bil = y
    rr = _dd_mul(arh, arl, brh, brl)
    ii = _dd_mul(aih, ail, -bih, -bil)
    ri = _dd_mul(arh, arl, bih, bil)
    ir = _dd_mul(aih, ail, brh, brl)
    return _dd_add(*rr, *ii) + _dd_add(*ri, *ir)


def _renormalize(x, e):
    """Scale a quadruple by an exact power of two so its larger part is near 1."""
    top = np.maximum(np.abs(x[0]), np.abs(x[2]))
    m = np.frexp(np.where(top > 0, top, 1.0))[1]
    return tuple(np.ldexp(v, -m) for v in x), e + m


def _complex_powers(z: complex, kmax: int) -> np.ndarray:
    """z**k for k = 0..kmax, binary powering in double-double then rounded once.

    A separate binary exponent keeps the mantissas near 1, so neither the
    error-free products nor the final result lose range before the last step.
    """
    k = np.arange(kmax + 1)
    one = np.ones(k.shape)
    zero = np.zeros(k.shape)
    acc = (one, zero.copy(), zero.copy(), zero.copy())
    acc_e = np.zeros(k.shape, dtype=np.int64)
    base, base_e = _renormalize(tuple(np.array(v) for v in (z.real, 0.0, z.imag, 0.0)), 0)
    bit = 0
    while (kmax >> bit) > 0:
        step, step_e = _renormalize(_ddc_mul(acc, base), acc_e + base_e)
        use = ((k >> bit) & 1).astype(bool)
        acc = tuple(np.where(use, s_, a_) for s_, a_ in zip(step, acc))
        acc_e = np.where(use, step_e, acc_e)
        base, base_e = _renormalize(_ddc_mul(base, base), 2 * base_e)
        bit += 1
    # clamp so ldexp saturates to inf or 0 instead of wrapping the exponent
    acc_e = np.clip(acc_e, -4000, 4000)
    return np.ldexp(acc[0] + acc[1], acc_e) + 1j * np.ldexp(acc[2] + acc[3], acc_e)


def power_int(z: complex, k) -> np.ndarray:
    """z**k for integer k >= 0 with 0**0 = 1, within an ulp of the exact power.

    Real z goes to libm's pow.  Complex z uses double-double binary powering
    over the exponent range; only exponents past 2^20 fall back to np.power.
    """
    k = np.asarray(k)
    z = complex(z)
    with np.errstate(all="ignore"):
        if z.imag == 0.0:
            return np.power(z.real, k.astype(float)).astype(complex)
        if k.size == 0:
            return np.power(z, k)
        top = int(k.max())
        if top > 1 << 20:
            return np.power(z, k)
        return _complex_powers(z, top)[k]


def log_power_int(r: float, k) -> np.ndarray:
    """k*log(r) with the 0**0 = 1 convention."""
    k = np.asarray(k, dtype=float)
    if r == 0.0:
        return np.where(k == 0, 0.0, -np.inf)
    return k * math.log(r)


# ---------------------------------------------------------------------------
# limit detection


class LimitStatus(str, enum.Enum):
    CONVERGED = "converged"
    NOT_CONVERGED = "not_converged"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class LimitEstimate:
    """Outcome of a limit test on the first ``terms_used`` terms.

    ``spread`` is the pairwise spread of the final raw window.  ``error`` is
    the uncertainty attached to ``value``: the window spread when the raw
    window settled, otherwise the spread of the tail-model extrapolants or
    the dyadic tail bound.  ``witness`` holds a pair of indices (or an
    overflow index) backing a NotConverged outcome.
    """

    status: LimitStatus
    value: Optional[complex]
    spread: float
    error: float
    terms_used: int
    method: str
    witness: Optional[tuple] = None
    note: str = ""

    @property
    def converged(self) -> bool:
        return self.status is LimitStatus.CONVERGED


def _pairwise_spread(x: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        d = np.abs(x[:, :, None] - x[:, None, :])
    return d.max(axis=(1, 2))


def _box_spread(x: np.ndarray) -> np.ndarray:
    if x.shape[1] == 0:
        return np.zeros(x.shape[0])
    with np.errstate(all="ignore"):
        return np.hypot(np.ptp(x.real, axis=1), np.ptp(x.imag, axis=1))


# Tail models for s_k ~ L + sum c_pq u^p log(u)^q, u = (hi+1)/(k+1): entries
# are (power, log exponent).  Each model yields its own extrapolant of L.
_TAIL_MODELS = (
    ((0, 0), (1, 0), (2, 0), (3, 0), (1, 1), (2, 1)),
    ((0, 0), (1, 0), (1, 1), (2, 0), (2, 1), (3, 0), (3, 1)),
    tuple((p, 0) for p in range(6)),
    tuple((p, 0) for p in range(8)),
)


def _tail_basis(u: np.ndarray, model: int) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        lu = np.log(u)
    return np.column_stack([u ** p * (lu if q else 1.0) for p, q in _TAIL_MODELS[model]])


@lru_cache(maxsize=256)
def _tail_weights(offset: int, n: int, stride: int, count: int, model: int):
    """Weights mapping fit windows to the constant term of one tail model.

    For each of the final ``count`` points of the class ``offset::stride`` a
    least squares fit over class points with index in [e/2, e] gives one
    extrapolant of L.  Models needing more than a third of the window's
    points are skipped (empty plan).
    """
    idx = np.arange(offset, n, stride)
    size = len(_TAIL_MODELS[model])
    out = []
    for e in range(max(len(idx) - count, 0), len(idx)):
        hi = idx[e]
        lo = int(np.searchsorted(idx, hi / 2.0))
        pts = idx[lo:e + 1]
        if len(pts) < 3 * size:
            return ()
        u = (hi + 1.0) / (pts + 1.0)
        weights = np.linalg.pinv(_tail_basis(u, model))[0]
        out.append((lo, e + 1, weights))
    return tuple(out)


def _extrapolants(Y: np.ndarray, offset: int, n: int, stride: int, count: int):
    """Per-model extrapolants, a list of (rows, windows) arrays."""
    models = []
    for model in range(len(_TAIL_MODELS)):
        plan = _tail_weights(offset, n, stride, count, model)
        if not plan:
            continue
        out = np.empty((Y.shape[0], len(plan)), dtype=complex)
        with np.errstate(all="ignore"):
            for col, (lo, hi, w) in enumerate(plan):
                out[:, col] = Y[:, lo:hi] @ w
        models.append(out)
    return models


def _model_consensus(models: list):
    """Value and error from the best-agreeing pair of tail models.

    A pair's error is the larger of the gap between the two model means and
    either model's window-to-window spread; the value is taken from the
    steadier model of the pair.  A single model can not vouch for itself.
    """
    if len(models) < 2:
        return None, None
    means = np.column_stack([m.mean(axis=1) for m in models])
    spreads = np.column_stack([_pairwise_spread(m) for m in models])
    best_err = np.full(means.shape[0], np.inf)
    best_val = means[:, 0].copy()
    with np.errstate(invalid="ignore"):
        for a in range(len(models)):
            for b in range(a + 1, len(models)):
                err = np.maximum(np.abs(means[:, a] - means[:, b]),
                                 np.maximum(spreads[:, a], spreads[:, b]))
                val = np.where(spreads[:, a] <= spreads[:, b], means[:, a], means[:, b])
                take = err < best_err
                best_err = np.where(take, err, best_err)
                best_val = np.where(take, val, best_val)
    return best_val, best_err


def _dyadic(Y: np.ndarray, idx: np.ndarray, n: int):
    """Oscillation contraction over the blocks [n/8,n/4), [n/4,n/2), [n/2,n).

    Returns (certified mask, ratio, tail bound).  When the oscillation of the
    last block is at most 3/4 of the previous one and that one did not grow,
    the remaining oscillation is bounded by a geometric tail.
    """
    edges = [n // 8, n // 4, n // 2, n]
    osc = []
    for a, b in zip(edges[:-1], edges[1:]):
        sel = (idx >= a) & (idx < b)
        osc.append(_box_spread(Y[:, sel]))
    o1, o2, o3 = osc
    with np.errstate(divide="ignore", invalid="ignore"):
        r_prev = np.where(o1 > 0, o2 / o1, np.where(o2 > 0, np.inf, 0.0))
        r_last = np.where(o2 > 0, o3 / o2, np.where(o3 > 0, np.inf, 0.0))
    ok = (r_last <= 0.75) & (r_prev <= 1.0) & (o2 > 0)
    tail = np.where(ok, o3 * r_last / (1.0 - np.minimum(r_last, 0.75)), np.inf)
    return ok, r_last, tail


def _class_limits(X: np.ndarray, offset: int, stride: int, eps: float, window: int):
    """Existence tests and value estimates for the subsequence offset::stride."""
    m, n = X.shape
    idx = np.arange(offset, n, stride)
    Y = X[:, offset::stride]
    count = max(2, window // stride)
    guess, delta = _model_consensus(_extrapolants(Y, offset, n, stride, count))
    last = Y[:, -1]
    exists = np.zeros(m, dtype=bool)
    value = last.copy()
    error = np.full(m, np.inf)
    method = np.array(["none"] * m, dtype=object)
    if guess is not None:
        good = delta <= eps
        exists |= good
        value = np.where(good, guess, value)
        error = np.where(good, delta, error)
        method[good] = "extrapolated"
    ok, _ratio, tail = _dyadic(Y, idx, n)
    fresh = ok & ~exists
    if fresh.any():
        exists |= fresh
        if guess is not None:
            inside = np.abs(guess - last) <= tail
            value = np.where(fresh & inside, guess, value)
        error = np.where(fresh, tail, error)
        method[fresh] = "dyadic"
    return exists, value, error, method


def limits_of_arrays(X, policy: TruncationPolicy = DEFAULT_POLICY,
                     log_abs: Optional[np.ndarray] = None) -> list:
    """Limit estimates for each row of ``X`` (one sequence prefix per row).

    The procedure, per sequence:

    1. a non-finite term in the tail region gives NotConverged, unless
       ``log_abs`` shows the magnitude is finite but beyond float range, in
       which case the outcome is Inconclusive;
    2. the final W raw terms pairwise within eps give Converged(window mean);
    3. otherwise the tail is tested for existence of a limit, on the whole
       sequence and on its even/odd subsequences, by the extrapolant
       consistency test and the dyadic contraction test.  Even and odd
       subsequences with distinct limits give NotConverged;
    4. a raw spread that did not shrink at all from the window ending at I/2 to the
       final window gives NotConverged; anything else is Inconclusive.
    """
    with np.errstate(all="ignore"):
        return _limits_impl(X, policy, log_abs)


def _limits_impl(X, policy, log_abs):
    X = np.asarray(X, dtype=complex)
    if X.ndim == 1:
        X = X[None, :]
    m, n = X.shape
    eps = policy.eps
    W = min(policy.window, n)
    start = n // 4
    results: list = [None] * m

    finite = np.isfinite(X[:, start:]).all(axis=1)
    raw = np.zeros(m)
    if finite.any():
        raw[finite] = _pairwise_spread(X[finite, -W:])
    for r in np.flatnonzero(~finite):
        bad = start + int(np.flatnonzero(~np.isfinite(X[r, start:]))[0])
        representable = log_abs is not None and np.isfinite(log_abs[r, bad])
        if representable:
            results[r] = LimitEstimate(LimitStatus.INCONCLUSIVE, None, math.inf, math.inf, n,
                                       "overflow", ("overflow", bad),
                                       "magnitude beyond float range")
        else:
            results[r] = LimitEstimate(LimitStatus.NOT_CONVERGED, None, math.inf, math.inf, n,
                                       "overflow", ("overflow", bad), "non-finite term")

    settled = finite & (raw <= eps)
    for r in np.flatnonzero(settled):
        results[r] = LimitEstimate(LimitStatus.CONVERGED, complex(X[r, -W:].mean()),
                                   float(raw[r]), float(raw[r]), n, "window")

    rest = np.flatnonzero(finite & ~settled)
    if rest.size == 0:
        return results
    Xr = X[rest]
    one = _class_limits(Xr, 0, 1, eps, W)
    even = _class_limits(Xr, 0, 2, eps, W)
    odd = _class_limits(Xr, 1, 2, eps, W)
    mid_end = max(n // 2, W)
    mid_spread = _pairwise_spread(Xr[:, mid_end - W:mid_end])

    for pos, r in enumerate(rest):
        options = []
        if one[0][pos]:
            options.append((one[2][pos], one[1][pos], one[3][pos]))
        split_witness = None
        if even[0][pos] and odd[0][pos]:
            ve, vo = even[1][pos], odd[1][pos]
            ee, eo = even[2][pos], odd[2][pos]
            gap = abs(ve - vo)
            if gap <= max(eps, ee + eo):
                err = max(ee, eo, gap / 2)
                options.append((err, (ve + vo) / 2, "parity-" + str(even[3][pos])))
            elif max(ee, eo) <= eps or gap > 2 * (ee + eo):
                split_witness = (n - 2 + (n % 2), n - 1 - (n % 2))
        if options:
            err, val, how = min(options, key=lambda t: t[0])
            results[r] = LimitEstimate(LimitStatus.CONVERGED, complex(val), float(raw[r]),
                                       float(err), n, how)
            continue
        if split_witness is not None:
            results[r] = LimitEstimate(LimitStatus.NOT_CONVERGED, None, float(raw[r]), math.inf, n,
                                       "parity", split_witness,
                                       "even and odd subsequences have distinct limits")
            continue
        if raw[r] >= (1 - 1e-6) * mid_spread[pos]:
            window = Xr[pos, -W:]
            d = np.abs(window[:, None] - window[None, :])
            a, b = np.unravel_index(int(np.argmax(d)), d.shape)
            results[r] = LimitEstimate(LimitStatus.NOT_CONVERGED, None, float(raw[r]), math.inf, n,
                                       "window", (n - W + int(min(a, b)), n - W + int(max(a, b))),
                                       "spread does not shrink")
        else:
            results[r] = LimitEstimate(LimitStatus.INCONCLUSIVE, None, float(raw[r]), math.inf, n,
                                       "window")
    return results


def estimate_limit(s: Sequence, policy: TruncationPolicy = DEFAULT_POLICY) -> LimitEstimate:
    """Limit test on the first ``policy.rows`` terms of ``s``."""
    n = policy.rows
    X = s.values(n)[None, :]
    L = s.log_magnitudes(n)[None, :] if s.log_abs is not None else None
    return limits_of_arrays(X, policy, L)[0]


# ---------------------------------------------------------------------------
# absolute row sums


class RowStatus(str, enum.Enum):
    FINITE = "finite"
    DIVERGENT = "divergent"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class RowSum:
    """Classification of a series of magnitudes.

    ``value`` is the partial sum over the first N terms and ``log_value`` its
    logarithm (usable when ``value`` overflows).  ``tail_bound`` bounds the
    omitted tail when ``certified`` is true; for a stabilized sum it is the
    size of the final window, a heuristic rather than a bound.
    """

    status: RowStatus
    value: float
    log_value: float
    tail_bound: float
    certified: bool
    witness: Optional[int]
    reason: str


@dataclass
class RowBatch:
    status: np.ndarray          # object array of RowStatus
    log_sum: np.ndarray
    log_tail: np.ndarray
    certified: np.ndarray
    witness: np.ndarray
    reason: list


def classify_rows(L: np.ndarray, policy: TruncationPolicy = DEFAULT_POLICY) -> RowBatch:
    """Classify each row of log-magnitudes as a finite or divergent series.

    Divergence witnesses, in order: a term that overflowed with no
    log-magnitude available; term ratios that grow like a power of the index
    (factorial growth); terms that stop decreasing while the ratio is not
    heading to zero; a Raabe statistic j(1 - t_{j+1}/t_j) at most 1 and not
    growing (harmonic-like decay).  Finite certificates: the final window
    is negligible relative to the sum; the term ratio is bounded by q < 1 - 2/N
    (geometric tail); a stable Raabe statistic at least 1.25 (power-law tail).
    Rows matching nothing are Inconclusive.
    """
    with np.errstate(all="ignore"):
        return _classify_impl(L, policy)


def _classify_impl(L, policy):
    L = np.asarray(L, dtype=float)
    if L.ndim == 1:
        L = L[None, :]
    m, N = L.shape
    W = max(2, min(policy.window, N // 8))
    log_eps = math.log(policy.eps)

    status = np.array([RowStatus.INCONCLUSIVE] * m, dtype=object)
    reason = ["no certificate"] * m
    witness = np.full(m, -1)
    certified = np.zeros(m, dtype=bool)
    log_tail = np.full(m, np.inf)

    over = np.isposinf(L).any(axis=1)
    safe = np.where(np.isposinf(L), -np.inf, L)
    with np.errstate(all="ignore"):
        log_sum = logsumexp(safe, axis=1)
        log_last = logsumexp(safe[:, -W:], axis=1)
    log_sum = np.where(over, np.inf, log_sum)

    env = np.maximum(safe[:, :-1], safe[:, 1:])
    with np.errstate(all="ignore"):
        d = np.diff(env, axis=1)
    mid = N // 2
    d_end = d[:, -W:]
    d_mid = d[:, mid - W // 2: mid + W // 2]
    valid = np.isfinite(d_end).all(axis=1) & np.isfinite(d_mid).all(axis=1)
    k_end = np.arange(N - 2 - W, N - 2, dtype=float)
    k_mid = np.arange(mid - W // 2, mid + W // 2, dtype=float)
    with np.errstate(all="ignore"):
        mean_end = d_end.mean(axis=1)
        mean_mid = d_mid.mean(axis=1)
        j_end = float(k_end.mean())
        gamma = (mean_end - mean_mid) / math.log(j_end / k_mid.mean())
        # Raabe statistic k (t_k / t_{k+1} - 1)
        raabe_terms = k_end * np.expm1(-d_end)
        raabe_end = raabe_terms.mean(axis=1)
        raabe_min = raabe_terms.min(axis=1)
        raabe_mid = (k_mid * np.expm1(-d_mid)).mean(axis=1)
        stab = np.isneginf(log_last) | (log_last - log_sum <= log_eps)

    for r in range(m):
        if over[r]:
            status[r] = RowStatus.DIVERGENT
            witness[r] = int(np.flatnonzero(np.isposinf(L[r]))[0])
            reason[r] = "term overflow"
            continue
        if valid[r] and gamma[r] > 0.5:
            status[r] = RowStatus.DIVERGENT
            witness[r] = N - W
            reason[r] = "term ratios grow without bound"
            continue
        tails = []
        decreasing = False
        if valid[r]:
            decreasing = d_end[r].max() < 0
            q_log = max(d_end[r].max(), 2 * mean_end[r] - mean_mid[r])
            if q_log < math.log1p(-2.0 / N):
                tails.append(env[r, -1] + q_log - math.log(-math.expm1(q_log)))
            # Raabe: k (t_k/t_{k+1} - 1) >= rho > 1 for k >= K bounds the tail by K t_K/(rho-1)
            rho = raabe_min[r]
            if decreasing and rho >= 1.25 and raabe_end[r] < 1.5 * raabe_mid[r]:
                tails.append(env[r, -1] + math.log((N - 1) / (rho - 1.0)))
        if tails:
            status[r] = RowStatus.FINITE
            certified[r] = True
            log_tail[r] = min(tails)
            reason[r] = "tail certificate"
            continue
        if stab[r]:
            status[r] = RowStatus.FINITE
            log_tail[r] = log_last[r]
            reason[r] = "partial sums stabilized"
            continue
        if not valid[r]:
            continue
        if d_end[r].min() >= 0 and gamma[r] >= -0.5:
            status[r] = RowStatus.DIVERGENT
            witness[r] = N - W
            reason[r] = "terms do not decrease"
            continue
        if decreasing and 0 <= raabe_end[r] <= 1 and raabe_end[r] < 1.5 * raabe_mid[r]:
            status[r] = RowStatus.DIVERGENT
            witness[r] = N - W
            reason[r] = "harmonic-like decay"
    return RowBatch(status, log_sum, log_tail, certified, witness, reason)


def _exp(x: float) -> float:
    if x > LOG_FLOAT_MAX:
        return math.inf
    return math.exp(x) if x > -math.inf else 0.0


def abs_row_sum(terms: Sequence, policy: TruncationPolicy = DEFAULT_POLICY) -> RowSum:
    """Classify sum_k |terms_k| over the first ``policy.terms`` terms."""
    L = terms.log_magnitudes(policy.terms)
    b = classify_rows(L[None, :], policy)
    return _row_from_batch(b, 0)


def _row_from_batch(b: RowBatch, r: int) -> RowSum:
    status = b.status[r]
    tail = _exp(b.log_tail[r]) if status is RowStatus.FINITE else math.inf
    wit = int(b.witness[r]) if b.witness[r] >= 0 else None
    return RowSum(status, _exp(b.log_sum[r]), float(b.log_sum[r]), tail,
                  bool(b.certified[r]), wit, b.reason[r])


# ---------------------------------------------------------------------------
# radius estimates


def limsup_root_from_logs(logs: np.ndarray, k: np.ndarray, window: int) -> float:
    """Limsup proxy max |s_k|^(1/k) from log-magnitudes over the final half.

    A k-th root above 1 that keeps growing by a factor of 1.5 across the
    half-window is read as unbounded, and one below 1 that keeps shrinking by
    that factor as null, which is what factorial-type coefficients do.  A
    root moving toward 1 is left to the plain maximum.

    When every sampled term is nonzero the log term ratios are also checked:
    ratios that fall (or grow) at least like k^(-1/2) (k^(1/2)) in the tail
    mean a ratio limit of 0 (infinity), hence a null (unbounded) root.
    """
    if np.isposinf(logs).any():
        return math.inf
    trend = _ratio_trend(logs, k)
    if trend is not None:
        return trend
    lam = logs / k
    fin = np.isfinite(lam)
    if not fin.any():
        return 0.0
    top = float(lam[fin].max())
    w = max(2, min(window, len(lam) // 4))
    head, tail = lam[:w], lam[-w:]
    if np.isfinite(head).any() and np.isfinite(tail).any():
        end = tail[np.isfinite(tail)].max()
        drift = end - head[np.isfinite(head)].max()
        if drift >= math.log(1.5) and end > 0:
            return math.inf
        if drift <= -math.log(1.5) and end < 0:
            return 0.0
    return _exp(top)


def _ratio_trend(logs: np.ndarray, k: np.ndarray):
    if len(logs) < 8 or not np.isfinite(logs).all():
        return None
    d = np.diff(logs)
    x = np.log(k[1:])
    slope = np.polyfit(x - x.mean(), d, 1)[0]
    end = d[-max(2, len(d) // 8):].mean()
    if slope <= -0.5 and end < 0:
        return 0.0
    if slope >= 0.5 and end > 0:
        return math.inf
    return None


def estimate_limsup_root(s: Sequence, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    N = policy.terms
    lo = max(N // 2, 1)
    logs = s.log_magnitudes(N - lo + 1, start=lo)
    return limsup_root_from_logs(logs, np.arange(lo, N + 1, dtype=float), policy.window)


def radius_from_root(root: float, policy: TruncationPolicy) -> float:
    if root == 0.0:
        return math.inf
    if not math.isfinite(root) or root > policy.radius_cap:
        return 0.0
    return 1.0 / root


def series_radius(g: PowerSeries, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """Cauchy-Hadamard radius of convergence; inf for entire series."""
    return radius_from_root(estimate_limsup_root(g.as_sequence(), policy), policy)
