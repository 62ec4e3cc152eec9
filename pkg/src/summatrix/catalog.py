"""Named matrices, series and sequences, plus the text forms that select them.

Index mapping used by the numbered examples (all internal indices start at 0):

* example1, example3, example4, example5 use (i, j) as given, so row 0 exists.
* example2 maps row r to i = r + 1, giving a_rj = 1/(r + 1 + j).
* example6, example7 and prop6 map row r to i = r + 1 and keep the column
  index: a_rj is nonzero exactly for j <= r.

Spec strings
------------
``catalog:<name>?b=0.5&p=0.5^k`` selects a catalog matrix with parameters.
``expr:<formula>?name=value`` builds one from the expression language; the
free variables are i, j for matrices and k for series and sequences.  A
sequence spec may declare its limit with ``?limit=<scalar>``.
``catalog-series:<name>?c=2`` selects a named power series.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import gamma as _gamma
from scipy.special import gammaln

from . import expr as dsl
from .matrices import InfiniteMatrix, TransformResult, identity_matrix, zero_matrix
from .numerics import (
    DEFAULT_POLICY,
    LimitEstimate,
    PowerSeries,
    Sequence,
    TruncationPolicy,
    limits_of_arrays,
    log_power_int,
    power_int,
    series_radius,
)


class CatalogError(ValueError):
    """Unknown name or a parameter outside its domain."""


# -- scalars -----------------------------------------------------------------

def parse_scalar(text: str) -> complex:
    """Parse ``2``, ``-0.5``, ``1+2i``, ``3i``, ``-i`` or ``1e-3-4e2j``."""
    s = str(text).strip().replace(" ", "")
    if not s:
        raise ValueError("empty scalar")
    s = s.replace("I", "j").replace("i", "j")
    if s.endswith("j"):
        body = s[:-1]
        # a bare sign or an empty coefficient means a unit imaginary part
        if body in ("", "+", "-") or body[-1] in "+-":
            s = body + "1j"
    try:
        value = complex(s)
    except ValueError:
        raise ValueError(f"not a scalar: {text!r}") from None
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise ValueError(f"scalar must be finite: {text!r}")
    return value


def _real_param(params: dict, name: str, default: float) -> float:
    v = params.get(name, default)
    v = parse_scalar(v) if isinstance(v, str) else complex(v)
    if v.imag != 0:
        raise CatalogError(f"parameter {name} must be real")
    return float(v.real)


# -- catalog entries ---------------------------------------------------------

@dataclass(frozen=True)
class CatalogEntry:
    name: str
    kind: str                  # matrix, series
    params: dict               # name -> default (text)
    build: Callable
    index_note: str = ""
    description: str = ""
    dsl_twin: Optional[str] = None
    discrepancy: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"name": self.name, "kind": self.kind, "params": dict(self.params),
             "index_note": self.index_note, "description": self.description,
             "dsl_twin": self.dsl_twin, "discrepancy": self.discrepancy}
        return d


def _factorial_of(n):
    with np.errstate(over="ignore"):
        return _gamma(np.asarray(n, dtype=float) + 1.0)


class PrefixSums:
    """P_n = p_1 + ... + p_n, grown on demand and shared between threads.

    The stored array only ever grows and earlier entries never change, so
    every reader sees the same value for the same n.
    """

    def __init__(self, p: Callable, label: str):
        self._p = p
        self._label = label
        self._lock = threading.Lock()
        self._sums = np.zeros(1)     # _sums[n] = P_n, P_0 = 0
        self._logs = np.array([-np.inf])

    def _grow(self, n: int):
        with self._lock:
            have = len(self._sums) - 1
            if n <= have:
                return
            size = max(n, 2 * have, 1024)
            k = np.arange(have + 1, size + 1)
            with np.errstate(all="ignore"):
                pk, lg = self._p(k)
            pk = np.broadcast_to(np.asarray(pk, dtype=complex), k.shape)
            lg = np.broadcast_to(np.asarray(lg, dtype=float), k.shape)
            # an entry that underflowed to 0 but has a finite log is still positive
            ok = (pk.imag == 0) & np.isfinite(pk.real) & ((pk.real > 0) | ((pk.real == 0) & np.isfinite(lg)))
            if not ok.all():
                bad = int(k[np.argmax(~ok)])
                raise CatalogError(f"non-positive p_k detected at k={bad} for p = {self._label}")
            # sequential accumulation keeps P_{n+1} = P_n + p_{n+1} exactly in floats
            tail = np.cumsum(np.concatenate(([self._sums[-1]], pk.real)))[1:]
            with np.errstate(divide="ignore"):
                logs = np.log(tail)
            self._sums = np.concatenate((self._sums, tail))
            self._logs = np.concatenate((self._logs, logs))

    def values(self, n) -> np.ndarray:
        n = np.asarray(n)
        self._grow(int(n.max()) if n.size else 0)
        return self._sums[n]

    def logs(self, n) -> np.ndarray:
        n = np.asarray(n)
        self._grow(int(n.max()) if n.size else 0)
        return self._logs[n]


def _p_function(text: str) -> tuple:
    """Compile a DSL expression in k into a vectorized coefficient function."""
    e = dsl.parse(text)
    unbound = dsl.free_names(e) - {"k"}
    if unbound:
        raise CatalogError(f"p may only use k, found {sorted(unbound)}")

    def p(k):
        return dsl.evaluate_with_log(e, {"k": k})
    return p, e


def _lower_mean_matrix(p_text: str, label: str) -> InfiniteMatrix:
    """a_rj = 1/P_{r+1} for j <= r, else 0."""
    p, _ = _p_function(p_text)
    P = PrefixSums(p, p_text)
    P.values(np.array([DEFAULT_POLICY.terms]))      # early domain check

    def fn(i, j):
        return np.where(j <= i, 1.0 / P.values(i + 1), 0.0)

    def log_abs(i, j):
        return np.where(j <= i, -P.logs(i + 1), -np.inf)

    m = InfiniteMatrix(fn, f"{label}(p={p_text})", log_abs)
    m.prefix_sums = P
    return m


def _prop6_matrix(p_text: str) -> InfiniteMatrix:
    """a_rj = p_j for j <= r, else 0 (p indexed from k = 0)."""
    e = dsl.parse(p_text)
    unbound = dsl.free_names(e) - {"k"}
    if unbound:
        raise CatalogError(f"p may only use k, found {sorted(unbound)}")

    def fn(i, j):
        return np.where(j <= i, dsl.evaluate(e, {"k": j}), 0.0)

    def log_abs(i, j):
        return np.where(j <= i, dsl.evaluate_with_log(e, {"k": j})[1], -np.inf)

    return InfiniteMatrix(fn, f"prop6(p={p_text})", log_abs)


def _ex1(params):
    return InfiniteMatrix(lambda i, j: (i + j).astype(float), "example1")


def _ex2(params):
    return InfiniteMatrix(lambda i, j: 1.0 / (i + 1 + j), "example2")


def _ex3(params):
    return InfiniteMatrix(lambda i, j: _factorial_of(i + j), "example3",
                          lambda i, j: gammaln(i + j + 1.0))


def _ex4(params):
    return InfiniteMatrix(lambda i, j: 1.0 / _factorial_of(i + j), "example4",
                          lambda i, j: -gammaln(i + j + 1.0))


def _ex5(params):
    b = _real_param(params, "b", 0.5)
    if not b > 0:
        raise CatalogError("example5 requires b > 0")
    lb = math.log(b)
    return InfiniteMatrix(lambda i, j: np.power(b, (i + j).astype(float)), f"example5(b={b!r})",
                          lambda i, j: (i + j) * lb)


def _cesaro(params):
    return InfiniteMatrix(lambda i, j: np.where(j <= i, 1.0 / (i + 1), 0.0), "cesaro",
                          lambda i, j: np.where(j <= i, -np.log(i + 1.0), -np.inf))


_ROW_SHIFT = "row r stands for i = r+1; column j unchanged; a_rj nonzero for j <= r"
_ZERO_BASED = "0-based (i, j) substituted directly; row 0 exists"

MATRICES = {
    "example1": CatalogEntry(
        "example1", "matrix", {}, _ex1, _ZERO_BASED, "a_ij = i + j", "i+j",
        discrepancy="claimed r_A = 1, but every nonzero z gives unbounded row sums of "
                    "(i+j) z^j, so membership fails for all z != 0"),
    "example2": CatalogEntry(
        "example2", "matrix", {}, _ex2, "row r stands for i = r+1, so a_rj = 1/(r+1+j)",
        "a_ij = 1/(i+j)", "1/(i+1+j)"),
    "example3": CatalogEntry(
        "example3", "matrix", {}, _ex3, _ZERO_BASED, "a_ij = (i+j)!", "fact(i+j)"),
    "example4": CatalogEntry(
        "example4", "matrix", {}, _ex4, _ZERO_BASED, "a_ij = 1/(i+j)!", "1/fact(i+j)",
        discrepancy="stated index range starts at i = 1, but M = sum 1/j! = e needs the "
                    "0-based reading used here"),
    "example5": CatalogEntry(
        "example5", "matrix", {"b": "0.5"}, _ex5, _ZERO_BASED, "a_ij = b^(i+j), b > 0", "b^(i+j)",
        discrepancy="stated index range starts at i = 1, but M = 1/(1-b) needs the "
                    "0-based reading used here"),
    "example6": CatalogEntry(
        "example6", "matrix", {"p": "0.5^k"},
        lambda prm: _lower_mean_matrix(str(prm.get("p", "0.5^k")), "example6"),
        _ROW_SHIFT, "a_ij = 1/P_i for j < i, P_i = p_1 + ... + p_i",
        discrepancy="claimed member of B_c with M = 1/p_1, but absolute row sums are i/P_i, "
                    "unbounded when sum p_k converges; a_ij = p_(j+1)/P_i may be intended"),
    "example7": CatalogEntry(
        "example7", "matrix", {"p": "1"},
        lambda prm: _lower_mean_matrix(str(prm.get("p", "1")), "example7"),
        _ROW_SHIFT, "a_ij = 1/P_i for j < i with sum p_k divergent",
        discrepancy="claimed regular for every positive divergent p, but the row-sum limit "
                    "i/P_i is not 1 in general (p_k = k gives 0)"),
    "prop6": CatalogEntry(
        "prop6", "matrix", {"p": "0.5^k"}, lambda prm: _prop6_matrix(str(prm.get("p", "0.5^k"))),
        _ROW_SHIFT + "; p indexed from k = 0", "a_ij = p_j for j < i"),
    "cesaro": CatalogEntry(
        "cesaro", "matrix", {}, _cesaro, "0-based; row i averages s_0 .. s_i",
        "a_ij = 1/(i+1) for j <= i", "if i < j then 0 else 1/(i+1)"),
    "identity": CatalogEntry(
        "identity", "matrix", {}, lambda prm: identity_matrix(), "0-based", "a_ij = [i = j]",
        "if i < j then 0 else if j < i then 0 else 1"),
    "zero": CatalogEntry(
        "zero", "matrix", {}, lambda prm: zero_matrix(), "0-based", "a_ij = 0", "0"),
}


def _geometric(params):
    b = parse_scalar(str(params.get("b", "0.5")))
    return PowerSeries(lambda k: power_int(b, k), lambda k: log_power_int(abs(b), k))


def _scaled_ratio(params):
    c = parse_scalar(str(params.get("c", "1")))
    return PowerSeries(lambda k: c * (k / (k + 1.0)))


SERIES = {
    "ones": CatalogEntry("ones", "series", {}, lambda prm: PowerSeries(lambda k: np.ones(np.shape(k))),
                         description="g_k = 1"),
    "exp": CatalogEntry("exp", "series", {},
                        lambda prm: PowerSeries(lambda k: 1.0 / _factorial_of(k),
                                                lambda k: -gammaln(np.asarray(k) + 1.0)),
                        description="g_k = 1/k!"),
    "geometric": CatalogEntry("geometric", "series", {"b": "0.5"}, _geometric,
                              description="g_k = b^k"),
    "ratio": CatalogEntry("ratio", "series", {}, lambda prm: PowerSeries(lambda k: k / (k + 1.0)),
                          description="g_k = k/(k+1)"),
    "scaled-ratio": CatalogEntry("scaled-ratio", "series", {"c": "1"}, _scaled_ratio,
                                 description="g_k = c k/(k+1)"),
    "osc": CatalogEntry("osc", "series", {},
                        lambda prm: PowerSeries(lambda k: 1.0 + np.where(np.asarray(k) % 2 == 0, 1.0, -1.0)),
                        description="g_k = 1 + (-1)^k"),
}


def _lookup(table: dict, name: str, what: str) -> CatalogEntry:
    try:
        return table[name]
    except KeyError:
        raise CatalogError(f"unknown {what} {name!r}; known: {', '.join(sorted(table))}") from None


def _check_params(entry: CatalogEntry, params: dict):
    extra = set(params) - set(entry.params)
    if extra:
        raise CatalogError(f"{entry.name} takes no parameter(s) {sorted(extra)}")


def get_matrix(name: str, **params) -> InfiniteMatrix:
    entry = _lookup(MATRICES, name, "matrix")
    _check_params(entry, params)
    return entry.build(params)


def get_series(name: str, **params) -> PowerSeries:
    entry = _lookup(SERIES, name, "series")
    _check_params(entry, params)
    return entry.build(params)


def matrix_entry(name: str) -> CatalogEntry:
    return _lookup(MATRICES, name, "matrix")


def list_catalog() -> dict:
    return {"matrices": [MATRICES[n].to_dict() for n in sorted(MATRICES)],
            "series": [SERIES[n].to_dict() for n in sorted(SERIES)]}


# -- expression-backed objects -----------------------------------------------

def dsl_matrix(src: str, params: Optional[dict] = None, description: str = "") -> InfiniteMatrix:
    values = {n: (parse_scalar(v) if isinstance(v, str) else complex(v)) for n, v in (params or {}).items()}
    e = dsl.parse(src, tuple(values))
    unbound = dsl.free_names(e) - {"i", "j"} - set(values)
    if unbound:
        raise dsl.EvalError(f"matrix expressions may only use i and j, found {sorted(unbound)}")

    def fn(i, j):
        return dsl.evaluate(e, {"i": i, "j": j}, values)

    def log_abs(i, j):
        return dsl.evaluate_with_log(e, {"i": i, "j": j}, values)[1]

    return InfiniteMatrix(fn, description or f"expr:{src}", log_abs)


def _k_expr(src: str, values: dict):
    e = dsl.parse(src, tuple(values))
    unbound = dsl.free_names(e) - {"k"} - set(values)
    if unbound:
        raise dsl.EvalError(f"expressions here may only use k, found {sorted(unbound)}")
    return (lambda k: dsl.evaluate(e, {"k": k}, values),
            lambda k: dsl.evaluate_with_log(e, {"k": k}, values)[1])


def dsl_series(src: str, params: Optional[dict] = None) -> PowerSeries:
    values = {n: (parse_scalar(v) if isinstance(v, str) else complex(v)) for n, v in (params or {}).items()}
    fn, lg = _k_expr(src, values)
    return PowerSeries(fn, lg)


def dsl_sequence(src: str, params: Optional[dict] = None, limit=None) -> Sequence:
    values = {n: (parse_scalar(v) if isinstance(v, str) else complex(v)) for n, v in (params or {}).items()}
    fn, lg = _k_expr(src, values)
    return Sequence(fn, None if limit is None else complex(limit), lg)


# -- spec strings ------------------------------------------------------------

def split_spec(text: str) -> tuple:
    """``scheme:body?a=1&b=2`` -> (scheme, body, {a: "1", b: "2"})."""
    if ":" not in text:
        raise CatalogError(f"expected <scheme>:<value>, got {text!r}")
    scheme, rest = text.split(":", 1)
    body, _, query = rest.partition("?")
    params = {}
    if query:
        for part in query.split("&"):
            key, eq, value = part.partition("=")
            if not eq or not key.strip():
                raise CatalogError(f"malformed parameter {part!r} in {text!r}")
            params[key.strip()] = value.strip()
    return scheme.strip(), body, params


def resolve_matrix(text: str) -> tuple:
    """A matrix spec -> (matrix, catalog entry or None)."""
    scheme, body, params = split_spec(text)
    if scheme == "catalog":
        entry = matrix_entry(body.strip())
        _check_params(entry, params)
        return entry.build(params), entry
    if scheme == "expr":
        return dsl_matrix(body, params, f"expr:{body}"), None
    raise CatalogError(f"unknown matrix scheme {scheme!r}; use catalog: or expr:")


def resolve_series(text: str) -> PowerSeries:
    scheme, body, params = split_spec(text)
    if scheme == "catalog-series":
        return get_series(body.strip(), **params)
    if scheme == "expr":
        return dsl_series(body, params)
    raise CatalogError(f"unknown series scheme {scheme!r}; use catalog-series: or expr:")


def resolve_sequence(text: str) -> Sequence:
    scheme, body, params = split_spec(text)
    limit = params.pop("limit", None)
    limit = None if limit is None else parse_scalar(limit)
    if scheme == "expr":
        return dsl_sequence(body, params, limit)
    if scheme == "catalog-series":
        s = get_series(body.strip(), **params).as_sequence()
        return Sequence(s.term, limit, s.log_abs)
    raise CatalogError(f"unknown sequence scheme {scheme!r}; use expr: or catalog-series:")


# -- the analytic-function transform ----------------------------------------

@dataclass(frozen=True)
class Prop6Result:
    transform: TransformResult
    series_radius: float
    hypothesis_met: bool       # |z| < radius of p


def prop6_transform(p: PowerSeries, s: Sequence, z, pol: TruncationPolicy = DEFAULT_POLICY) -> Prop6Result:
    """t_n = sum_{k<=n} p_k s_k z^k for n < I, with s indexed from 0.

    The hypothesis |z| < radius(p) is reported, not enforced.
    """
    z = complex(z)
    n = pol.rows
    with np.errstate(all="ignore"):
        terms = p.values(n) * s.values(n) * power_int(z, np.arange(n))
    prefix = np.cumsum(terms)
    limit: LimitEstimate = limits_of_arrays(prefix[None, :], pol)[0]

    def t_fn(k):
        k = np.asarray(k)
        m = int(k.max()) + 1 if k.size else 0
        with np.errstate(all="ignore"):
            c = np.cumsum(p.values(m) * s.values(m) * power_int(z, np.arange(m)))
        return c[k]

    r = series_radius(p, pol)
    tr = TransformResult(Sequence(t_fn), prefix, tuple(0.0 for _ in range(n)), limit, ())
    return Prop6Result(tr, r, abs(z) < r)
