"""A small expression language for matrix entries, series coefficients and
sequences.

Grammar (whitespace is insignificant)::

    expr    := "if" name "<" bound "then" expr "else" expr | sum
    bound   := name | ["-"] number
    sum     := product { ("+" | "-") product }
    product := unary { ("*" | "/") unary }
    unary   := "-" unary | power
    power   := atom [ "^" unary ]            (right associative)
    atom    := number | "I" | name | func "(" args ")" | "(" expr ")"
    func    := "fact" | "exp" | "abs" | "pow"

``name`` is one of the bound variables i, j, k, z or a declared parameter.
``I`` is the imaginary unit.  Evaluation is vectorized over numpy arrays.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

import numpy as np
from scipy.special import gamma as _gamma
from scipy.special import gammaln as _gammaln

VARIABLES = ("i", "j", "k", "z")
FUNCTIONS = {"fact": 1, "exp": 1, "abs": 1, "pow": 2}
KEYWORDS = ("if", "then", "else")
IMAGINARY = "I"


class ParseError(ValueError):
    """Malformed expression text.  ``offset`` is a 0-based byte offset."""

    def __init__(self, offset: int, expected: str, found: str, src: str = ""):
        self.offset = offset
        self.expected = expected
        self.found = found
        self.src = src
        super().__init__(f"at offset {offset}: expected {expected}, found {found}")


class EvalError(ValueError):
    pass


# -- AST ---------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: Union[int, float]


@dataclass(frozen=True)
class Imag:
    pass


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


@dataclass(frozen=True)
class If:
    var: "Expr"
    bound: "Expr"
    then: "Expr"
    other: "Expr"


Expr = Union[Num, Imag, Var, Param, Neg, BinOp, Call, If]


# -- tokenizer ---------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),<])
""", re.VERBOSE)


@dataclass(frozen=True)
class _Tok:
    kind: str   # num, name, op, end
    text: str
    offset: int


def _describe(tok: _Tok) -> str:
    return "end of input" if tok.kind == "end" else repr(tok.text)


def _tokenize(src: str) -> list:
    out = []
    pos = 0
    byte = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ParseError(byte, "a number, name or operator", repr(src[pos]), src)
        text = m.group()
        if m.lastgroup != "ws":
            out.append(_Tok(m.lastgroup, text, byte))
        byte += len(text.encode("utf-8"))
        pos = m.end()
    out.append(_Tok("end", "", byte))
    return out


# -- parser ------------------------------------------------------------------

class _Parser:
    def __init__(self, src: str, params: frozenset):
        self.src = src
        self.params = params
        self.toks = _tokenize(src)
        self.pos = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.pos]

    def advance(self) -> _Tok:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def fail(self, expected: str):
        raise ParseError(self.tok.offset, expected, _describe(self.tok), self.src)

    def expect_op(self, op: str):
        if self.tok.kind == "op" and self.tok.text == op:
            return self.advance()
        self.fail(repr(op))

    def expect_word(self, word: str):
        if self.tok.kind == "name" and self.tok.text == word:
            return self.advance()
        self.fail(repr(word))

    def at_op(self, *ops) -> bool:
        return self.tok.kind == "op" and self.tok.text in ops

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            self.fail("an operator or end of input")
        return e

    def expr(self) -> Expr:
        if self.tok.kind == "name" and self.tok.text == "if":
            self.advance()
            var = self.name_ref("a variable or parameter")
            self.expect_op("<")
            bound = self.bound()
            self.expect_word("then")
            then = self.expr()
            self.expect_word("else")
            other = self.expr()
            return If(var, bound, then, other)
        return self.sum()

    def bound(self) -> Expr:
        if self.tok.kind == "num":
            return self.number()
        if self.at_op("-"):
            self.advance()
            if self.tok.kind != "num":
                self.fail("a number")
            return Neg(self.number())
        return self.name_ref("a variable, parameter or number")

    def name_ref(self, expected: str) -> Expr:
        t = self.tok
        if t.kind != "name" or t.text in KEYWORDS or t.text in FUNCTIONS or t.text == IMAGINARY:
            self.fail(expected)
        self.advance()
        if t.text in VARIABLES:
            return Var(t.text)
        if t.text in self.params:
            return Param(t.text)
        raise ParseError(t.offset, expected, f"unknown identifier {t.text!r}", self.src)

    def number(self) -> Num:
        t = self.advance()
        if re.fullmatch(r"\d+", t.text):
            return Num(int(t.text))
        value = float(t.text)
        if not math.isfinite(value):
            raise ParseError(t.offset, "a finite number", repr(t.text), self.src)
        return Num(value)

    def sum(self) -> Expr:
        left = self.product()
        while self.at_op("+", "-"):
            op = self.advance().text
            left = BinOp(op, left, self.product())
        return left

    def product(self) -> Expr:
        left = self.unary()
        while self.at_op("*", "/"):
            op = self.advance().text
            left = BinOp(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.at_op("-"):
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.at_op("^"):
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            return self.number()
        if self.at_op("("):
            self.advance()
            e = self.expr()
            self.expect_op(")")
            return e
        if t.kind == "name":
            if t.text == IMAGINARY:
                self.advance()
                return Imag()
            if t.text in FUNCTIONS:
                self.advance()
                self.expect_op("(")
                args = [self.expr()]
                while self.at_op(","):
                    self.advance()
                    args.append(self.expr())
                close = self.tok
                self.expect_op(")")
                if len(args) != FUNCTIONS[t.text]:
                    raise ParseError(close.offset, f"{FUNCTIONS[t.text]} argument(s) to {t.text}",
                                     f"{len(args)}", self.src)
                return Call(t.text, tuple(args))
            return self.name_ref("an expression")
        self.fail("an expression")


def parse(src: str, params: Iterable[str] = ()) -> Expr:
    """Parse ``src``; identifiers must be bound variables or names in ``params``."""
    if isinstance(src, bytes):
        try:
            src = src.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(exc.start, "UTF-8 text", "invalid byte") from None
    params = frozenset(params)
    bad = params & (set(VARIABLES) | set(FUNCTIONS) | set(KEYWORDS) | {IMAGINARY})
    if bad:
        raise ValueError(f"reserved parameter name(s): {sorted(bad)}")
    return _Parser(src, params).parse()


# -- printing ----------------------------------------------------------------

def pretty(e: Expr) -> str:
    """Fully parenthesized text that parses back to the same tree."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Imag):
        return IMAGINARY
    if isinstance(e, (Var, Param)):
        return e.name
    if isinstance(e, Neg):
        return f"(-{pretty(e.operand)})"
    if isinstance(e, BinOp):
        return f"({pretty(e.left)} {e.op} {pretty(e.right)})"
    if isinstance(e, Call):
        return f"{e.func}({', '.join(pretty(a) for a in e.args)})"
    if isinstance(e, If):
        bound = pretty(e.bound)
        if isinstance(e.bound, Neg):
            bound = bound[1:-1]
        return f"(if {pretty(e.var)} < {bound} then {pretty(e.then)} else {pretty(e.other)})"
    raise TypeError(f"not an expression node: {e!r}")


def free_names(e: Expr) -> set:
    if isinstance(e, (Var, Param)):
        return {e.name}
    if isinstance(e, Neg):
        return free_names(e.operand)
    if isinstance(e, BinOp):
        return free_names(e.left) | free_names(e.right)
    if isinstance(e, Call):
        return set().union(*(free_names(a) for a in e.args))
    if isinstance(e, If):
        return free_names(e.var) | free_names(e.bound) | free_names(e.then) | free_names(e.other)
    return set()


# -- evaluation --------------------------------------------------------------

def factorial(x) -> np.ndarray:
    """n! for nonnegative integer-valued input; inf once it leaves float range."""
    x = np.asarray(x)
    real = np.real(x).astype(float)
    if np.any(np.imag(x) != 0) or np.any(real < 0) or np.any(real != np.round(real)):
        raise EvalError("fact requires a nonnegative integer argument")
    with np.errstate(over="ignore"):
        return _gamma(real + 1.0)


def _power(base: np.ndarray, exp: np.ndarray) -> np.ndarray:
    out = np.empty(np.broadcast(base, exp).shape, dtype=complex)
    base, exp = np.broadcast_arrays(base, exp)
    br, er = base.real, exp.real
    real = (base.imag == 0) & (exp.imag == 0) & ((br >= 0) | (er == np.round(er)))
    with np.errstate(all="ignore"):
        out[real] = np.power(br[real], er[real])
        rest = ~real
        if rest.any():
            out[rest] = np.power(base[rest], exp[rest])
    return out


def _eval(e: Expr, env: Mapping, n: int) -> np.ndarray:
    if isinstance(e, Num):
        return np.full(n, e.value, dtype=complex)
    if isinstance(e, Imag):
        return np.full(n, 1j)
    if isinstance(e, (Var, Param)):
        if e.name not in env:
            kind = "variable" if isinstance(e, Var) else "parameter"
            raise EvalError(f"unbound {kind} {e.name!r}")
        return env[e.name]
    if isinstance(e, Neg):
        return 0 - _eval(e.operand, env, n)
    if isinstance(e, BinOp):
        a = _eval(e.left, env, n)
        b = _eval(e.right, env, n)
        with np.errstate(all="ignore"):
            if e.op == "+":
                return a + b
            if e.op == "-":
                return a - b
            if e.op == "*":
                return a * b
            if e.op == "/":
                return a / b
        return _power(a, b)
    if isinstance(e, Call):
        args = [_eval(a, env, n) for a in e.args]
        with np.errstate(all="ignore"):
            if e.func == "fact":
                return factorial(args[0]).astype(complex)
            if e.func == "exp":
                return np.exp(args[0])
            if e.func == "abs":
                return np.abs(args[0]).astype(complex)
            return _power(args[0], args[1])
    if isinstance(e, If):
        left = _eval(e.var, env, n).real
        right = _eval(e.bound, env, n).real
        mask = left < right
        out = np.empty(n, dtype=complex)
        for sel, branch in ((mask, e.then), (~mask, e.other)):
            if sel.any():
                sub = {name: v[sel] for name, v in env.items()}
                out[sel] = _eval(branch, sub, int(sel.sum()))
        return out
    raise TypeError(f"not an expression node: {e!r}")


def _eval_log(e: Expr, env: Mapping, n: int):
    """Values and log-magnitudes.  The log path takes over where the linear
    value left float range, propagating magnitudes through the tree."""
    if isinstance(e, If):
        left = _eval(e.var, env, n).real
        right = _eval(e.bound, env, n).real
        mask = left < right
        vals = np.empty(n, dtype=complex)
        logs = np.empty(n)
        for sel, branch in ((mask, e.then), (~mask, e.other)):
            if sel.any():
                sub = {name: v[sel] for name, v in env.items()}
                vals[sel], logs[sel] = _eval_log(branch, sub, int(sel.sum()))
        return vals, logs
    vals = _eval(e, env, n) if not isinstance(e, (Neg, BinOp, Call)) else None
    with np.errstate(all="ignore"):
        if isinstance(e, Neg):
            v, lg = _eval_log(e.operand, env, n)
            return 0 - v, lg
        if isinstance(e, BinOp):
            a, la = _eval_log(e.left, env, n)
            b, lb = _eval_log(e.right, env, n)
            if e.op == "+":
                vals, fallback = a + b, np.logaddexp(la, lb)
            elif e.op == "-":
                vals, fallback = a - b, np.logaddexp(la, lb)
            elif e.op == "*":
                vals, fallback = a * b, la + lb
            elif e.op == "/":
                vals, fallback = a / b, la - lb
            else:
                vals, fallback = _power(a, b), _log_power(a, la, b)
        elif isinstance(e, Call):
            parts = [_eval_log(x, env, n) for x in e.args]
            (a, la) = parts[0]
            if e.func == "fact":
                vals = factorial(a).astype(complex)
                fallback = _gammaln(np.real(a) + 1.0)
            elif e.func == "exp":
                vals, fallback = np.exp(a), np.real(a)
            elif e.func == "abs":
                vals, fallback = np.abs(a).astype(complex), la
            else:
                b, lb = parts[1]
                vals, fallback = _power(a, b), _log_power(a, la, b)
        else:
            fallback = np.log(np.abs(vals))
        mag = np.abs(vals)
        direct = np.isfinite(mag) & (mag > 1e-300)
        logs = np.where(direct, np.log(np.where(direct, mag, 1.0)), fallback)
        logs = np.where(mag == 0, np.where(np.isfinite(fallback), fallback, -np.inf), logs)
    return vals, logs


def _log_power(base, log_base, exp):
    # log|base^exp| = Re(exp) log|base| - Im(exp) arg(base)
    with np.errstate(all="ignore"):
        out = exp.real * log_base - exp.imag * np.angle(base)
    return np.where(exp == 0, 0.0, out)


def _prepare(e, bindings, params):
    env_in = dict(params or {})
    env_in.update(bindings or {})
    arrays = {name: np.asarray(v, dtype=complex) for name, v in env_in.items()}
    shape = np.broadcast_shapes(*(a.shape for a in arrays.values())) if arrays else ()
    n = int(np.prod(shape)) if shape else 1
    env = {name: np.broadcast_to(a, shape).reshape(n) for name, a in arrays.items()}
    return env, shape, n


def evaluate_with_log(e: Expr, bindings: Mapping = None, params: Mapping = None):
    """Values and log|value| arrays; magnitudes past float range stay finite in the log."""
    env, shape, n = _prepare(e, bindings, params)
    vals, logs = _eval_log(e, env, n)
    return vals.reshape(shape), logs.reshape(shape)


def evaluate(e: Expr, bindings: Mapping = None, params: Mapping = None):
    """Evaluate ``e``.  Array bindings broadcast; scalar inputs give a complex."""
    env, shape, n = _prepare(e, bindings, params)
    out = _eval(e, env, n)
    if shape == ():
        return complex(out[0])
    return out.reshape(shape)


eval = evaluate  # noqa: A001 - the natural name for the operation
