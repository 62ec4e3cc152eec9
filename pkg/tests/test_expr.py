"""Parser and evaluator for the entry expression language."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from summatrix import expr as dsl
from summatrix.expr import EvalError, ParseError, evaluate, evaluate_with_log, parse, pretty

from malformed import generate


def ev(src, **bind):
    return evaluate(parse(src), bind)


@pytest.mark.parametrize("src, value", [
    ("1+2*3^2", 19), ("2^3^2", 512), ("-2^2", -4), ("(1+2)*3", 9), ("2*-3", -6),
    ("10/4", 2.5), ("1 - 2 - 3", -4), ("8/2/2", 2), ("2^-1", 0.5), ("fact(5)", 120),
    ("exp(0)", 1), ("abs(-3)", 3), ("pow(2, 10)", 1024), ("I*I", -1), ("1.5e2", 150),
    ("--3", 3),
])
def test_arithmetic(src, value):
    assert ev(src) == pytest.approx(value)


def test_factorial_matrix_entry():
    assert ev("1/fact(i+j)", i=2, j=1) == pytest.approx(1 / 6)


def test_piecewise():
    e = parse("if j < i then 1 else 0")
    assert evaluate(e, {"i": 3, "j": 1}) == 1
    assert evaluate(e, {"i": 1, "j": 3}) == 0


def test_piecewise_with_negative_literal_bound():
    assert ev("if k < -1 then 5 else 6", k=-3) == 5


def test_nested_piecewise_identity():
    e = parse("if i < j then 0 else if j < i then 0 else 1")
    i, j = np.meshgrid(np.arange(5), np.arange(5), indexing="ij")
    assert np.array_equal(evaluate(e, {"i": i, "j": j}).real, np.eye(5))


def test_parameters():
    assert evaluate(parse("b^(i+j)", ["b"]), {"i": 1, "j": 1}, {"b": 0.5}) == pytest.approx(0.25)
    assert evaluate(parse("(i+j)"), {"i": 0, "j": 0}) == 0
    assert ev("exp(z)", z=0) == 1


def test_complex_principal_branch():
    assert ev("(-1)^0.5") == pytest.approx(1j)
    assert ev("exp(I*z)", z=math.pi) == pytest.approx(-1)


def test_vectorized_evaluation():
    k = np.arange(6)
    out = evaluate(parse("if k < 3 then k else fact(k)"), {"k": k})
    assert out.real.tolist() == [0, 1, 2, 6, 24, 120]


def test_factorial_overflow_is_inf():
    assert ev("fact(200)") == complex(math.inf, 0)


@pytest.mark.parametrize("src", ["fact(2.5)", "fact(-1)", "fact(I)"])
def test_factorial_domain(src):
    with pytest.raises(EvalError):
        ev(src)


def test_unbound_variable_is_eval_error():
    with pytest.raises(EvalError, match="unbound"):
        evaluate(parse("i + j"), {"i": 1})


def test_unknown_identifier_is_parse_error():
    with pytest.raises(ParseError) as info:
        parse("2*q")
    assert info.value.offset == 2


def test_parse_error_fields():
    with pytest.raises(ParseError) as info:
        parse("1/(")
    err = info.value
    assert (err.offset, err.found) == (3, "end of input")
    assert "expression" in err.expected


def test_offsets_are_bytes():
    with pytest.raises(ParseError) as info:
        parse("é+1")
    assert info.value.offset == 0
    with pytest.raises(ParseError) as info:
        parse("1+ é")
    assert info.value.offset == 3


def test_reserved_parameter_rejected():
    with pytest.raises(ValueError):
        parse("k", ["k"])


def test_log_path_keeps_magnitudes():
    e = parse("b^(i+j)", ["b"])
    vals, logs = evaluate_with_log(e, {"i": np.array([0, 1000]), "j": np.array([0, 2000])}, {"b": 0.5})
    assert vals[1] == 0
    assert logs[1] == pytest.approx(3000 * math.log(0.5))
    _, logs = evaluate_with_log(parse("1/fact(k)"), {"k": np.array([3, 1000])})
    assert logs[0] == pytest.approx(-math.log(6))
    assert logs[1] == pytest.approx(-math.lgamma(1001))


def test_log_path_matches_direct_logs_in_range():
    e = parse("(k+1)^2 * 0.9^k / fact(k) + 3")
    k = np.arange(60)
    vals, logs = evaluate_with_log(e, {"k": k})
    assert np.allclose(logs, np.log(np.abs(vals)))


# -- round trip --------------------------------------------------------------

names = st.sampled_from(["i", "j", "k", "z", "b"])
numbers = st.one_of(st.integers(0, 10 ** 6).map(dsl.Num),
                    st.floats(0, 1e12, allow_nan=False, allow_infinity=False).map(dsl.Num))
leaves = st.one_of(numbers, st.just(dsl.Imag()),
                   names.map(lambda n: dsl.Param(n) if n == "b" else dsl.Var(n)))


def _extend(children):
    return st.one_of(
        children.map(dsl.Neg),
        st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda t: dsl.BinOp(*t)),
        st.tuples(st.sampled_from(["fact", "exp", "abs"]), children).map(
            lambda t: dsl.Call(t[0], (t[1],))),
        st.tuples(children, children).map(lambda t: dsl.Call("pow", t)),
        st.tuples(names.map(lambda n: dsl.Param(n) if n == "b" else dsl.Var(n)),
                  st.one_of(numbers, numbers.map(dsl.Neg)), children, children).map(
            lambda t: dsl.If(*t)),
    )


trees = st.recursive(leaves, _extend, max_leaves=12)


@given(trees)
def test_pretty_round_trip(tree):
    text = pretty(tree)
    again = parse(text, ["b"])
    assert again == tree
    assert parse(pretty(again), ["b"]) == again


# -- malformed corpus --------------------------------------------------------

CORPUS = generate(1000)


def test_corpus_size():
    assert len(CORPUS) == 1000


def test_malformed_inputs_give_positioned_errors():
    for text, offset in CORPUS:
        with pytest.raises(ParseError) as info:
            parse(text, ["b"])
        err = info.value
        assert 0 <= err.offset <= len(text.encode("utf-8")), text
        if offset is not None:
            assert err.offset == offset, (text, err.offset, offset)
        assert err.expected and err.found


@given(st.text(max_size=30))
def test_arbitrary_text_parses_or_raises_parse_error(text):
    try:
        parse(text)
    except ParseError as err:
        assert 0 <= err.offset <= len(text.encode("utf-8"))
