import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from measurefit.errors import ExprSyntaxError, UnboundParameterError, UnknownFunctionError
from measurefit.expr import (FUNCTIONS, BinOp, Call, Neg, Num, Param, Var, evaluate,
                             parse, to_source)


def ev(src, x=0.0, **kw):
    return evaluate(parse(src), x, kw)


def test_drift_expression_tree():
    e = parse("-b*sin(x)")
    # unary minus binds tighter than '*'
    assert e.root == BinOp("*", Neg(Param("b")), Call("sin", Var()))
    assert e.params == {"b"}


def test_identifiers_are_parameters():
    e = parse("1/(pi*(1+x^2))")
    assert e.params == {"pi"}
    with pytest.raises(UnboundParameterError) as info:
        evaluate(e, 0.0, {})
    assert info.value.name == "pi"
    assert evaluate(e, 0.0, {"pi": math.pi}) == pytest.approx(1 / math.pi)


def test_unterminated_call_reports_offset():
    with pytest.raises(ExprSyntaxError) as info:
        parse("sin(")
    assert info.value.offset == 4
    assert "expression" in info.value.expected


def test_unknown_function():
    with pytest.raises(UnknownFunctionError) as info:
        parse("2 + cosh(x)")
    assert info.value.name == "cosh"
    assert info.value.offset == 4


@pytest.mark.parametrize("src, x, bindings, expected", [
    ("-b*sin(x)", math.pi / 2, {"b": 0.5}, -0.5),
    ("sqrt(2)", 0.0, {}, 1.4142135623730951),
    ("x^2", -3.0, {}, 9.0),
    ("2+3*4", 0.0, {}, 14.0),
    ("2^3^2", 0.0, {}, 512.0),
    ("-2^2", 0.0, {}, -4.0),
    ("2^-1", 0.0, {}, 0.5),
    ("(1+2)*3", 0.0, {}, 9.0),
    ("8/2/2", 0.0, {}, 2.0),
    ("1-2-3", 0.0, {}, -4.0),
    ("1.5e2 + .5", 0.0, {}, 150.5),
    ("ln(exp(x))", 1.25, {}, 1.25),
    ("abs(x) + tanh(0) + cos(0) + tan(0)", -2.0, {}, 3.0),
])
def test_evaluate(src, x, bindings, expected):
    assert evaluate(parse(src), x, bindings) == expected


@pytest.mark.parametrize("src", ["ln(-1)", "sqrt(-1)", "1/0", "(-8)^(1/3)", "0/0"])
def test_domain_errors_are_non_finite(src):
    assert not math.isfinite(ev(src))


@pytest.mark.parametrize("src", ["2x", "x y", "", "()", "1+", "sin", "x)", "3 $ 4", "1..2"])
def test_syntax_errors(src):
    with pytest.raises(ExprSyntaxError):
        parse(src)


def test_vectorized_matches_scalar():
    e = parse("-b*x/(1+x^2) + c")
    x = np.linspace(-3, 3, 13)
    vec = evaluate(e, x, {"b": 2.0, "c": 0.25})
    assert vec.shape == x.shape
    assert all(v == evaluate(e, xi, {"b": 2.0, "c": 0.25}) for v, xi in zip(vec, x))


def test_constant_broadcasts_over_grid():
    assert np.array_equal(evaluate(parse("sqrt(2)"), np.zeros(4)), np.full(4, math.sqrt(2)))


def test_evaluation_is_deterministic():
    e = parse("exp(-x^2/(4*t))/(2*sqrt(pi*t))")
    x = np.linspace(-5, 5, 101)
    a = evaluate(e, x, {"t": 0.7, "pi": math.pi})
    b = evaluate(e, x, {"t": 0.7, "pi": math.pi})
    assert a.tobytes() == b.tobytes()


def test_bytes_input_and_bad_utf8():
    assert ev(b"1+1") == 2.0
    with pytest.raises(ExprSyntaxError):
        parse(b"1+\xff")


def test_deep_nesting_is_rejected_not_crashing():
    with pytest.raises(ExprSyntaxError):
        parse("(" * 5000 + "x" + ")" * 5000)
    with pytest.raises(ExprSyntaxError):
        parse("+".join(["1"] * 5000))


# -- round trip --------------------------------------------------------------

names = st.sampled_from(["a", "b", "theta", "pi", "t"])
leaves = st.one_of(
    st.floats(min_value=0, max_value=1e300, allow_nan=False).map(Num),
    st.just(Var()),
    names.map(Param),
)
trees = st.recursive(
    leaves,
    lambda kids: st.one_of(
        kids.map(Neg),
        st.tuples(st.sampled_from("+-*/^"), kids, kids).map(lambda t: BinOp(*t)),
        st.tuples(st.sampled_from(sorted(FUNCTIONS)), kids).map(lambda t: Call(*t)),
    ),
    max_leaves=25,
)


@given(trees)
def test_print_parse_round_trip(tree):
    assert parse(to_source(tree)).root == tree


@given(st.text(alphabet="x1.+-*/^() abs(sin)e", max_size=30))
def test_round_trip_of_valid_text(src):
    try:
        e = parse(src)
    except (ExprSyntaxError, UnknownFunctionError):
        return
    assert parse(to_source(e)).root == e.root


@settings(max_examples=500)
@given(st.one_of(st.text(max_size=60), st.binary(max_size=60)))
def test_parse_never_crashes(src):
    try:
        parse(src)
    except (ExprSyntaxError, UnknownFunctionError):
        pass
