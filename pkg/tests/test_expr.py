import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hjd.exceptions import EvaluationError, ExprSyntaxError, UnknownIdentifierError
from hjd.expr import (Binary, Clamp, Const, Unary, Var, compile_expr, eval_array, eval_expr,
                      parse_expr, to_source)
from hjd.sde import BUILTIN_MODELS, builtin_model

X = Var()


def test_negated_product_tree():
    # prefix minus binds tighter than '*': (-4)*x
    assert parse_expr("-4*x") == Binary("*", Unary("neg", Const(4.0)), X)


def test_sqrt_formula_tree():
    want = Unary("sqrt", Binary("+", Const(2.0), Binary("*", Const(0.5), Unary("sin", X))))
    assert parse_expr("sqrt(2+0.5*sin(x))") == want


def test_syntax_error_offset():
    with pytest.raises(ExprSyntaxError) as ei:
        parse_expr("2+*x")
    assert ei.value.offset == 2
    assert "offset 2" in str(ei.value)


@pytest.mark.parametrize("src", ["", "   ", "(x", "x)", "sin x", "clamp(x,1)", "2 3", "x^"])
def test_malformed(src):
    with pytest.raises(ExprSyntaxError):
        parse_expr(src)


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifierError):
        parse_expr("y+1")
    with pytest.raises(UnknownIdentifierError):
        parse_expr("log(x)")


def test_offsets_are_utf8_bytes():
    with pytest.raises(ExprSyntaxError) as ei:
        parse_expr("x+é")
    assert ei.value.offset == 2


@pytest.mark.parametrize("src,x,want", [
    ("-4*x", 2.0, -8.0),
    ("sqrt(2+0.5*sin(x))", 0.0, math.sqrt(2)),
    ("clamp(x,-5,5)", 7.0, 5.0),
    ("clamp(x,-5,5)", -7.0, -5.0),
    ("2^3^2", 0.0, 512.0),
    ("-x^2", 3.0, -9.0),
    ("(-x)^2", 3.0, 9.0),
    ("1-2-3", 0.0, -4.0),
    ("8/4/2", 0.0, 1.0),
    ("abs(x)*exp(0)", -2.5, 2.5),
])
def test_eval_examples(src, x, want):
    assert eval_expr(parse_expr(src), x) == pytest.approx(want, rel=0, abs=1e-15)


@pytest.mark.parametrize("src,x", [("sqrt(x)", -1.0), ("1/x", 0.0), ("exp(x)", 1000.0),
                                   ("x^0.5", -2.0)])
def test_domain_errors(src, x):
    e = parse_expr(src)
    with pytest.raises(EvaluationError):
        eval_expr(e, x)
    with pytest.raises(EvaluationError):
        eval_array(e, np.array([1.0, x]))


HAND_CODED = {
    "a": (lambda x: -4 * x, lambda x: 1.0, lambda x: math.sqrt(2 + 0.5 * math.sin(x))),
    "b": (lambda x: -2 * x + math.sin(x), lambda x: math.sqrt((3 + x * x) / (1 + x * x)),
          lambda x: 1.0),
    "c": (lambda x: -2 * x, lambda x: math.sqrt(1 + x * x), lambda x: 1.0),
    "d": (lambda x: -2 * x, lambda x: math.sqrt(1 + x * x), lambda x: min(max(x, -5.0), 5.0)),
}


@pytest.mark.parametrize("name", sorted(BUILTIN_MODELS))
def test_builtin_formulas_match_hand_coded(name):
    m = builtin_model(name)
    xs = np.linspace(-10, 10, 1001)
    for e, ref in zip((m.b, m.sigma, m.a), HAND_CODED[name]):
        f = compile_expr(e)
        want = np.array([ref(x) for x in xs])
        assert np.max(np.abs([f(x) for x in xs] - want)) <= 1e-12
        assert np.max(np.abs(eval_array(e, xs) - want)) <= 1e-12


# ---- round trip


consts = st.floats(min_value=0, max_value=1e6, allow_nan=False, allow_infinity=False).map(Const)
leaves = st.one_of(st.just(X), consts)


def _extend(children):
    return st.one_of(
        st.builds(Unary, st.sampled_from(["neg", "sin", "cos", "exp", "sqrt", "abs"]), children),
        st.builds(Binary, st.sampled_from(["+", "-", "*", "/", "^"]), children, children),
        st.builds(Clamp, children, children, children),
    )


exprs = st.recursive(leaves, _extend, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(exprs)
def test_print_parse_round_trip(e):
    assert parse_expr(to_source(e)) == e


@settings(max_examples=200, deadline=None)
@given(exprs, st.floats(-3, 3))
def test_compiled_matches_array_eval(e, x):
    f = compile_expr(e)
    try:
        v = f(x)
    except EvaluationError:
        with pytest.raises(EvaluationError):
            eval_array(e, np.array([x]))
        return
    w = float(eval_array(e, np.array([x]))[0])
    assert v == pytest.approx(w, rel=1e-12, abs=1e-300)
