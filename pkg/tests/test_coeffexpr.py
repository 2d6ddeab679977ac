import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from tdhsim import coeffexpr as ce
from tdhsim.errors import ExprSyntaxError

consts = st.floats(0.0, 2.0, allow_nan=False).map(lambda v: ce.Const(round(v, 3)))
leaves = st.one_of(consts, st.just(ce.T))


def _extend(children):
    binary = st.sampled_from([ce.Add, ce.Sub, ce.Mul])
    unary = st.sampled_from([ce.Neg, ce.Sin, ce.Cos, ce.Exp])
    return st.one_of(
        st.builds(lambda f, a, b: f(a, b), binary, children, children),
        st.builds(lambda f, a: f(a), unary, children),
        st.builds(ce.Pow, children, st.integers(0, 3)),
    )


exprs = st.recursive(leaves, _extend, max_leaves=6)


def depth(e):
    kids = [getattr(e, f) for f in ("left", "right", "arg", "base") if hasattr(e, f)]
    return 1 + max((depth(k) for k in kids), default=0)


STENCILS = {1: [(-1, -0.5), (1, 0.5)], 2: [(-1, 1), (0, -2), (1, 1)],
            3: [(-2, -0.5), (-1, 1), (1, -1), (2, 0.5)]}


@settings(max_examples=200, deadline=None)
@given(exprs, st.integers(1, 3), st.floats(0.2, 0.8))
def test_derivatives_match_finite_differences(e, j, t):
    assume(depth(e) <= 5)
    h = 1e-3
    with np.errstate(all="ignore"):
        fd = sum(w * ce.eval_float(e, t + o * h) for o, w in STENCILS[j]) / h**j
        exact = ce.eval_float(ce.differentiate(e, j), t)
        # scale covers the stencil's truncation (derivative j+2) and roundoff terms
        higher = abs(ce.eval_float(ce.differentiate(e, j + 2), t))
        scale = max(abs(ce.eval_float(e, t)), abs(exact), higher)
    assume(all(math.isfinite(v) for v in (fd, exact, scale)) and scale < 1e6)
    assert abs(fd - exact) <= max(1e-4, 1e-4 * scale)


@settings(max_examples=200, deadline=None)
@given(exprs)
def test_print_parse_round_trip(e):
    once = ce.parse(ce.to_text(e))
    assert once == e
    assert ce.parse(ce.to_text(once)) == once


@pytest.mark.parametrize("text, t, value", [
    ("t*t*0.3", 0.7, 0.147),
    ("2^3", 0.0, 8.0),
    ("-t^2", 0.5, -0.25),
    ("t**2*3", 1.0, 3.0),
    ("-(t) + 1", 0.25, 0.75),
    ("exp(0)", 0.3, 1.0),
    ("1 - 2 - 3", 0.0, -4.0),
    ("2*3^2", 0.0, 18.0),
])
def test_parse_and_evaluate(text, t, value):
    assert ce.eval_float(ce.parse(text), t) == pytest.approx(value)


def test_derivative_example():
    d = ce.differentiate(ce.parse("t*t*0.3"))
    assert ce.eval_float(d, 0.7) == pytest.approx(0.42, abs=1e-14)


def test_derivative_of_cos_folds_constants():
    assert ce.to_text(ce.differentiate(ce.parse("cos(t)"))) == "(-sin(t))"
    assert ce.is_zero(ce.differentiate(ce.parse("0.4"), 2))


@pytest.mark.parametrize("text, offset", [
    ("cos(t", 5), ("t +", 3), ("2 ^ t", 4), ("foo(t)", 0), ("t $ 2", 2), ("", 0), ("(t))", 3),
])
def test_syntax_errors_report_offsets(text, offset):
    with pytest.raises(ExprSyntaxError) as info:
        ce.parse(text)
    assert info.value.offset == offset


def test_offsets_are_bytes():
    with pytest.raises(ExprSyntaxError) as info:
        ce.parse("t + ő")
    assert info.value.offset == 4


def test_bound_abs():
    assert ce.bound_abs(ce.parse("cos(t)"), 4096) == pytest.approx(1.0)
    assert ce.bound_abs(ce.parse("sin(t)"), 4096) == pytest.approx(math.sin(1.0))
    a, b = ce.bound_abs(ce.parse("sin(7*t)"), 4096), ce.bound_abs(ce.parse("sin(7*t)"), 65536)
    assert abs(a - b) <= 1e-5


def test_evaluate_broadcasts():
    grid = np.linspace(0, 1, 5)
    assert ce.evaluate(ce.parse("0.5"), grid).shape == (5,)
