import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stefanlie.expr import (Const, DiffusivityTag, DomainError, ParseError, UnboundSymbolError,
                            ValidationError, classify_diffusivity, diff, evaluate, parse,
                            simplify, to_callable)


# -- evaluation ------------------------------------------------------------

@pytest.mark.parametrize("text, bindings, expected", [
    ("exp(u)", {"u": 0}, 1.0),
    ("u^(-4/3)", {"u": 8}, 0.0625),
    ("2*u + t", {"u": 3, "t": 1}, 7.0),
    ("erf(omega/2)", {"omega": 0}, 0.0),
    ("-u^2", {"u": 3}, -9.0),
    ("ln(exp(2))", {}, 2.0),
])
def test_evaluate_examples(text, bindings, expected):
    assert evaluate(parse(text), bindings) == pytest.approx(expected, rel=1e-15)


def test_unbound_symbol_is_named():
    with pytest.raises(UnboundSymbolError) as err:
        evaluate(parse("u + t"), {"u": 1.0})
    assert "t" in str(err.value)


def test_log_domain_error():
    with pytest.raises(DomainError):
        evaluate(parse("ln(u)"), {"u": -1.0})
    with pytest.raises(DomainError):
        evaluate(parse("ln(u)"), {"u": 0.0})


def test_evaluate_is_vectorized():
    u = np.linspace(0.5, 2, 7)
    np.testing.assert_allclose(evaluate(parse("u^2 + 1"), {"u": u}), u ** 2 + 1)


# -- parsing ---------------------------------------------------------------

@pytest.mark.parametrize("text, pos", [("u + * 2", 4), ("exp(u", 5), ("u $ 2", 2), ("q + 1", 0)])
def test_parse_error_position(text, pos):
    with pytest.raises(ParseError) as err:
        parse(text)
    assert err.value.position == pos


def test_unicode_aliases():
    e = parse("ξ + ω")
    assert e.free_symbols == {"xi", "omega"}


def test_exact_rational_exponent():
    e = simplify(parse("u^(-4/3)"))
    assert e.exponent == Fraction(-4, 3)


# -- differentiation -------------------------------------------------------

def test_diff_examples():
    assert simplify(diff(parse("exp(u)"), "u")) == simplify(parse("exp(u)"))
    assert simplify(diff(parse("3.5"), "t")) == Const(0)
    d = diff(parse("erf(omega/2)"), "omega")
    for w in (0.0, 0.7, 2.3):
        assert evaluate(d, {"omega": w}) == pytest.approx(math.exp(-w * w / 4) / math.sqrt(math.pi),
                                                          rel=1e-14)


def test_diff_closed_under_node_set():
    e = parse("ln(1 + u^2) * erf(u) + exp(-u) / (2 + u)")
    for _ in range(3):
        e = diff(e, "u")
    assert math.isfinite(evaluate(e, {"u": 0.4}))


# random expression trees in one symbol, positive on u in [0.5, 2]
_leaves = st.sampled_from(["u", "2", "0.5", "3/2", "t"])


def _combine(children):
    a, b = children
    return st.sampled_from([
        f"({a}) + ({b})", f"({a}) * ({b})", f"({a}) - ({b})", f"({a}) / (1 + ({b})^2)",
        f"exp(({a})/4)", f"ln(2 + ({a})^2)", f"erf({a})", f"({a})^3", f"(1 + ({a})^2)^(-4/3)",
    ])


exprs = st.recursive(_leaves, lambda c: st.tuples(c, c).flatmap(_combine), max_leaves=8)


def _fd_rel_err(e, s, b, h=1e-5):
    d = evaluate(diff(e, s), b)
    lo, hi = dict(b), dict(b)
    lo[s] -= h
    hi[s] += h
    fd = (evaluate(e, hi) - evaluate(e, lo)) / (2 * h)
    return abs(d - fd) / max(1.0, abs(d))


@settings(max_examples=60, deadline=None)
@given(exprs, st.lists(st.floats(0.5, 2.0), min_size=20, max_size=20),
       st.floats(0.5, 2.0))
def test_diff_matches_finite_differences(text, us, t):
    e = parse(text)
    for u in us:
        assert _fd_rel_err(e, "u", {"u": u, "t": t}) < 1e-6
    assert _fd_rel_err(e, "t", {"u": us[0], "t": t}) < 1e-6


@settings(max_examples=60, deadline=None)
@given(exprs, st.lists(st.tuples(st.floats(0.5, 2.0), st.floats(0.5, 2.0)), min_size=100,
                       max_size=100))
def test_simplify_preserves_value(text, points):
    e = parse(text)
    s = simplify(e)
    f, g = to_callable(e, ["u", "t"]), to_callable(s, ["u", "t"])
    for u, t in points:
        a, b = f(u, t), g(u, t)
        assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


@settings(max_examples=60, deadline=None)
@given(exprs)
def test_simplify_idempotent(text):
    s = simplify(parse(text))
    assert simplify(s) == s


def test_to_callable_vectorized_matches_scalar():
    e = parse("erf(u) * exp(-t) + u^(-4/3)")
    f = to_callable(e, ["u", "t"])
    fv = to_callable(e, ["u", "t"], vectorized=True)
    u = np.linspace(0.5, 2, 9)
    np.testing.assert_allclose(fv(u, 0.3), [f(a, 0.3) for a in u], rtol=1e-15)


# -- diffusivity classification --------------------------------------------

@pytest.mark.parametrize("text, tag", [
    ("3*exp(2*u)", DiffusivityTag.EXPONENTIAL),
    ("u^(-4/3)", DiffusivityTag.POWER_MINUS_4_3),
    ("1 + u + exp(u)", DiffusivityTag.ARBITRARY),
    ("2.5", DiffusivityTag.CONSTANT),
    ("(u + 1)^2", DiffusivityTag.POWER),
    ("1 + u^2", DiffusivityTag.ARBITRARY),
])
def test_classify_examples(text, tag):
    assert classify_diffusivity(parse(text), "u").tag == tag


def test_classify_normalization_data():
    c = classify_diffusivity(parse("3*exp(2*u)"), "u")
    assert c.rate == pytest.approx(2.0) and c.scale == pytest.approx(3.0)
    c = classify_diffusivity(parse("5*(u - 0.25)^3"), "u")
    assert c.exponent == pytest.approx(3) and c.shift == pytest.approx(0.25) and c.scale == pytest.approx(5.0)


def test_minus_four_thirds_needs_exact_exponent():
    assert classify_diffusivity(parse("u^(-1.3333333333)"), "u").tag == DiffusivityTag.POWER
    assert classify_diffusivity(parse("u^(-4/3)"), "u").tag == DiffusivityTag.POWER_MINUS_4_3


def test_numeric_fallback_recognizes_equivalent_form():
    # exp(u)*exp(u) is exp(2u) written as a product
    c = classify_diffusivity(parse("exp(u) * exp(u) * 2"), "u")
    assert c.tag == DiffusivityTag.EXPONENTIAL and c.rate == pytest.approx(2.0)


def test_classify_rejects_nonpositive():
    with pytest.raises(ValidationError):
        classify_diffusivity(parse("u - 1"), "u", domain=(0.5, 2.0))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["exp(u)", "u^2", "u^(-4/3)", "1 + u + exp(u)", "4", "u^(1/2)"]),
       st.floats(0.1, 10.0), st.floats(-0.4, 0.4))
def test_classification_invariant_under_scaling_and_shift(base, a, c):
    e = parse(base)
    shifted = simplify(Const(a) * parse(base.replace("u", f"(u - ({c!r}))")))
    c0 = classify_diffusivity(e, "u", domain=(0.5, 2.0))
    c1 = classify_diffusivity(shifted, "u", domain=(0.5 + c, 2.0 + c))
    assert c0.same_pattern(c1)
