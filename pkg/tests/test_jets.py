import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from sgfio import jets as J
from sgfio.jets import Jet

from oracles import sympy_partials

finite = st.floats(-3, 3, allow_nan=False)


def _jet_partials(fn, point, order):
    zs = Jet.variables([np.array(p) for p in point], order)
    out = fn(*zs)
    return {m: complex(out.partial(m)) for m in J.multi_indices(len(point), order)}


def _compare(fn_jet, expr, syms, point, order, tol=1e-11):
    got = _jet_partials(fn_jet, point, order)
    want = sympy_partials(expr, syms, point, order)
    for m, w in want.items():
        assert abs(got[m] - w) <= tol * max(1.0, abs(w)), (m, got[m], w)


def test_layout_graded_order():
    ms = J.multi_indices(2, 2)
    assert ms[0] == (0, 0)
    assert set(ms[1:3]) == {(1, 0), (0, 1)}
    assert J.n_coefficients(2, 2) == 6
    assert J.n_coefficients(4, 4) == math.comb(8, 4)


def test_variables_seed_identity():
    x, y = Jet.variables([np.array(1.5), np.array(-2.0)], 3)
    assert x.partial((1, 0)) == 1 and x.partial((0, 1)) == 0
    assert y.value == -2.0


def test_polynomial_product_exact():
    x, y = sp.symbols("x y")
    _compare(lambda a, b: a * a * b + 3 * b ** 3 - a, x * x * y + 3 * y ** 3 - x, (x, y),
             (0.7, -1.2), 4)


@pytest.mark.parametrize("name", ["exp", "sin", "cos", "log", "sqrt", "reciprocal"])
def test_elementary_against_sympy(name):
    x, y = sp.symbols("x y")
    inner = 2 + x * x + sp.Rational(1, 2) * y
    sym = {"exp": sp.exp, "sin": sp.sin, "cos": sp.cos, "log": sp.log, "sqrt": sp.sqrt,
           "reciprocal": lambda e: 1 / e}[name]
    fn = getattr(J, name)
    _compare(lambda a, b: fn(2 + a * a + 0.5 * b), sym(inner), (x, y), (0.3, 0.9), 4)


def test_power_and_japanese():
    x, y = sp.symbols("x y")
    _compare(lambda a, b: J.power(J.japanese([a, b]), -1.5),
             (1 + x * x + y * y) ** sp.Rational(-3, 4), (x, y), (1.1, -0.4), 4)


def test_complex_division_and_conj():
    x = sp.symbols("x", real=True)
    _compare(lambda a: J.conj((1 + 1j * a) / (2 - a)), sp.conjugate((1 + sp.I * x) / (2 - x)),
             (x,), (0.25,), 4)


def test_compose_matches_direct():
    a, b = Jet.variables([np.array(0.4), np.array(1.3)], 3)
    inner = [J.sin(a) + b, a * b]
    base = [float(g.value) for g in inner]
    u, v = Jet.variables([np.array(base[0]), np.array(base[1])], 3)
    outer = J.exp(u) * v + u * u
    composed = outer.compose(inner)
    direct = J.exp(inner[0]) * inner[1] + inner[0] * inner[0]
    assert np.allclose(composed.coef, direct.coef, atol=1e-13)


def test_derivative_shifts_coefficients():
    x, y = Jet.variables([np.array(0.5), np.array(0.2)], 4)
    f = J.exp(x) * J.sin(y)
    g = f.derivative((1, 1))
    assert g.order == 2
    assert np.isclose(g.value, math.exp(0.5) * math.cos(0.2))
    assert np.isclose(g.partial((1, 0)), math.exp(0.5) * math.cos(0.2))


def test_batch_evaluation_matches_scalar():
    pts = np.linspace(-1, 1, 5)
    (x,) = Jet.variables([pts], 3)
    f = J.exp(x * x)
    for k, p in enumerate(pts):
        (xs,) = Jet.variables([np.array(p)], 3)
        assert np.allclose(f.coef[:, k], J.exp(xs * xs).coef)


def test_order_mismatch_rejected():
    (x,) = Jet.variables([np.array(0.0)], 2)
    with pytest.raises(ValueError):
        x.partial((3,))
    with pytest.raises(ValueError):
        x.truncate(5)


def test_smooth_step_plateaus_exact():
    s = np.array([-1.0, 0.0, 0.25, 0.5, 1.0, 2.0])
    v = J.smooth_step(s, 0.0, 1.0)
    assert v[0] == 1 and v[1] == 1 and v[-1] == 0 and v[-2] == 0
    assert np.isclose(v[3], 0.5)
    rev = J.smooth_step(s, 1.0, 0.0)
    assert np.allclose(rev, 1 - v)
    (t,) = Jet.variables([s], 3)
    jv = J.smooth_step(t, 0.0, 1.0)
    for k in (0, 1, 4, 5):
        assert np.all(jv.coef[1:, k] == 0)


def test_smooth_step_derivative_against_mpmath():
    import mpmath

    f = lambda s: J.smooth_step(s, mpmath.mpf(0), mpmath.mpf(1))  # noqa: E731
    for s0 in (0.05, 0.3, 0.7, 0.97):
        (t,) = Jet.variables([np.array(s0)], 4)
        jv = J.smooth_step(t, 0.0, 1.0)
        for m in range(1, 5):
            ref = float(mpmath.diff(f, mpmath.mpf(s0), m))
            assert abs(jv.partial((m,)) - ref) <= 1e-8 * max(1.0, abs(ref))


@given(finite, finite)
def test_product_rule_property(a0, b0):
    a, b = Jet.variables([np.array(a0), np.array(b0)], 3)
    f, g = J.sin(a) + b, J.exp(0.1 * a * b)
    lhs = (f * g).derivative((1, 0))
    rhs = f.derivative((1, 0)) * g.truncate(2) + f.truncate(2) * g.derivative((1, 0))
    assert np.allclose(lhs.coef, rhs.coef, rtol=1e-10, atol=1e-12)


@given(st.floats(0.1, 5), st.floats(-2, 2))
def test_reciprocal_roundtrip_property(a0, b0):
    a, b = Jet.variables([np.array(a0), np.array(b0)], 4)
    f = a + b * b + 0.5
    one = f * J.reciprocal(f)
    assert np.isclose(one.value, 1.0)
    assert np.allclose(one.coef[1:], 0, atol=1e-9 * (1 + abs(f.value)) ** 4)
