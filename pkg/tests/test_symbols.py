import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sgfio import presets as P
from sgfio.handles import FormulaHandle
from sgfio.symbols import (SymbolError, asymptotic_sum, cutoff_diagonal, ellipticity_probe,
                           excision, jet_value, seminorm_probe, transition_probes)
from sgfio.weights import constant_weight, default_probes, theta_weight


def test_theta_symbol_in_own_class():
    a = P.make_symbol("theta", m=1, mu=1)
    rep = seminorm_probe(a, theta_weight(1, 1), 1, 1, 2, default_probes(1))
    assert rep.passed and rep.max_constant <= 2.0


def test_oscillating_symbol_not_sg00():
    rep = seminorm_probe(P.make_symbol("oscillating"), constant_weight(1.0), 1, 1, 2,
                         default_probes(1))
    assert not rep.passed
    assert rep.constant((1,), (0,)) > 100 and rep.constant((0,), (1,)) > 100


def test_constant_symbol_constants():
    rep = seminorm_probe(P.make_symbol("one", 2), constant_weight(1.0, 2), 1, 1, 3,
                         default_probes(2))
    assert rep.passed
    assert rep.constant((0, 0), (0, 0)) == 1.0
    assert all(c == 0 for a, b, c in rep.orders if sum(a) + sum(b) > 0)


@pytest.mark.parametrize("name", ["sg00", "sg00_real", "elliptic"])
def test_sg00_presets_pass(name):
    rep = seminorm_probe(P.make_symbol(name), constant_weight(1.0), 1, 1, 3, default_probes(1))
    assert rep.passed


def test_excision_plateaus():
    s = excision(4.0)
    assert s.evaluate([3.0], [2.0]) == 1.0
    assert s.evaluate([0.0], [0.0]) == 0.0
    assert s.evaluate([1.0], [0.9]) == 0.0  # |x| + |xi| <= R/2
    s2 = excision(4.0, 2)
    assert s2.evaluate([3.0, 1.0], [0.5, 0.5]) == 1.0


def test_excision_xi_mode():
    s = excision(4.0, 1, "xi")
    assert s.evaluate([100.0], [1.0]) == 0.0
    assert s.evaluate([0.0], [4.0]) == 1.0


def test_cutoff_plateaus():
    c = cutoff_diagonal(0.5)
    x = np.array([[0.0, 3.0, -7.0]])
    assert np.all(c.evaluate(x, x) == 1.0)
    jx = np.sqrt(1 + x ** 2)
    assert np.all(c.evaluate(x, x + 0.25 * jx) == 1.0)   # |y - x| <= k<x>/2
    assert np.all(c.evaluate(x, x - 0.5 * jx) == 0.0)    # |y - x| >= k<x>
    with pytest.raises(SymbolError):
        cutoff_diagonal(1.5)


def test_structure_functions_sg00_first_order():
    for h in (cutoff_diagonal(0.5), excision(4.0)):
        pr = default_probes(1).union(transition_probes(h))
        rep = seminorm_probe(h, constant_weight(1.0), 1, 1, 1, pr, threshold=50)
        assert rep.passed


def test_transition_probes_hit_band():
    h = excision(4.0)
    pr = transition_probes(h)
    v = np.asarray(h.evaluate(pr.x, pr.xi))
    assert np.any((v > 0) & (v < 1))


def test_asymptotic_sum_single_term_far_field():
    a0 = P.make_symbol("sg00_real")
    pr = default_probes(1)
    asum = asymptotic_sum([a0], [(0, 0)], (constant_weight(1.0), 1, 1), pr)
    R = asum.radii[0]
    far = (np.abs(pr.x[0]) + np.abs(pr.xi[0])) >= R
    assert np.allclose(asum.evaluate(pr.x[:, far], pr.xi[:, far]),
                       a0.evaluate(pr.x[:, far], pr.xi[:, far]))


def test_asymptotic_sum_tail_order():
    terms = [P.make_symbol("theta", m=0, mu=-j) for j in range(5)]
    tags = [(0, -j) for j in range(5)]
    asum = asymptotic_sum(terms, tags, (constant_weight(1.0), 0, 1), default_probes(1))
    assert asum.mode == "xi"
    assert all(r2 >= r1 for r1, r2 in zip(asum.radii, asum.radii[1:]))
    t = np.geomspace(4 * asum.radii[-1], 20 * asum.radii[-1], 8)
    x, xi = np.zeros((1, 8)), t[None]
    full = np.asarray(asum.evaluate(x, xi))
    for n in (1, 2, 3):
        tail = np.abs(full - np.asarray(asum.partial_sum(n).evaluate(x, xi)))
        slope = np.polyfit(np.log(np.sqrt(1 + t ** 2)), np.log(tail), 1)[0]
        assert abs(slope + n) < 0.05


def test_asymptotic_sum_rejects_bad_input():
    with pytest.raises(SymbolError):
        asymptotic_sum([], [], (constant_weight(1.0), 1, 1), default_probes(1))
    t = [P.make_symbol("one")] * 2
    with pytest.raises(SymbolError):
        asymptotic_sum(t, [(0, 0), (0, 1)], (constant_weight(1.0), 1, 1), default_probes(1))


def test_ellipticity_cases():
    pr = default_probes(1)
    rep = ellipticity_probe(P.make_symbol("theta", m=1, mu=1), theta_weight(1, 1), 1.0, pr)
    assert rep.passed and np.isclose(rep.inf_ratio, 1.0)
    rep = ellipticity_probe(P.make_symbol("x"), theta_weight(1, 0), 1.0, pr)
    assert not rep.passed and rep.witness[0] == [0.0]
    one_plus = FormulaHandle(lambda x, xi: 1 + theta_weight(1, 1)(x, xi), 2, 1, "1+theta")
    rep = ellipticity_probe(one_plus, theta_weight(1, 1), 1.0, pr)
    assert rep.passed and rep.inf_ratio >= 1.0


@given(st.floats(-20, 20), st.floats(-20, 20))
def test_excision_range_property(x, xi):
    v = float(excision(4.0).evaluate([x], [xi]))
    assert 0.0 <= v <= 1.0
    if abs(x) + abs(xi) >= 4.0:
        assert v == 1.0
    if abs(x) + abs(xi) <= 2.0:
        assert v == 0.0


@given(st.floats(-50, 50), st.floats(-1, 1))
def test_cutoff_range_property(x, frac):
    jx = math.sqrt(1 + x * x)
    v = float(cutoff_diagonal(0.5).evaluate([x], [x + frac * 0.5 * jx]))
    assert 0.0 <= v <= 1.0
    if abs(frac) <= 0.5:
        assert v == 1.0
    if abs(frac) >= 1.0:
        assert v == 0.0


def test_jet_value_matches_closed_form():
    a = P.make_symbol("x_xi")
    assert np.isclose(jet_value(a, [2.0], [3.0], (1,), (1,)), 1.0)
    assert np.isclose(jet_value(a, [2.0], [3.0], (1,), (0,)), 3.0)
