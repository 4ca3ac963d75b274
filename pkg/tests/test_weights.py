import math

import numpy as np
import pytest
from hypothesis import example, given, strategies as st

from sgfio import presets as P
from sgfio.weights import (ProbeSet, constant_weight, default_probes, far_field,
                           invariance_probe, lattice_probes, log_radial_probes, random_probes,
                           theta_transform, theta_weight, weight_probe, weight_product)
from sgfio.symbols import jet_value


def test_theta_closed_form():
    w = theta_weight(2, 2)
    assert np.isclose(w.evaluate([math.sqrt(3)], [1.0]), 8.0)


def test_theta_zero_is_one():
    w = theta_weight(0, 0, 2)
    pts = np.array([[0.3, 5.0], [-2.0, 1.0]])
    assert np.allclose(w.evaluate(pts, pts), 1.0)
    for a in ((1, 0), (0, 1)):
        assert np.allclose(jet_value(w, pts, pts, a, (0, 0)), 0.0)


def test_theta_derivative_oracle():
    w = theta_weight(1, 0)
    assert np.isclose(jet_value(w, [1.0], [0.0], (1,), (0,)), 1 / math.sqrt(2))


def test_moderation_theta11_passes():
    rep = weight_probe(theta_weight(1, 1), 1, 1, 2, default_probes(1))
    assert rep.passed
    assert max(c for a, b, c in rep.orders if sum(a) + sum(b) > 0) <= 2.0


def test_moderation_wrong_class_fails():
    rep = weight_probe(theta_weight(1, 1), 2, 2, 1, default_probes(1))
    assert not rep.passed
    assert rep.constant((1,), (0,)) > 100


def test_constant_weight_ratios_vanish():
    rep = weight_probe(constant_weight(1.0), 3, 3, 3, default_probes(1))
    assert rep.passed
    assert all(c == 0 for a, b, c in rep.orders if sum(a) + sum(b) > 0)


def test_theta_transform_identity_phase():
    phase = P.make_phase("identity")
    pr = default_probes(1)
    for side, (m, mu) in ((2, (0, 1)), (1, (1, 0))):
        w = theta_weight(m, mu)
        t = theta_transform(w, phase, side)
        assert np.allclose(t.evaluate(pr.x, pr.xi), w.evaluate(pr.x, pr.xi))


def test_theta_transform_perturbed_at_origin():
    t = theta_transform(theta_weight(0, 1), P.make_phase("perturbed", eps=0.5), 2)
    assert np.isclose(t.evaluate([0.0], [0.0]), 1.0)
    # phi'_x = xi + x <xi> / (2 <x>) at x = xi = 1
    want = math.sqrt(1 + (1 + math.sqrt(2) / (2 * math.sqrt(2))) ** 2)
    assert np.isclose(t.evaluate([1.0], [1.0]), want)


@pytest.mark.parametrize("phase", ["identity", "transport", "perturbed"])
@pytest.mark.parametrize("side", [1, 2])
def test_theta_weights_are_invariant(phase, side):
    ph = P.make_phase(phase)
    rep = invariance_probe(theta_weight(1.0, -0.5), ph, side, default_probes(1))
    assert rep.passed


def test_unit_weight_invariance_exact():
    rep = invariance_probe(constant_weight(1.0), P.make_phase("perturbed"), 1, default_probes(1))
    assert rep.ratio_max == 1 and rep.ratio_min == 1


def test_identity_phase_theta_ratio_is_one():
    rep = invariance_probe(theta_weight(1, 1), P.make_phase("identity"), 1, default_probes(1))
    assert np.isclose(rep.theta_ratio_max, 1) and np.isclose(rep.theta_ratio_min, 1)


def test_probe_sets():
    lr = log_radial_probes(2)
    assert lr.dim == 2 and lr.span_decades()[0] > 2.9
    rp = random_probes(1, 50, seed=3)
    assert len(rp) == 50
    assert np.array_equal(rp.x, random_probes(1, 50, seed=3).x)
    lat = lattice_probes(1, 2.0, 3)
    assert len(lat) == 9
    far = far_field(lat, 3.0)
    assert np.all(np.abs(far.x) + np.abs(far.xi) >= 3.0)
    with pytest.raises(ValueError):
        ProbeSet(np.zeros((1, 0)), np.zeros((1, 0)))


def test_weight_product():
    w = weight_product(theta_weight(1, 0), theta_weight(0, 2))
    assert np.isclose(w.evaluate([1.0], [1.0]), math.sqrt(2) * 2)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-50, 50), st.floats(-50, 50),
       st.floats(-50, 50), st.floats(-50, 50))
@example(0.0, 1.0, 0.0, 1.0, 0.0, 1.0)
def test_peetre_property(m, mu, x, xi, y, eta):
    """theta weights are v-moderate: <a+b>^s <= 2^(|s|/2) <a>^s <b>^|s|."""
    w = theta_weight(m, mu)
    s = abs(m) + abs(mu)
    lhs = float(w.evaluate([x + y], [xi + eta]))
    rhs = float(w.evaluate([x], [xi])) * 2 ** (s / 2) * (1 + y * y + eta * eta) ** (s / 2)
    assert lhs <= rhs * (1 + 1e-12)


def test_peetre_constant_is_needed():
    w = theta_weight(0, 1)
    # <1 + 1> = sqrt(5) exceeds <1> <1> = 2
    assert float(w.evaluate([0.0], [2.0])) > float(w.evaluate([0.0], [1.0])) ** 2
