import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sgfio import presets as P
from sgfio.handles import FormulaHandle
from sgfio.phases import (NewtonError, PhaseError, averaged_gradient, canonical_transform,
                          invert_gradient, inverse_gradient_handles, phase_probe,
                          s_phi_transform)
from sgfio.weights import default_probes, lattice_probes


def test_identity_phase_report():
    rep = phase_probe(P.make_phase("identity"), default_probes(1))
    assert rep.simple and rep.regular
    assert rep.grad_xi_ratio == (1.0, 1.0) and rep.grad_x_ratio == (1.0, 1.0)
    assert rep.det_min == 1.0 and rep.det_max == 1.0


def test_perturbed_determinant_closed_form():
    ph = P.make_phase("perturbed", eps=0.5)
    so = ph.second_order(np.array([[1.0]]), np.array([[1.0]]))
    assert np.isclose(np.squeeze(so["hxxi"]), 1.25)
    rep = phase_probe(ph, default_probes(1))
    assert rep.regular
    assert 0.5 - 1e-12 <= rep.det_min and rep.det_max <= 1.5 + 1e-12


def test_perturbed_mixed_hessian_matches_jets():
    ph = P.make_phase("perturbed", eps=0.5)
    x, xi = np.array([[0.3, -2.0]]), np.array([[1.7, 4.0]])
    so = ph.second_order(x, xi)
    jet = ph.jet(x, xi, order=2)
    assert np.allclose(np.squeeze(so["hxxi"]), jet.partial((1, 1)))
    jx, jxi = np.sqrt(1 + x ** 2), np.sqrt(1 + xi ** 2)
    assert np.allclose(np.squeeze(so["hxxi"]), (1 + 0.5 * x * xi / (jx * jxi))[0])


def test_cubic_phase_not_simple():
    rep = phase_probe(P.make_phase("cubic"), default_probes(1))
    assert not rep.simple
    assert rep.grad_x_ratio[1] > 100
    assert any("grad_x_ratio" in f for f in rep.failures())


def test_degenerate_phase_not_regular():
    rep = phase_probe(P.make_phase("degenerate"), default_probes(1))
    assert not rep.regular


def test_invert_identity():
    ph = P.make_phase("identity")
    eta = invert_gradient(ph, "x", [[0.5, 3.0]], [[2.0, -1.0]])
    assert np.allclose(eta, [[2.0, -1.0]])


def test_invert_transport_xi_side():
    ph = P.make_phase("transport", t=1.0)
    xi0 = np.array([[-3.0, 0.5, 2.0]])
    y0 = np.array([[1.0, -2.0, 0.0]])
    x = invert_gradient(ph, "xi", xi0, y0)
    assert np.allclose(x, y0 - xi0 / np.sqrt(1 + xi0 ** 2), atol=1e-12)


def test_invert_degenerate_raises_with_trace():
    with pytest.raises(NewtonError) as info:
        invert_gradient(P.make_phase("degenerate"), "x", [[0.0]], [[5.0]], use_cache=False)
    assert info.value.trace


def test_canonical_transform_examples():
    y, xi = canonical_transform(P.make_phase("identity"), np.array([[1.5]]), np.array([[-2.0]]))
    assert np.allclose(y, 1.5) and np.allclose(xi, -2.0)
    y, xi = canonical_transform(P.make_phase("transport", t=1.0), np.array([[0.0]]),
                                np.array([[1.0]]))
    assert np.allclose(xi, 1.0) and np.isclose(np.squeeze(y), 1 / math.sqrt(2))


@given(st.floats(-30, 30), st.floats(-30, 30), st.floats(0.05, 0.6))
def test_canonical_roundtrip_property(x, eta, eps):
    ph = P.make_phase("perturbed", eps=eps)
    _, xi = canonical_transform(ph, np.array([[x]]), np.array([[eta]]))
    back = invert_gradient(ph, "x", [[x]], xi, use_cache=False)
    assert abs(back[0, 0] - eta) <= 1e-10 * (1 + abs(eta))


def test_averaged_gradient_identity_is_xi():
    g = averaged_gradient(P.make_phase("identity"), [np.array(1.0)], [np.array(-2.0)],
                          [np.array(0.7)])
    assert np.isclose(g[0], 0.7)


def _c0(d=1):
    return FormulaHandle(lambda x, y, xi: 1.0 + 0 * x[0] + 0 * y[0] + 0 * xi[0], 3, d, "1")


def test_s_phi_identity_is_identity():
    S = s_phi_transform(_c0(), P.make_phase("identity"), "xy")
    p, q, t = np.array([[0.5, -1.0]]), np.array([[0.6, -1.2]]), np.array([[2.0, 3.0]])
    sol, _ = S.solve(p, q, t)
    assert np.allclose(sol, t)


def test_s_phi_diagonal_matches_inverse_gradient():
    ph = P.make_phase("perturbed", eps=0.3)
    S = s_phi_transform(_c0(), ph, "xy")
    x, target = np.array([[0.4, -3.0, 10.0]]), np.array([[2.0, -5.0, 0.5]])
    sol, _ = S.solve(x, x, target)
    assert np.allclose(sol, invert_gradient(ph, "x", x, target), atol=1e-10)


def test_s_phi_jacobian_lower_bound():
    ph = P.make_phase("perturbed", eps=0.3)
    S = s_phi_transform(_c0(), ph, "xy")
    pr = lattice_probes(1, 4.0, 5)
    p = pr.x
    q = p + 0.3 * np.sqrt(1 + p ** 2) * np.cos(np.arange(p.shape[1]))
    xi, h = pr.xi, 1e-5
    dphi = (S.solve(p, q, xi + h)[0] - S.solve(p, q, xi - h)[0]) / (2 * h)
    sup_det = phase_probe(ph, default_probes(1)).det_max
    assert np.all(np.abs(dphi) >= 1 / (2 * sup_det))


def test_s_phi_outside_cutoff_rejected():
    S = s_phi_transform(_c0(), P.make_phase("perturbed", eps=0.3), "xy", k_cutoff=0.5)
    with pytest.raises(PhaseError):
        S.evaluate([0.0], [5.0], [1.0])


@pytest.mark.parametrize("side", ["x", "xi"])
def test_inverse_gradient_jets(side):
    """Jet derivatives of the Newton-defined inverse against central differences."""
    ph = P.make_phase("perturbed", eps=0.3)
    h = inverse_gradient_handles(ph, side)[0]
    a, b, step = 0.7, -1.3, 1e-3
    jet = h.jet([[a]], [[b]], order=2)
    f = lambda u, v: float(np.squeeze(h.evaluate([[u]], [[v]])))  # noqa: E731
    d_a = (f(a + step, b) - f(a - step, b)) / (2 * step)
    d_b = (f(a, b + step) - f(a, b - step)) / (2 * step)
    d_aa = (f(a + step, b) - 2 * f(a, b) + f(a - step, b)) / step ** 2
    assert np.isclose(np.squeeze(jet.partial((1, 0))), d_a, rtol=1e-6)
    assert np.isclose(np.squeeze(jet.partial((0, 1))), d_b, rtol=1e-6)
    assert np.isclose(np.squeeze(jet.partial((2, 0))), d_aa, rtol=1e-4, atol=1e-6)
