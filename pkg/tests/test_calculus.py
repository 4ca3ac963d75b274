import math
import warnings

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from sgfio import calculus as C
from sgfio import operators as O
from sgfio import presets as P
from sgfio.grid import make_grid
from sgfio.grid import test_function as sample
from sgfio.handles import FormulaHandle
from sgfio.verify import relative_defect
from sgfio.weights import lattice_probes

from oracles import kn_product_terms

PERT = P.make_phase("perturbed", eps=0.3)
IDENT = P.make_phase("identity")
PTS = lattice_probes(1, 3.0, 5)


def _ev(h, pr=PTS):
    return np.broadcast_to(np.asarray(h.evaluate(pr.x, pr.xi)), (len(pr),))


def test_psi_derivative_low_orders():
    a = P.make_symbol("sg00")
    x, xi = np.array([[0.5, -2.0]]), np.array([[1.0, 3.0]])
    assert np.allclose(C.psi_derivative(PERT, a, (0,), x, xi), a.evaluate(x, xi))
    da = a.jet(x, xi, order=1).partial((1, 0))
    assert np.allclose(C.psi_derivative(PERT, a, (1,), x, xi), -1j * da)


def test_psi_derivative_second_order_closed_form():
    eps = 0.5
    ph = P.make_phase("perturbed", eps=eps)
    x, xi = np.array([[0.5, -2.0, 7.0]]), np.array([[1.0, 3.0, -0.2]])
    got = C.psi_derivative(ph, P.make_symbol("one"), (2,), x, xi)
    phi_xx = eps * np.sqrt(1 + xi ** 2) / (1 + x ** 2) ** 1.5
    assert np.allclose(got, (-1j * phi_xx)[0], atol=1e-12)


def test_expansion_term_zero_is_product():
    p, a = P.make_symbol("japanese_xi"), P.make_symbol("sg00")
    t = C.expansion_term(p, a, PERT, (0,)).term
    gx = PERT.grad_x(list(PTS.x), list(PTS.xi))
    want = np.sqrt(1 + np.asarray(gx[0]) ** 2) * _ev(a)
    assert np.allclose(_ev(t), want)


def test_identity_phase_terms_match_classical_oracle():
    x, xi = sp.symbols("x xi", real=True)
    p_expr = sp.sqrt(1 + xi ** 2) * (1 + x / (2 * sp.sqrt(1 + x ** 2)))
    a_expr = (1 + x / (2 * sp.sqrt(1 + x ** 2))) * (1 + sp.I * xi / (4 * sp.sqrt(1 + xi ** 2)))
    want = kn_product_terms(p_expr, a_expr, x, xi, 3)
    res = C.compose_mixed("pdo_fio1", P.make_symbol("amp_japanese_xi"), P.make_symbol("sg00"),
                          IDENT, 3)
    for term, w in zip(res.terms, want):
        f = sp.lambdify((x, xi), w, "numpy")
        ref = np.broadcast_to(f(PTS.x[0], PTS.xi[0]), (len(PTS),))
        assert np.allclose(_ev(term.term), ref, atol=1e-12)


def test_leibniz_case_terminates():
    a = P.make_symbol("bump_modulated")
    res = C.compose_mixed("pdo_fio1", P.make_symbol("xi"), a, PERT, 2)
    gx = np.asarray(PERT.grad_x(list(PTS.x), list(PTS.xi))[0])
    da = a.jet(PTS.x, PTS.xi, order=1).partial((1, 0))
    assert np.allclose(_ev(res.symbol), gx * _ev(a) - 1j * da, atol=1e-13)
    res3 = C.compose_mixed("pdo_fio1", P.make_symbol("xi"), a, PERT, 3)
    assert np.allclose(_ev(res3.symbol), _ev(res.symbol), atol=1e-13)


@pytest.mark.parametrize("M", [1, 2, 3])
def test_fio1_pdo_frequency_multiplier_commutes(M):
    a, p = P.make_symbol("sg00"), P.make_symbol("japanese_xi")
    res = C.compose_mixed("fio1_pdo", p, a, PERT, M)
    want = _ev(a) * np.sqrt(1 + PTS.xi[0] ** 2)
    assert np.allclose(_ev(res.symbol), want, atol=1e-12)


def test_adjoint_symbol():
    p = P.make_symbol("x_xi")
    q1 = C.kn_adjoint_symbol(p, 1)
    assert np.allclose(_ev(q1), np.conj(_ev(p)))
    q2 = C.kn_adjoint_symbol(p, 2)
    assert np.allclose(_ev(q2), _ev(p) - 1j)
    real_xi = P.make_symbol("japanese_xi")
    assert np.allclose(_ev(C.kn_adjoint_symbol(real_xi, 3)), _ev(real_xi))


def test_adjoint_symbol_quantizes_to_adjoint():
    g = make_grid(1, 256, 10.0)
    u = sample(g, "gaussian")
    lhs = O.pdo(P.make_symbol("x_xi"), t=1.0)
    rhs = O.pdo(C.kn_adjoint_symbol(P.make_symbol("x_xi"), 2))
    assert relative_defect(lhs, rhs, u) < 1e-10


@pytest.mark.parametrize("order", ["I_II", "II_I"])
def test_pair_identity_collapse(order):
    a, b = P.make_symbol("sg00"), P.make_symbol("elliptic")
    res = C.compose_fio_pair(order, a, b, IDENT, 1)
    assert np.allclose(_ev(res.symbol), _ev(a) * np.conj(_ev(b)), atol=1e-12)
    same = C.compose_fio_pair(order, a, a, IDENT, 1)
    v = _ev(same.symbol)
    assert np.allclose(v.imag, 0, atol=1e-14) and np.all(v.real > 0)


def test_pair_identity_second_term():
    """I_II, identity phase, M = 2: a conj(b) - i (d_xi a d_x conj b + a d_x d_xi conj b)."""
    a, b = P.make_symbol("sg00"), P.make_symbol("elliptic")
    res = C.compose_fio_pair("I_II", a, b, IDENT, 2)
    ja, jb = a.jet(PTS.x, PTS.xi, order=2), b.jet(PTS.x, PTS.xi, order=2)
    A, Ax, Axi = (np.broadcast_to(ja.partial(m), (len(PTS),)) for m in ((0, 0), (1, 0), (0, 1)))
    B, Bx, Bxxi = (np.conj(np.broadcast_to(jb.partial(m), (len(PTS),)))
                  for m in ((0, 0), (1, 0), (1, 1)))
    expected = A * B - 1j * (Axi * Bx + A * Bxxi)
    assert np.allclose(_ev(res.symbol), expected, rtol=1e-10, atol=1e-12)


def test_pair_perturbed_against_double_application():
    g = make_grid(1, 128, 10.0)
    ph = P.make_phase("perturbed", eps=0.1)
    a, b = P.make_symbol("sg00"), P.make_symbol("elliptic")
    res = C.compose_fio_pair("I_II", a, b, ph, 2)
    u = sample(g, "modulated_gaussian", frequency=12.0, center=0.0)
    lhs = O.chain(O.fio1(ph, a), O.fio2(ph, b))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", O.TailMassWarning)
        assert relative_defect(lhs, res.operator(), u) < 1e-3


def test_parametrix_identity_leading_inverse():
    a = P.make_symbol("elliptic")
    par = C.parametrix(a, IDENT, M=1)
    lead = C.compose_fio_pair("II_I", a, par.symbol, IDENT, 1)
    assert np.allclose(_ev(lead.symbol), 1.0, atol=1e-10)


def test_parametrix_of_one_is_identity():
    par = C.parametrix(P.make_symbol("one"), IDENT, M=2)
    for r in par.defects:
        assert np.allclose(_ev(r), 0.0, atol=1e-14)
    assert all(rep.passed for rep in par.reports)


def test_parametrix_rejects_non_elliptic():
    with pytest.raises(C.CompositionError, match="ellipticity"):
        C.parametrix(P.make_symbol("gaussian"), IDENT)


def test_egorov_identity_sandwich():
    p, a = P.make_symbol("sg00"), P.make_symbol("elliptic")
    eg = C.egorov_symbol(p, a, IDENT, "sandwich_adjoint")
    assert np.allclose(_ev(eg), _ev(p) * np.abs(_ev(a)) ** 2)


def test_egorov_transport_conjugation():
    p = P.make_symbol("sg00")
    eg = C.egorov_symbol(p, P.make_symbol("one"), P.make_phase("transport", t=1.0),
                         "conjugation")
    shifted = PTS.x + PTS.xi / np.sqrt(1 + PTS.xi ** 2)
    want = np.asarray(p.evaluate(shifted, PTS.xi))
    assert np.allclose(_ev(eg), want, atol=1e-12)


def test_bad_requests():
    with pytest.raises(C.CompositionError):
        C.compose_mixed("pdo_pdo", P.make_symbol("one"), P.make_symbol("one"), IDENT)
    with pytest.raises(C.CompositionError):
        C.compose_fio_pair("I_II", P.make_symbol("one"), P.make_symbol("one"), IDENT, 0)
    with pytest.raises(C.CompositionError, match="phase_probe"):
        C.compose_mixed("pdo_fio1", P.make_symbol("xi"), P.make_symbol("one"),
                        P.make_phase("cubic"), 2)


@given(st.floats(-4, 4), st.floats(-4, 4))
def test_identity_phase_term_property(x0, xi0):
    """For the identity phase the first term is -i d_xi p d_x a at every point."""
    p, a = P.make_symbol("amp_japanese_xi"), P.make_symbol("sg00")
    t = C.expansion_term(p, a, IDENT, (1,)).term
    x, xi = np.array([[x0]]), np.array([[xi0]])
    dp = p.jet(x, xi, order=1).partial((0, 1))
    da = a.jet(x, xi, order=1).partial((1, 0))
    assert np.allclose(t.evaluate(x, xi), -1j * dp * da, atol=1e-13)
