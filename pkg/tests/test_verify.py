import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sgfio import calculus as C
from sgfio import operators as O
from sgfio import presets as P
from sgfio import verify as V
from sgfio.grid import make_grid
from sgfio.grid import test_function as sample

PERT = P.make_phase("perturbed", eps=0.3)


def test_identity_norm():
    est = V.operator_norm(O.identity_operator(), make_grid(1, 64, 6.0))
    assert est.converged and abs(est.estimate - 1.0) < 1e-10


def test_norm_matches_dense_svd():
    g = make_grid(1, 64, 6.0)
    op = O.fio1(P.make_phase("identity"), P.make_symbol("gaussian"))
    est = V.operator_norm(op, g)
    assert abs(est.estimate - V.largest_singular_value(op, g)) < 1e-6


def test_norm_homogeneity():
    g = make_grid(1, 64, 6.0)
    op = O.fio1(PERT, P.make_symbol("sg00"))
    n1 = V.operator_norm(op, g).estimate
    n2 = V.operator_norm(O.scaled(op, 2.0), g).estimate
    assert abs(n2 - 2 * n1) < 1e-10 * n2


def test_norm_needs_iterations():
    with pytest.raises(V.VerifyError):
        V.operator_norm(O.identity_operator(), make_grid(1, 16, 4.0), iters=3)


def test_schur_rank_one_closed_form():
    g = make_grid(1, 128, 8.0)
    op = O.fio1(P.make_phase("identity"), P.make_symbol("rank_one_gaussian"))
    assert abs(V.schur_bound(op, g) - math.sqrt(math.pi)) < 1e-6
    assert V.operator_norm(op, g).estimate <= V.schur_bound(op, g) + 1e-9


def test_schur_rejects_non_integrable_kernel():
    with pytest.raises(O.TailMassError):
        V.schur_bound(O.pdo(P.make_symbol("one")), make_grid(1, 32, 4.0))


def test_norm_table_spread():
    grids = [make_grid(1, N, L) for N, L in ((64, 5.0), (128, 10.0))]
    op = O.pdo(P.make_symbol("sg00"))
    tab = V.norm_table(op, grids)
    assert tab["spread"] < 0.1 and len(tab["rows"]) == 2
    # clustered singular values slow the power iteration; the estimate is still close
    svd = V.largest_singular_value(op, grids[0])
    assert 0.99 * svd <= tab["rows"][0]["estimate"] <= svd * (1 + 1e-12)


def test_fit_decay_exact_power():
    t = np.array(V.DECAY_SAMPLES)
    s = np.sqrt(1 + t ** 2)
    fit = V.fit_decay(s, 3 * s ** -2.5, t=t)
    assert abs(fit.slope + 2.5) < 1e-12 and fit.residual < 1e-12


@pytest.mark.parametrize("t,m", [([1, 2, 3, 4], [1, 1, 1, 1]),
                                 ([1, 2, 4, 8, 16], [1, 1, 1, 1, 1]),
                                 ([1, 10, 100, 1000, 10000], [1, 0, 1, 1, 1])])
def test_fit_decay_guards(t, m):
    with pytest.raises(V.VerifyError):
        V.fit_decay(np.array(t, float), np.array(m, float))


def test_rays():
    r = V.xi_ray([0.5])
    x, xi = r.points([1.0, 2.0])
    assert np.allclose(x, 0.5) and np.allclose(xi, [[1.0, 2.0]])
    r = V.x_ray([2.0])
    x, xi = r.points([3.0])
    assert np.allclose(x, 3.0) and np.allclose(xi, 2.0)


def test_jet_fd_check_detects_error():
    good = P.make_symbol("sg00")
    assert V.jet_fd_check(good, [[0.3]], [[-1.2]], K=3).passed
    from sgfio.handles import FormulaHandle
    from sgfio import jets as J

    class Broken(FormulaHandle):
        def __call__(self, x, xi):
            out = super().__call__(x, xi)
            if isinstance(out, J.Jet):
                out.coef[1] = out.coef[1] * 1.01
            return out

    bad = Broken(lambda x, xi: J.sin(x[0]) * xi[0], 2, 1, "broken")
    assert not V.jet_fd_check(bad, [[0.3]], [[-1.2]], K=2).passed


def test_exact_mixed_symbol_polynomial_case():
    """For p = xi the exact amplitude is phi'_x a + D_x a."""
    a = P.make_symbol("sg00")
    x, xi = np.array([[0.5, -1.0]]), np.array([[3.0, 10.0]])
    got = V.exact_mixed_symbol(P.make_symbol("xi"), a, PERT, x, xi)
    gx = np.asarray(PERT.grad_x(list(x), list(xi))[0])
    da = a.jet(x, xi, order=1).partial((1, 0))
    assert np.allclose(got, gx * a.evaluate(x, xi) - 1j * da, atol=1e-10)


def test_remainder_leibniz_exact():
    g = make_grid(1, 256, 20.0)
    tests = [sample(g, "modulated_gaussian", frequency=2.0)]
    rep = V.remainder_probe(P.make_symbol("xi"), P.make_symbol("bump_modulated"), PERT, [2],
                            tests)
    assert rep.defects[2][0] <= 1e-8


def test_remainder_decreasing_for_japanese_xi():
    g = make_grid(1, 256, 20.0)
    tests = [sample(g, "modulated_gaussian", frequency=4.0)]
    rep = V.remainder_probe(P.make_symbol("japanese_xi"), P.make_symbol("sg00"), PERT,
                            [1, 2, 3], tests)
    d = [rep.defects[M][0] for M in (1, 2, 3)]
    assert d[0] > d[1] > d[2]
    assert rep.strict


def test_first_order_gain_on_ray():
    p, a = P.make_symbol("japanese_xi"), P.make_symbol("sg00")
    t = math.sqrt(30 ** 2 - 1)
    x, xi = np.array([[0.5]]), np.array([[t]])
    exact = V.exact_mixed_symbol(p, a, PERT, x, xi)
    c1 = C.compose_mixed("pdo_fio1", p, a, PERT, 1).symbol.evaluate(x, xi)
    assert abs(exact).item() / abs(exact - c1).item() >= 2


def test_quadrature_floor_small():
    g = make_grid(1, 256, 20.0)
    tests = [sample(g, "gaussian"), sample(g, "hermite", index=2)]
    assert V.quadrature_floor(PERT, P.make_symbol("bump_modulated"), tests) <= 1e-8


def test_reading_check_prefers_type2():
    g = make_grid(1, 128, 10.0)
    tests = [sample(g, "modulated_gaussian", frequency=3.0)]
    out = V.reading_check("fio2_pdo", P.make_symbol("japanese_xi"), P.make_symbol("sg00"),
                          PERT, 2, tests)
    assert out["matches"] == "type2"


@given(st.floats(0.1, 5.0))
def test_norm_scaling_property(c):
    g = make_grid(1, 32, 5.0)
    op = O.pdo(P.make_symbol("sg00_real"))
    n1 = V.operator_norm(op, g).estimate
    nc = V.operator_norm(O.scaled(op, c), g).estimate
    assert abs(nc - c * n1) <= 1e-7 * c * n1
