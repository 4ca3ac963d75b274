"""Acceptance criteria as runnable measurements.

Each ``criterion_<n>`` returns a :class:`CriterionResult` with the measured
numbers, the tolerance it was held to and a one-line summary.  Criterion 5
needs ``sympy`` (the ``test`` extra) for its symbolic oracle.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import calculus as C
from . import operators as O
from . import presets as P
from . import symbols as S
from . import verify as V
from .grid import GridFunction, make_grid, test_function
from .weights import constant_weight, default_probes, random_probes, theta_weight


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    summary: str
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.number:2d} {self.name}: {self.summary}"

    def to_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "pass": bool(self.passed),
                "summary": self.summary, "details": _plain(self.details)}


def _plain(obj):
    """JSON-ready copy: numpy scalars to floats, tuples to lists."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _timed(fn):
    def run(*args, **kw):
        t0 = time.perf_counter()
        res = fn(*args, **kw)
        res.seconds = time.perf_counter() - t0
        return res

    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


def _tests_1d(grid, kinds=("gaussian", "hermite", "modulated_gaussian")):
    out = []
    for kind in kinds:
        if kind == "gaussian":
            out.append(test_function(grid, "gaussian"))
        elif kind == "hermite":
            out.append(test_function(grid, "hermite", index=3, center=1.0))
        else:
            out.append(test_function(grid, "modulated_gaussian", frequency=5.0, center=-1.0))
    return out


# ---------------------------------------------------------------------------

@_timed
def criterion_1(threads: int = 1) -> CriterionResult:
    """Identity phase with unit amplitude reproduces the input."""
    rows = {}
    t0 = time.perf_counter()
    # smallest 2D box that resolves the inputs in both space and frequency
    for dim, N, L in ((1, 256, 10.0), (2, 52, 8.2)):
        op = O.fio1(P.make_phase("identity", dim), P.make_symbol("one", dim))
        g = make_grid(dim, N, L)
        tests = {"gaussian": test_function(g, "gaussian"),
                 "hermite": test_function(g, "hermite", index=2, width=0.8),
                 "modulated_gaussian": test_function(g, "modulated_gaussian", frequency=2.0)}
        for name, u in tests.items():
            v = O.apply(op, u, threads)
            rows[f"d{dim}:{name}"] = (v - u).norm() / u.norm()
    runtime = time.perf_counter() - t0
    worst = max(rows.values())
    ok = worst <= 1e-10 and runtime < 1.0
    return CriterionResult(1, "identity reduction", ok,
                           f"max rel L2 error {worst:.2e} (tol 1e-10), runtime {runtime:.2f}s "
                           f"(limit 1s)", {"errors": rows, "runtime": runtime})


@_timed
def criterion_2(threads: int = 1) -> CriterionResult:
    """Type I operator of the identity phase against the direct Op_0 double sum."""
    g = make_grid(1, 128, 10.0)
    idp = P.make_phase("identity")
    rows = {}
    for name in ("sg00", "bump_modulated", "x_xi"):
        a = P.make_symbol(name)
        for u in _tests_1d(g):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", O.TailMassWarning)
                v1 = O.apply(O.fio1(idp, a), u, threads)
                v0 = O.apply(O.pdo(a), u, threads, route="direct")
            rows.setdefault(name, []).append((v1 - v0).norm() / v0.norm())
    worst = max(max(v) for v in rows.values())
    return CriterionResult(2, "pdo consistency", worst <= 1e-11,
                           f"max rel defect {worst:.2e} over 3 symbols (tol 1e-11)",
                           {"defects": rows})


@_timed
def criterion_3(threads: int = 1, seeds=(0, 1, 2, 3, 4)) -> CriterionResult:
    """Discrete adjointness for every preset phase and amplitude."""
    g = make_grid(1, 64, 8.0)
    worst, witness = 0.0, None
    count = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", O.TailMassWarning)
        for pname in P.PHASES:
            phase = P.make_phase(pname)
            for aname in P.SYMBOLS:
                amp = P.make_symbol(aname)
                for s in seeds:
                    rng = np.random.default_rng(s)
                    u = GridFunction(g, rng.standard_normal(g.size)
                                     + 1j * rng.standard_normal(g.size))
                    v = GridFunction(g, rng.standard_normal(g.size)
                                     + 1j * rng.standard_normal(g.size))
                    err = O.adjoint_pair_check(phase, amp, u, v, threads)
                    count += 1
                    if err > worst:
                        worst, witness = err, (pname, aname, s)
    return CriterionResult(3, "adjointness", worst <= 1e-8,
                           f"max pairing defect {worst:.2e} over {count} cases (tol 1e-8)",
                           {"worst": worst, "witness": witness, "cases": count})


@_timed
def criterion_4(threads: int = 1) -> CriterionResult:
    """Terminating composition with ``p = xi`` against the measured quadrature floor."""
    g = make_grid(1, 512, 20.0)
    tests = _tests_1d(g)
    phase = P.make_phase("perturbed", eps=0.3)
    a = P.make_symbol("bump_modulated")
    floor = V.quadrature_floor(phase, a, tests, threads)
    rep = V.remainder_probe(P.make_symbol("xi"), a, phase, [2], tests, threads=threads)
    worst = max(rep.defects[2])
    ok = floor <= 1e-8 and worst <= 10 * floor
    return CriterionResult(4, "exact Leibniz composition", ok,
                           f"defect {worst:.2e} vs 10 x floor {10 * floor:.2e}; floor <= 1e-8",
                           {"floor": floor, "defects": rep.defects[2], "grid": g.describe()})


# -- criterion 5: symbolic oracle ----------------------------------------------

def _sympy_pairs():
    import sympy as sp

    x, xi = sp.symbols("x xi", real=True)
    jx, jxi = sp.sqrt(1 + x ** 2), sp.sqrt(1 + xi ** 2)
    table = {
        "amp_japanese_xi": (1 + x / (2 * jx)) * jxi,
        "sg00": (1 + x / (2 * jx)) * (1 + sp.I * xi / (4 * jxi)),
        "x_xi": x * xi,
        "bump_modulated": sp.exp(-x ** 2 / 8) * (1 + sp.I * xi / (2 * jxi)),
        "elliptic": 2 + x * xi / (jx * jxi),
        "gaussian": sp.exp(-x ** 2 - xi ** 2),
        "japanese_xi": jxi,
    }
    pairs = [("amp_japanese_xi", "sg00"), ("x_xi", "bump_modulated"), ("elliptic", "gaussian"),
             ("japanese_xi", "elliptic")]
    return sp, x, xi, table, pairs


def classical_terms(mode: str, p_expr, a_expr, M: int):
    """Kohn-Nirenberg terms ``(1/k!) d^k_xi f * D^k_x g`` in one dimension.

    ``pdo_fio1`` composes ``Op(p) Op(a)`` (``f = p, g = a``); ``fio1_pdo``
    composes ``Op(a) Op(p)`` (``f = a, g = p``).
    """
    import sympy as sp

    x, xi = sp.symbols("x xi", real=True)
    f, gg = (p_expr, a_expr) if mode == "pdo_fio1" else (a_expr, p_expr)
    out = {}
    for k in range(M):
        term = sp.diff(f, xi, k) * (-sp.I) ** k * sp.diff(gg, x, k) / sp.factorial(k)
        out[k] = sp.lambdify((x, xi), term, "numpy")
    return out


@_timed
def criterion_5(threads: int = 1, M: int = 3, npoints: int = 20) -> CriterionResult:
    """Expansion terms under the identity phase against classical composition."""
    try:
        sp, x, xi, table, pairs = _sympy_pairs()
    except ImportError:  # pragma: no cover
        return CriterionResult(5, "classical-calculus reduction", False,
                               "sympy not installed (install the 'test' extra)")
    rng = np.random.default_rng(5)
    X = rng.uniform(-5, 5, npoints)
    XI = rng.uniform(-5, 5, npoints)
    idp = P.make_phase("identity")
    worst, rows = 0.0, {}
    for mode in ("pdo_fio1", "fio1_pdo"):
        for pn, an in pairs:
            res = C.compose_mixed(mode, P.make_symbol(pn), P.make_symbol(an), idp, M)
            ref = classical_terms(mode, table[pn], table[an], M)
            for t in res.terms:
                k = sum(t.alpha)
                got = np.broadcast_to(t.term.evaluate(X[None], XI[None]), X.shape)
                want = np.broadcast_to(np.asarray(ref[k](X, XI), dtype=complex), X.shape)
                err = float(np.max(np.abs(got - want) / np.maximum(1.0, np.abs(want))))
                rows[f"{mode}:{pn}#{an}:alpha={k}"] = err
                worst = max(worst, err)
    return CriterionResult(5, "classical-calculus reduction", worst <= 1e-12,
                           f"max term defect {worst:.2e} over {len(rows)} terms at {npoints} "
                           f"points (tol 1e-12)", {"defects": rows})


@_timed
def criterion_6(threads: int = 1) -> CriterionResult:
    """Remainder defects and symbol-defect slopes as the expansion order grows."""
    g = make_grid(1, 512, 20.0)
    tests = [test_function(g, "modulated_gaussian", frequency=5.0, center=-1.0),
             test_function(g, "hermite", index=3, center=1.0)]
    phase = P.make_phase("perturbed", eps=0.3)
    rep = V.remainder_probe(P.make_symbol("japanese_xi"), P.make_symbol("sg00"), phase,
                            [0, 1, 2, 3], tests, [V.xi_ray([0.5]), V.xi_ray([-1.5])],
                            threads=threads)
    slopes = {M: [f.slope for f in rep.fits[M]] for M in rep.Ms}
    gains = [min(a - b for a, b in zip(slopes[m], slopes[m + 1])) for m in (0, 1, 2)]
    return CriterionResult(6, "remainder order drop", rep.passed,
                           f"slopes per M {[[round(s, 3) for s in v] for v in slopes.values()]},"
                           f" min gain per step {min(gains):.3f} (need >= "
                           f"{0.5 - V.SLOPE_SLACK:g}), monotone={rep.monotone}",
                           {"report": rep.to_dict(), "gains": gains})


@_timed
def criterion_7(threads: int = 1) -> CriterionResult:
    """Growth of ``D^alpha_y exp(i psi)`` on the diagonal along both ray families."""
    one = P.make_symbol("one")
    ts = np.array(V.DECAY_SAMPLES)
    rows, ok = [], True
    for pname, params in (("transport", {"t": 0.5}), ("perturbed", {"eps": 0.3})):
        phase = P.make_phase(pname, **params)
        for n in range(1, 5):
            bound = n / 2 + 0.3
            for fam, ray in (("xi", V.xi_ray([0.5])), ("xi", V.xi_ray([-1.5])),
                             ("x", V.x_ray([2.0])), ("x", V.x_ray([-3.0]))):
                x, xi = ray.points(ts)
                mag = np.abs(np.asarray(C.psi_derivative(phase, one, (n,), x, xi))).ravel()
                if np.all(mag <= 1e-13):
                    rows.append([pname, n, ray.name, "identically zero", True])
                    continue
                v = xi if fam == "xi" else x
                fit = V.fit_decay(np.sqrt(1 + v[0] ** 2), mag, ray.describe(), ts)
                lim = bound if fam == "xi" else -n / 2 + 0.3
                good = fit.slope <= lim
                ok &= good
                rows.append([pname, n, ray.name, round(fit.slope, 4), good])
    worst = [r for r in rows if not r[-1]]
    return CriterionResult(7, "psi-derivative decay", ok,
                           f"{len(rows)} fits, {len(worst)} outside the slope bounds",
                           {"fits": rows})


@_timed
def criterion_8(threads: int = 1) -> CriterionResult:
    """FIO pair composition: identity collapse and a perturbed instance."""
    a, b = P.make_symbol("sg00"), P.make_symbol("sg00_real")
    idp = P.make_phase("identity")
    rng = np.random.default_rng(8)
    X, XI = rng.uniform(-5, 5, (1, 20)), rng.uniform(-5, 5, (1, 20))
    ref = a.evaluate(X, XI) * np.conj(b.evaluate(X, XI))
    collapse = {}
    # a conj(b) is the leading term only; higher terms carry derivatives of a and b
    for order in C.PAIR_ORDERS:
        r = C.compose_fio_pair(order, a, b, idp, 1)
        collapse[order] = float(np.max(np.abs(r.symbol.evaluate(X, XI) - ref) / np.abs(ref)))
    g = make_grid(1, 128, 10.0)
    tests = [test_function(g, "modulated_gaussian", frequency=12.0, center=c)
             for c in (-1.5, 0.0, 1.5)]
    phase = P.make_phase("perturbed", eps=0.1)
    res = C.compose_fio_pair("I_II", a, b, phase, 3)
    defects = V.pair_defect(res, a, b, phase, tests, threads)
    ok = max(collapse.values()) <= 1e-12 and max(defects) <= 1e-3
    return CriterionResult(8, "FIO x FIO composition", ok,
                           f"identity collapse {max(collapse.values()):.2e} (tol 1e-12); "
                           f"perturbed M=3 N=128 defect {max(defects):.2e} (tol 1e-3)",
                           {"collapse": collapse, "defects": defects})


@_timed
def criterion_9(threads: int = 1) -> CriterionResult:
    """Parametrix defects on the elliptic preset."""
    phase = P.make_phase("perturbed", eps=0.3)
    res = C.parametrix(P.make_symbol("elliptic"), phase, M=2)
    consts = [r.max_constant for r in res.reports]
    ok = all(r.passed for r in res.reports)
    return CriterionResult(9, "parametrix", ok,
                           f"defect constants {consts[0]:.3g} in theta(-1,-1), {consts[1]:.3g} "
                           f"in theta(-2,-2) (threshold {res.reports[0].threshold:g})",
                           {"reports": [r.to_dict() for r in res.reports]})


@_timed
def criterion_10(threads: int = 1) -> CriterionResult:
    """Leading Egorov symbol against the composed chain along frequency rays."""
    phase = P.make_phase("perturbed", eps=0.3)
    p = P.make_symbol("sg00")
    ts = np.array([4.0, 8.0, 16.0, 32.0, 64.0])
    xi = np.sqrt(ts ** 2 - 1)[None]
    chains = {}
    a = P.make_symbol("sg00_real")
    chains["sandwich_adjoint"] = (C.sandwich_chain(p, a, phase).symbol,
                                  C.egorov_symbol(p, a, phase, "sandwich_adjoint"))
    e = P.make_symbol("elliptic")
    par = C.parametrix(e, phase, M=2)
    first = C.compose_mixed("fio1_pdo", p, e, phase, 2, check_hypotheses=False)
    conj = C.compose_fio_pair("I_II", first.symbol, par.symbol, phase, 2,
                              check_hypotheses=False)
    chains["conjugation"] = (conj.symbol, C.egorov_symbol(p, e, phase, "conjugation"))
    rows, ok = {}, True
    for variant, (ch, eg) in chains.items():
        for x0 in (0.5, 1.5, -1.0):
            x = np.full_like(xi, x0)
            dd = np.abs(np.asarray(ch.evaluate(x, xi)) - np.asarray(eg.evaluate(x, xi))) * ts
            ratio = float(dd.max() / dd[0])
            rows[f"{variant}@x={x0}"] = {"scaled": dd.tolist(), "ratio": ratio}
            ok &= ratio <= 10
    worst = max(r["ratio"] for r in rows.values())
    return CriterionResult(10, "Egorov", ok,
                           f"max ratio of <xi>-scaled discrepancy to its value at <xi>=4: "
                           f"{worst:.3g} (limit 10)", {"rays": rows})


@_timed
def criterion_11(threads: int = 1) -> CriterionResult:
    """Norm stability over the grid matrix and Schur dominance."""
    phase = P.make_phase("perturbed", eps=0.3)
    grids = [make_grid(1, N, L) for N in (64, 128, 256) for L in (5.0, 10.0, 20.0)]
    ops = {"pdo(sg00)": O.pdo(P.make_symbol("sg00")),
           "fio1(sg00)": O.fio1(phase, P.make_symbol("sg00")),
           "fio2(sg00_real)": O.fio2(phase, P.make_symbol("sg00_real")),
           "fio1(elliptic)": O.fio1(phase, P.make_symbol("elliptic"))}
    tables = {k: V.norm_table(op, grids, threads=threads) for k, op in ops.items()}
    spread = max(t["spread"] for t in tables.values())
    schur = {}
    for name in ("xi_decay", "gaussian", "rank_one_gaussian"):
        a = P.make_symbol(name)
        for op in (O.fio1(phase, a), O.fio2(phase, a), O.pdo(a)):
            for g in (make_grid(1, 128, 10.0), make_grid(1, 256, 20.0)):
                n = V.operator_norm(op, g, threads=threads).estimate
                s = V.schur_bound(op, g)
                schur[f"{op.kind}({name})@{g.points_per_axis}/{g.half_width:g}"] = (n, s)
    margin = min(s - n for n, s in schur.values())
    ok = spread <= 0.10 and margin >= -1e-6
    return CriterionResult(11, "L2 boundedness", ok,
                           f"max norm spread {spread:.3%} (limit 10%); min schur - norm "
                           f"{margin:.3g} (>= -1e-6); max norm "
                           f"{max(t['max'] for t in tables.values()):.4f}",
                           {"tables": tables, "schur": schur})


@_timed
def criterion_12(threads: int = 1, K: int = 2, threshold: float = 50.0) -> CriterionResult:
    """Structure-function plateaus and seminorm constants."""
    plateau_err = 0.0
    consts = {}
    k1 = {}
    for d in (1, 2):
        rng = np.random.default_rng(12 + d)
        for k in (0.25, 0.5, 0.9):
            h = S.cutoff_diagonal(k, d)
            x = rng.normal(size=(d, 200)) * np.exp(rng.uniform(0, 6, 200))
            u = rng.normal(size=(d, 200))
            u /= np.linalg.norm(u, axis=0)
            jx = np.sqrt(1 + np.sum(x ** 2, axis=0))
            inner = x + u * k * jx * rng.uniform(0, 0.5, 200)
            outer = x + u * k * jx * rng.uniform(1.0 + 1e-9, 5, 200)
            plateau_err = max(plateau_err, np.max(np.abs(h.evaluate(x, inner) - 1)),
                              np.max(np.abs(h.evaluate(x, outer))))
            _seminorms(h, d, K, threshold, consts, k1)
        for R in (1.0, 4.0, 16.0):
            h = S.excision(R, d)
            v = rng.normal(size=(2 * d, 200))
            v /= np.sum(np.abs(v.reshape(2, d, 200)) ** 2, axis=1).sum(0) ** 0.5
            # points with |x| + |xi| below R/2 and above R
            def split(scale):
                z = v * scale
                return z[:d], z[d:]
            x0, xi0 = split(R / 4 * rng.uniform(0, 1, 200))
            x1, xi1 = split(R * rng.uniform(1.0, 20.0, 200))
            plateau_err = max(plateau_err, np.max(np.abs(h.evaluate(x0, xi0))),
                              np.max(np.abs(h.evaluate(x1, xi1) - 1)))
            _seminorms(h, d, K, threshold, consts, k1)
    worst = max(consts.values())
    ok = plateau_err == 0.0 and worst <= threshold
    return CriterionResult(12, "structure functions", ok,
                           f"plateau error {plateau_err:g} (exact); max seminorm constant at "
                           f"K={K} is {worst:.4g} (limit {threshold:g}); at K=1 "
                           f"{max(k1.values()):.4g}",
                           {"constants": consts, "constants_K1": k1, "plateau_error": plateau_err})


def _seminorms(h, d, K, threshold, consts, k1):
    probes = default_probes(d).union(S.transition_probes(h))
    w = constant_weight(1.0, d)
    consts[f"{h.name}/d{d}"] = S.seminorm_probe(h, w, 1.0, 1.0, K, probes,
                                                threshold).max_constant
    k1[f"{h.name}/d{d}"] = S.seminorm_probe(h, w, 1.0, 1.0, 1, probes, threshold).max_constant


def jet_handles(d: int) -> list:
    """Every preset handle plus parametrized weights and structure functions."""
    hs = [P.make_symbol(n, d) for n in P.SYMBOLS if n != "theta"]
    hs += [P.make_symbol("theta", d, m=-1.0, mu=2.0), P.make_symbol("theta", d, m=0.5, mu=-1.5)]
    hs += [P.make_phase(n, d) for n in P.PHASES]
    hs += [P.make_weight("theta", d, m=1.5, mu=-0.5), P.make_weight("one", d)]
    hs += [S.cutoff_diagonal(0.5, d), S.excision(4.0, d), S.excision(4.0, d, "xi")]
    return hs


@_timed
def criterion_13(threads: int = 1, npoints: int = 100) -> CriterionResult:
    """Jets against high-precision central differences."""
    rows, ok = {}, True
    for d in (1, 2):
        pr = random_probes(d, npoints, seed=13, scale=10.0)
        for h in jet_handles(d):
            r = V.jet_fd_check(h, pr.x, pr.xi, K=4, rel_tol=1e-6)
            rows[f"{h.name}/d{d}"] = r.worst
            ok &= r.passed
    worst = max(rows.values())
    return CriterionResult(13, "jet integrity", ok,
                           f"max relative jet error {worst:.2e} over {len(rows)} handles, "
                           f"orders <= 4, {npoints} points (tol 1e-6)", {"errors": rows})


CRITERIA = {n: globals()[f"criterion_{n}"] for n in range(1, 14)}


def run_acceptance(select=None, threads: int = 1) -> list[CriterionResult]:
    """Run the selected criteria (all by default); errors become failing results."""
    out = []
    for n in sorted(select or CRITERIA):
        try:
            out.append(CRITERIA[n](threads=threads))
        except Exception as exc:  # reported, not raised
            out.append(CriterionResult(n, CRITERIA[n].__doc__.splitlines()[0], False,
                                       f"error: {type(exc).__name__}: {exc}"))
    return out


__all__ = ["CriterionResult", "CRITERIA", "run_acceptance", "classical_terms", "jet_handles"]
