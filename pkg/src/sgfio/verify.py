"""Verification harness: operator norms, Schur bounds, remainder measurement
and decay fits."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import jets as J
from .calculus import CompositionResult, compose_mixed
from .grid import Grid, GridFunction, fourier, make_grid
from .handles import FormulaHandle, Handle
from .operators import (OperatorSpec, TailMassWarning, adjoint, apply, chain, dense_matrix, fio1,
                        fio2, kernel_matrix, pdo)
from .phases import PhaseHandle

POWER_TOL = 1e-8
DECAY_SAMPLES = (4.0, 8.0, 16.0, 32.0, 64.0, 128.0)
SLOPE_SLACK = 0.5


class VerifyError(ValueError):
    """Invalid verification request."""


# ---------------------------------------------------------------------------
# operator norms

@dataclass
class NormEstimate:
    estimate: float
    iterations: int
    residual: float
    grid: dict
    converged: bool
    tol: float = POWER_TOL

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "iterations": self.iterations,
                "residual": self.residual, "grid": self.grid, "converged": self.converged}


def operator_norm(op: OperatorSpec, grid: Grid, iters: int = 500, seed: int = 0,
                  tol: float = POWER_TOL, threads: int = 1) -> NormEstimate:
    """Power iteration on ``u -> A*(A u)`` with the adjoint route for ``A*``.

    The residual is the relative change of the Rayleigh quotient between
    iterates; ``converged`` is false if it stays above ``tol``.  Tail-mass
    warnings are suppressed: the random start vector is not a Schwartz
    function, and the estimate concerns the discrete operator.
    """
    if iters < 10:
        raise VerifyError("operator_norm needs iters >= 10")
    rng = np.random.default_rng(seed)
    A, As = op, adjoint(op)
    v = rng.standard_normal(grid.size) + 1j * rng.standard_normal(grid.size)
    u = GridFunction(grid, v / (np.linalg.norm(v) * grid.spacing ** (grid.dim / 2)))
    lam_old, res = 0.0, np.inf
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TailMassWarning)
        for k in range(1, iters + 1):
            w = apply(As, apply(A, u, threads), threads)
            lam = w.norm()
            if lam == 0.0:
                return NormEstimate(0.0, k, 0.0, grid.describe(), True, tol)
            res = abs(lam - lam_old) / lam
            u = w * (1.0 / lam)
            if res <= tol:
                return NormEstimate(math.sqrt(lam), k, res, grid.describe(), True, tol)
            lam_old = lam
    return NormEstimate(math.sqrt(lam_old), iters, res, grid.describe(), False, tol)


def largest_singular_value(op: OperatorSpec, grid: Grid) -> float:
    """Dense-matrix oracle for :func:`operator_norm`."""
    return float(np.linalg.svd(dense_matrix(op, grid), compute_uv=False)[0])


def schur_bound(op: OperatorSpec, grid: Grid) -> float:
    """``max(sup_y int |K| dx, sup_x int |K| dy)`` by kernel quadrature on the grid."""
    K = np.abs(kernel_matrix(op, grid))
    hd = grid.weight("space")
    return float(max((K.sum(axis=0) * hd).max(), (K.sum(axis=1) * hd).max()))


def norm_table(op: OperatorSpec, grids: Sequence[Grid], iters: int = 500, seed: int = 0,
               threads: int = 1) -> dict:
    """Norm estimates over several grids with their relative spread."""
    rows = [operator_norm(op, g, iters, seed, threads=threads) for g in grids]
    vals = np.array([r.estimate for r in rows])
    spread = float((vals.max() - vals.min()) / vals.max()) if vals.max() > 0 else 0.0
    return {"rows": [r.to_dict() for r in rows], "max": float(vals.max()),
            "min": float(vals.min()), "spread": spread,
            "converged": all(r.converged for r in rows)}


# ---------------------------------------------------------------------------
# decay fits

@dataclass
class Ray:
    """Points ``(x0 + t dx, xi0 + t dxi)`` for ``t`` in the samples."""

    x0: tuple
    dx: tuple
    xi0: tuple
    dxi: tuple
    name: str = ""

    def points(self, ts) -> tuple[np.ndarray, np.ndarray]:
        ts = np.asarray(ts, dtype=float)
        x = np.asarray(self.x0, float)[:, None] + np.asarray(self.dx, float)[:, None] * ts
        xi = np.asarray(self.xi0, float)[:, None] + np.asarray(self.dxi, float)[:, None] * ts
        return x, xi

    def describe(self) -> dict:
        return {"name": self.name, "x0": list(self.x0), "dx": list(self.dx),
                "xi0": list(self.xi0), "dxi": list(self.dxi)}


def xi_ray(x0, direction=None, name: str = "") -> Ray:
    x0 = tuple(np.atleast_1d(np.asarray(x0, float)).tolist())
    d = len(x0)
    e = tuple(direction) if direction is not None else (1.0,) + (0.0,) * (d - 1)
    return Ray(x0, (0.0,) * d, (0.0,) * d, e, name or f"xi-ray at x={list(x0)}")


def x_ray(xi0, direction=None, name: str = "") -> Ray:
    xi0 = tuple(np.atleast_1d(np.asarray(xi0, float)).tolist())
    d = len(xi0)
    e = tuple(direction) if direction is not None else (1.0,) + (0.0,) * (d - 1)
    return Ray((0.0,) * d, e, xi0, (0.0,) * d, name or f"x-ray at xi={list(xi0)}")


@dataclass
class DecayFit:
    ray: dict
    t: list
    abscissa: list
    magnitudes: list
    slope: float
    intercept: float
    residual: float

    def to_dict(self) -> dict:
        return {"ray": self.ray, "t": self.t, "abscissa": self.abscissa,
                "magnitudes": self.magnitudes, "slope": self.slope,
                "intercept": self.intercept, "residual": self.residual}


def fit_decay(abscissa, magnitudes, ray: dict | None = None, t=None) -> DecayFit:
    """Least-squares slope of ``log |m|`` against ``log abscissa``.

    The span requirement applies to the ray parameters ``t`` when given,
    otherwise to the abscissae.

    Raises
    ------
    VerifyError
        With fewer than 5 samples, a span under 1.5 decades, or
        non-positive magnitudes.
    """
    s = np.asarray(abscissa, dtype=float)
    m = np.asarray(magnitudes, dtype=float)
    span = np.asarray(t if t is not None else s, dtype=float)
    if s.size < 5:
        raise VerifyError(f"decay fit needs at least 5 samples, got {s.size}")
    if np.log10(span.max() / span.min()) < 1.5 - 1e-9:
        raise VerifyError("decay fit samples must span at least 1.5 decades")
    if np.any(m <= 0) or not np.all(np.isfinite(m)):
        raise VerifyError("decay fit needs positive finite magnitudes")
    A = np.stack([np.log(s), np.ones_like(s)], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.log(m), rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - np.log(m)) ** 2)))
    return DecayFit(ray or {}, list(np.asarray(t if t is not None else s, float)),
                    s.tolist(), m.tolist(), float(coef[0]), float(coef[1]), resid)


def fit_along_ray(fn: Callable, ray: Ray, ts=DECAY_SAMPLES, variable: str = "xi") -> DecayFit:
    """Fit ``|fn(x, xi)|`` along ``ray`` against ``<xi>`` (or ``<x>``)."""
    x, xi = ray.points(ts)
    vals = np.abs(np.broadcast_to(fn(x, xi), (len(ts),)))
    v = xi if variable == "xi" else x
    absc = np.sqrt(1 + np.sum(v ** 2, axis=0))
    return fit_decay(absc, vals, ray.describe(), ts)


# ---------------------------------------------------------------------------
# jet integrity

@dataclass
class JetCheck:
    name: str
    points: int
    worst: float
    witness: dict
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "points": self.points, "worst": self.worst,
                "witness": self.witness, "pass": self.passed}


def jet_fd_check(h: Handle, x, xi, K: int = 4, rel_tol: float = 1e-6, dps: int = 40,
                 floor: float = 1e-12) -> JetCheck:
    """Jet partials against high-precision central differences.

    Every partial of total order ``<= K`` at every point is compared with
    ``mpmath.diff`` run at ``dps`` digits.  The error is relative to
    ``max(|fd|, floor * s)`` where ``s`` is the largest partial at that point,
    so exactly vanishing partials are judged against the local scale.
    """
    import mpmath

    x = np.atleast_2d(np.asarray(x, float))
    xi = np.atleast_2d(np.asarray(xi, float))
    d = h.dim
    n = h.groups * d
    idx = J.multi_indices(n, K)
    worst, witness = 0.0, {}
    with mpmath.workdps(dps):
        for k in range(x.shape[1]):
            base = list(x[:, k]) + list(xi[:, k])
            jet = h.jet(x[:, k:k + 1], xi[:, k:k + 1], order=K)

            def f(*v):
                return h(*[list(v[g * d:(g + 1) * d]) for g in range(h.groups)])

            pt = [mpmath.mpf(float(v)) for v in base]
            fds = [complex(mpmath.diff(f, pt, m)) for m in idx]
            scale = max(abs(v) for v in fds)
            for m, fd in zip(idx, fds):
                jv = complex(np.asarray(jet.partial(m)).ravel()[0])
                rel = abs(jv - fd) / max(abs(fd), floor * scale, 1e-300)
                if rel > worst:
                    worst = rel
                    witness = {"point": base, "index": list(m), "jet": [jv.real, jv.imag],
                               "fd": [fd.real, fd.imag]}
    return JetCheck(h.name, x.shape[1], float(worst), witness, worst <= rel_tol)


# ---------------------------------------------------------------------------
# symbol oracle for Op(p) Op_phi(a)

def exact_mixed_symbol(p: Handle, a: Handle, phase: PhaseHandle, x, xi, half_width: float = 40.0,
                       window: float = 0.75, min_points: int = 1024) -> np.ndarray:
    """Exact amplitude ``c`` with ``Op(p) Op_phi(a) = Op_phi(c)``, pointwise.

    ``c(x, xi) = exp(-i phi(x, xi)) [Op(p) g](x)`` with
    ``g(z) = exp(i phi(z, xi)) a(z, xi)``.  ``g`` is shifted to the origin,
    multiplied by a smooth window of radius ``window * half_width`` and
    ``Op(p)`` is applied spectrally at the single output point.  Exact for
    polynomial ``p``; for ``p`` whose kernel decays exponentially off the
    diagonal the window error is below roundoff at the default size.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    d = phase.dim
    if x.shape[0] != d:
        x, xi = x.reshape(d, -1), xi.reshape(d, -1)
    B = x.shape[1]
    out = np.empty(B, dtype=complex)
    for b in range(B):
        xb, xib = x[:, b:b + 1], xi[:, b:b + 1]
        gx = np.abs(np.asarray(phase.second_order(xb, xib)["gx"])).max()
        band = 3 * gx + 40.0
        N = min_points
        while math.pi * N / (2 * half_width) < band:
            N *= 2
        g = make_grid(d, N, half_width)
        z = g.coords()
        W = window * half_width
        r2 = np.sum(z ** 2, axis=0)
        win = np.asarray(J.smooth_step(r2, (0.5 * W) ** 2, W ** 2))
        pts = xb + z
        ph = np.real(phase.evaluate(pts, np.broadcast_to(xib, pts.shape))
                     - phase.evaluate(xb, xib))
        amp = np.broadcast_to(a.evaluate(pts, np.broadcast_to(xib, pts.shape)), ph.shape)
        gl = GridFunction(g, np.exp(1j * ph) * amp * win)
        gh = fourier(gl).values
        pv = np.broadcast_to(p.evaluate(np.broadcast_to(xb, (d, g.size)), g.freqs()), (g.size,))
        out[b] = np.sum(pv * gh) * g.weight("frequency") / (2 * math.pi) ** (d / 2)
    return out


# ---------------------------------------------------------------------------
# remainders

@dataclass
class RemainderReport:
    mode: str
    Ms: list
    defects: dict                          # M -> [relative defect per test function]
    fits: dict = field(default_factory=dict)   # M -> [DecayFit per ray]
    monotone: bool = True
    strict: bool = True
    slopes_ok: bool = True
    passed: bool = True
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"mode": self.mode, "Ms": self.Ms,
                "defects": {str(k): v for k, v in self.defects.items()},
                "fits": {str(k): [f.to_dict() for f in v] for k, v in self.fits.items()},
                "monotone": self.monotone, "strict": self.strict, "slopes_ok": self.slopes_ok,
                "pass": self.passed, "notes": self.notes}

    def csv_rows(self) -> list:
        rows = [("defect", M, i, v) for M, vs in self.defects.items() for i, v in enumerate(vs)]
        rows += [("slope", M, i, f.slope) for M, fs in self.fits.items()
                 for i, f in enumerate(fs)]
        return rows


def direct_operator(mode: str, p: Handle, amp: Handle, phase: PhaseHandle) -> OperatorSpec:
    """The composed operator applied factor by factor."""
    if mode == "pdo_fio1":
        return chain(pdo(p), fio1(phase, amp))
    if mode == "fio1_pdo":
        return chain(fio1(phase, amp), pdo(p))
    if mode == "fio2_pdo":
        return chain(fio2(phase, amp), pdo(p))
    if mode == "pdo_fio2":
        return chain(pdo(p), fio2(phase, amp))
    raise VerifyError(f"unknown mode {mode!r}")


def relative_defect(lhs: OperatorSpec, rhs: OperatorSpec, u: GridFunction,
                    threads: int = 1) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TailMassWarning)
        a = apply(lhs, u, threads)
        b = apply(rhs, u, threads)
    den = a.norm()
    return float((a - b).norm() / den) if den > 0 else float((a - b).norm())


def remainder_probe(p: Handle, amp: Handle, phase: PhaseHandle, Ms: Sequence[int],
                    testset: Sequence[GridFunction], rays: Sequence[Ray] = (),
                    mode: str = "pdo_fio1", ts=DECAY_SAMPLES, slack: float = SLOPE_SLACK,
                    drop: float = 0.5, check_hypotheses: bool = True,
                    threads: int = 1) -> RemainderReport:
    """Operator-level and symbol-level remainder of a truncated mixed composition.

    Operator level: ``||(LHS - Op(c_M)) u|| / ||LHS u||`` with ``LHS``
    applied factor by factor.  Symbol level (``pdo_fio1`` only): decay fits
    of ``|c - c_M|`` along ``rays`` against ``<xi>``, with ``c`` from
    :func:`exact_mixed_symbol`.  Passes iff defects are non-increasing in
    ``M`` and every fitted slope improves by at least ``drop - slack`` per
    unit of ``M``.
    """
    Ms = sorted(int(m) for m in Ms)
    lhs = direct_operator(mode, p, amp, phase)
    defects, fits, notes = {}, {}, []
    exact = {}
    for ray in rays:
        x, xi = ray.points(ts)
        exact[ray.name] = exact_mixed_symbol(p, amp, phase, x, xi) if mode == "pdo_fio1" else None
    for M in Ms:
        res: CompositionResult = compose_mixed(mode, p, amp, phase, M,
                                               check_hypotheses=check_hypotheses)
        rhs = res.operator() if M > 0 else None
        row = []
        for u in testset:
            if rhs is None:
                row.append(1.0)
            else:
                row.append(relative_defect(lhs, rhs, u, threads))
        defects[M] = row
        if mode == "pdo_fio1" and rays:
            fits[M] = []
            for ray in rays:
                x, xi = ray.points(ts)
                cM = (np.broadcast_to(res.symbol.evaluate(x, xi), (len(ts),)) if M > 0
                      else np.zeros(len(ts)))
                mag = np.abs(exact[ray.name] - cM)
                absc = np.sqrt(1 + np.sum(xi ** 2, axis=0))
                fits[M].append(fit_decay(absc, mag, ray.describe(), ts))
    monotone = all(defects[b][i] <= defects[a][i] * (1 + 1e-9)
                   for a, b in zip(Ms, Ms[1:]) for i in range(len(testset)))
    strict = all(defects[b][i] < defects[a][i]
                 for a, b in zip(Ms, Ms[1:]) for i in range(len(testset)))
    slopes_ok = True
    for a, b in zip(Ms, Ms[1:]):
        for fa, fb in zip(fits.get(a, []), fits.get(b, [])):
            if fa.slope - fb.slope < (drop - slack) * (b - a) - 1e-12:
                slopes_ok = False
                notes.append(f"slope {fa.slope:.3f} (M={a}) -> {fb.slope:.3f} (M={b}) "
                             f"on {fa.ray.get('name')}")
    return RemainderReport(mode, Ms, defects, fits, monotone, strict, slopes_ok,
                           monotone and slopes_ok, notes)


def reading_check(mode: str, p: Handle, b: Handle, phase: PhaseHandle, M: int,
                  testset: Sequence[GridFunction], threads: int = 1) -> dict:
    """Defects of both quantizations of a type II mixed composition."""
    if mode not in ("fio2_pdo", "pdo_fio2"):
        raise VerifyError("reading_check applies to the type II modes")
    lhs = direct_operator(mode, p, b, phase)
    out = {}
    for reading in ("type2", "type1"):
        res = compose_mixed(mode, p, b, phase, M, reading=reading, check_hypotheses=False)
        out[reading] = max(relative_defect(lhs, res.operator(), u, threads) for u in testset)
    out["matches"] = min(("type2", "type1"), key=lambda r: out[r])
    return out


def pair_defect(result: CompositionResult, a: Handle, b: Handle, phase: PhaseHandle,
                testset: Sequence[GridFunction], threads: int = 1) -> list:
    """Relative defects of ``Op(c_M)`` against the double application."""
    if result.mode == "I_II":
        lhs = chain(fio1(phase, a), fio2(phase, b))
    else:
        lhs = chain(fio2(phase, b), fio1(phase, a))
    rhs = result.operator()
    return [relative_defect(lhs, rhs, u, threads) for u in testset]


def quadrature_floor(phase: PhaseHandle, amp: Handle, testset: Sequence[GridFunction],
                     threads: int = 1) -> float:
    """Defect of the exact identity ``Op(xi_1) Op_phi(a) = Op_phi(phi'_x1 a + D_x1 a)``
    measured through the same pipeline with the identity phase."""
    from .phases import identity_phase
    d = phase.dim
    p = FormulaHandle(lambda x, xi: xi[0] + 0 * x[0], 2, d, "xi")
    idp = identity_phase(d)
    res = compose_mixed("pdo_fio1", p, amp, idp, 2, check_hypotheses=False)
    lhs = direct_operator("pdo_fio1", p, amp, idp)
    return max(relative_defect(lhs, res.operator(), u, threads) for u in testset)


__all__ = ["NormEstimate", "operator_norm", "largest_singular_value", "schur_bound",
           "norm_table", "Ray", "xi_ray", "x_ray", "DecayFit", "fit_decay", "fit_along_ray",
           "exact_mixed_symbol", "RemainderReport", "remainder_probe", "reading_check",
           "pair_defect", "quadrature_floor", "direct_operator", "relative_defect",
           "VerifyError", "DECAY_SAMPLES", "JetCheck", "jet_fd_check"]
