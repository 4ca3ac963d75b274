"""Phase functions: admissibility probes, gradient inversion and S_phi.

A phase is a real handle ``phi(x, xi)``.  Presets carry closed-form
gradients, which are used as handles in their own right so that every
derived quantity (canonical maps, averaged gradients, inverse maps) keeps
exact jets.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import jets as J
from .handles import (DerivativeHandle, DerivedHandle, FormulaHandle, Handle, as_points,
                      unit, zero)
from .jets import Jet
from .weights import ProbeSet, derivative_table, japanese

NEWTON_TOL = 1e-12
NEWTON_MAXITER = 50
GL_NODES = 8


class PhaseError(ValueError):
    """Phase admissibility or region failure."""


class NewtonError(PhaseError):
    """Newton iteration failed to converge.

    Attributes
    ----------
    trace : list of float
        Maximum scaled residual after each iteration.
    """

    def __init__(self, message: str, trace: Sequence[float]):
        super().__init__(f"{message}; residual trace: "
                         + ", ".join(f"{r:.3g}" for r in trace))
        self.trace = list(trace)


class PhaseHandle(FormulaHandle):
    """Real phase ``phi(x, xi)`` with gradient handles and a Newton cache.

    Parameters
    ----------
    fn : callable
        Generic expression ``fn(x, xi)``.
    dim : int
    name : str
    grad_x, grad_xi : callable, optional
        Closed-form gradients returning ``dim`` components.  When omitted the
        gradients are obtained from jets of ``fn``.
    params : dict, optional
        Preset parameters, kept for reports.
    """

    def __init__(self, fn: Callable, dim: int, name: str,
                 grad_x: Callable | None = None, grad_xi: Callable | None = None,
                 params: dict | None = None):
        super().__init__(fn, 2, dim, name, {"kind": "phase"})
        self.params = dict(params or {})
        self._gx = self._component_handles(grad_x, 0)
        self._gxi = self._component_handles(grad_xi, 1)
        self._cache: dict = {}
        self._lock = threading.Lock()
        self.cache_enabled = True
        self.last_report = None

    def _component_handles(self, grad, group):
        d = self.dim
        if grad is None:
            out = []
            for j in range(d):
                alpha = [0] * (2 * d)
                alpha[group * d + j] = 1
                out.append(DerivativeHandle(self, alpha, f"d{'x' if group == 0 else 'xi'}{j} {self.name}"))
            return out
        return [FormulaHandle(lambda x, xi, j=j: grad(x, xi)[j], 2, d,
                              f"d{'x' if group == 0 else 'xi'}{j} {self.name}")
                for j in range(d)]

    @property
    def grad_x_handles(self) -> list[Handle]:
        return self._gx

    @property
    def grad_xi_handles(self) -> list[Handle]:
        return self._gxi

    def grad_x(self, x, xi) -> list:
        return [h(x, xi) for h in self._gx]

    def grad_xi(self, x, xi) -> list:
        return [h(x, xi) for h in self._gxi]

    def mixed_hessian(self, x, xi) -> list:
        """``H[j][k] = d_{x_j} d_{xi_k} phi`` as nested lists (generic)."""
        d = self.dim
        return [[DerivativeHandle(self._gx[j], zero(d) + unit(d, k))(x, xi)
                 for k in range(d)] for j in range(d)]

    def second_order(self, x: np.ndarray, xi: np.ndarray) -> dict:
        """Gradients and mixed Hessian values at points ``(d, *B)``.

        Returns a dict with ``gx``, ``gxi`` of shape ``(d, *B)`` and ``hxxi``
        of shape ``(*B, d, d)`` with ``hxxi[..., j, k] = d_{x_j} d_{xi_k} phi``.
        """
        d = self.dim
        x = as_points(x, d)
        xi = as_points(xi, d)
        x, xi = np.broadcast_arrays(x, xi)
        X, XI = J.seed_groups([list(x), list(xi)], 1)
        gx = [h(X, XI) for h in self._gx]
        gxi = [h(X, XI) for h in self._gxi]
        shape = x.shape[1:]

        def val(g):
            return np.broadcast_to(J.value_of(g), shape) if isinstance(g, Jet) else \
                np.broadcast_to(g, shape)

        def d_xi(g, k):
            if not isinstance(g, Jet):
                return np.zeros(shape)
            return np.broadcast_to(g.partial(zero(d) + unit(d, k)), shape)

        def d_x(g, k):
            if not isinstance(g, Jet):
                return np.zeros(shape)
            return np.broadcast_to(g.partial(unit(d, k) + zero(d)), shape)

        hxxi = np.empty(shape + (d, d))
        hxixi_from_gx = np.empty(shape + (d, d))
        for j in range(d):
            for k in range(d):
                hxxi[..., j, k] = np.real(d_xi(gx[j], k))
                hxixi_from_gx[..., j, k] = np.real(d_x(gxi[j], k))
        return {"gx": np.real(np.stack([val(g) for g in gx])),
                "gxi": np.real(np.stack([val(g) for g in gxi])),
                "hxxi": hxxi, "hxix": hxixi_from_gx}

    def transpose(self) -> "PhaseHandle":
        """``phi*(x, xi) = phi(xi, x)``."""
        return PhaseHandle(lambda x, xi: self(xi, x), self.dim, f"t[{self.name}]",
                           grad_x=lambda x, xi: self.grad_xi(xi, x),
                           grad_xi=lambda x, xi: self.grad_x(xi, x),
                           params={"transposed": self.name})

    def describe(self) -> dict:
        return {"name": self.name, **self.params}


# ---------------------------------------------------------------------------
# presets

def identity_phase(dim: int = 1) -> PhaseHandle:
    """``<x, xi>``."""
    return PhaseHandle(lambda x, xi: J.dot(x, xi), dim, "identity",
                       grad_x=lambda x, xi: list(xi), grad_xi=lambda x, xi: list(x),
                       params={"preset": "identity"})


def transport_phase(t: float, dim: int = 1) -> PhaseHandle:
    """``<x, xi> + t <xi>``; its canonical map shifts x by ``t xi / <xi>``."""

    def gxi(x, xi):
        j = J.japanese(xi)
        return [x[k] + t * xi[k] / j for k in range(dim)]

    return PhaseHandle(lambda x, xi: J.dot(x, xi) + t * J.japanese(xi), dim,
                       f"transport[{t:g}]", grad_x=lambda x, xi: list(xi), grad_xi=gxi,
                       params={"preset": "transport", "t": t})


def perturbed_phase(eps: float, dim: int = 1) -> PhaseHandle:
    """``<x, xi> + eps <x> <xi>``, regular for ``|eps| < 1``."""

    def gx(x, xi):
        f = eps * J.japanese(xi) / J.japanese(x)
        return [xi[k] + f * x[k] for k in range(dim)]

    def gxi(x, xi):
        f = eps * J.japanese(x) / J.japanese(xi)
        return [x[k] + f * xi[k] for k in range(dim)]

    return PhaseHandle(lambda x, xi: J.dot(x, xi) + eps * J.japanese(x) * J.japanese(xi),
                       dim, f"perturbed[{eps:g}]", grad_x=gx, grad_xi=gxi,
                       params={"preset": "perturbed", "eps": eps})


def cubic_phase(dim: int = 1) -> PhaseHandle:
    """``sum x_j xi_j^3``; not a simple phase (gradient grows like <xi>^3)."""
    return PhaseHandle(lambda x, xi: sum(x[k] * xi[k] ** 3 for k in range(dim)), dim, "cubic",
                       grad_x=lambda x, xi: [xi[k] ** 3 for k in range(dim)],
                       grad_xi=lambda x, xi: [3 * x[k] * xi[k] ** 2 for k in range(dim)],
                       params={"preset": "cubic"})


def degenerate_phase(dim: int = 1) -> PhaseHandle:
    """``<x, xi> / <xi>``; its x-gradient is bounded, so it cannot be inverted."""

    def gxi(x, xi):
        j = J.japanese(xi)
        s = J.dot(x, xi) / j ** 3
        return [x[k] / j - s * xi[k] for k in range(dim)]

    return PhaseHandle(lambda x, xi: J.dot(x, xi) / J.japanese(xi), dim, "degenerate",
                       grad_x=lambda x, xi: [xi[k] / J.japanese(xi) for k in range(dim)],
                       grad_xi=gxi, params={"preset": "degenerate"})


# ---------------------------------------------------------------------------
# admissibility

@dataclass
class PhaseReport:
    grad_xi_ratio: tuple          # (min, max) of <phi'_xi> / <x>
    grad_x_ratio: tuple           # (min, max) of <phi'_x> / <xi>
    seminorms: list               # [(alpha, beta, constant)] in SG^{1,1}_{1,1}
    det_min: float
    det_max: float
    simple: bool
    regular: bool
    thresholds: dict = field(default_factory=dict)
    probes: str = ""

    def failures(self) -> list[str]:
        out = []
        T = self.thresholds
        r = T.get("ratio", 100.0)
        for name, (lo, hi) in (("grad_xi_ratio", self.grad_xi_ratio),
                               ("grad_x_ratio", self.grad_x_ratio)):
            if hi > r or lo < 1 / r:
                out.append(f"{name} [{lo:.3g}, {hi:.3g}] outside [1/{r:g}, {r:g}]")
        worst = max(c for _, _, c in self.seminorms)
        if worst > T.get("seminorm", 100.0):
            out.append(f"SG^(1,1) seminorm constant {worst:.3g} exceeds {T.get('seminorm', 100.0):g}")
        if self.det_min < T.get("det", 1e-2):
            out.append(f"inf |det phi''_x,xi| = {self.det_min:.3g} below {T.get('det', 1e-2):g}")
        return out

    def to_dict(self) -> dict:
        return {"grad_xi_ratio": list(self.grad_xi_ratio), "grad_x_ratio": list(self.grad_x_ratio),
                "seminorms": [[list(a), list(b), c] for a, b, c in self.seminorms],
                "det_min": self.det_min, "det_max": self.det_max,
                "simple": self.simple, "regular": self.regular}


def phase_probe(phase: PhaseHandle, probes: ProbeSet, ratio_threshold: float = 100.0,
                seminorm_threshold: float = 100.0, det_threshold: float = 1e-2,
                K: int = 3) -> PhaseReport:
    """Probe the simple and regular phase conditions."""
    x, xi = probes.x, probes.xi
    so = phase.second_order(x, xi)
    jx, jxi = japanese(x), japanese(xi)
    r1 = japanese(so["gxi"]) / jx
    r2 = japanese(so["gx"]) / jxi
    if not (np.all(np.isfinite(r1)) and np.all(np.isfinite(r2))):
        raise PhaseError(f"phase {phase.name} has non-finite gradients on probes")
    rows = derivative_table(phase, probes, 1.0, 1.0, K, jx * jxi)
    dets = np.abs(np.linalg.det(so["hxxi"]))
    simple = (r1.max() <= ratio_threshold and r1.min() >= 1 / ratio_threshold
              and r2.max() <= ratio_threshold and r2.min() >= 1 / ratio_threshold
              and all(c <= seminorm_threshold for _, _, c in rows))
    regular = bool(simple and dets.min() >= det_threshold)
    rep = PhaseReport((float(r1.min()), float(r1.max())), (float(r2.min()), float(r2.max())),
                      rows, float(dets.min()), float(dets.max()), bool(simple), regular,
                      {"ratio": ratio_threshold, "seminorm": seminorm_threshold,
                       "det": det_threshold}, probes.description)
    phase.last_report = rep
    return rep


# ---------------------------------------------------------------------------
# Newton inversion

def _newton(residual_and_jacobian, u0: np.ndarray, scale: np.ndarray, tol: float,
            maxiter: int, what: str) -> np.ndarray:
    """Batched damped Newton.  ``u`` has shape ``(d, *B)``."""
    u = np.array(u0, dtype=float)
    F, Jm = residual_and_jacobian(u)
    res = np.linalg.norm(F, axis=0) / scale
    trace = [float(res.max())]
    for _ in range(maxiter):
        if res.max() <= tol:
            return u
        active = res > tol
        step = np.zeros_like(u)
        try:
            sol = np.linalg.solve(Jm[active], F[:, active].T[..., None])[..., 0]
        except np.linalg.LinAlgError:
            raise NewtonError(f"{what}: singular Jacobian", trace) from None
        step[:, active] = sol.T
        lam = np.ones(u.shape[1:])
        trial = u - lam * step
        Ft, Jt = residual_and_jacobian(trial)
        rt = np.linalg.norm(Ft, axis=0) / scale
        for _ in range(30):
            worse = active & ~(rt < res)
            if not np.any(worse):
                break
            lam = np.where(worse, lam / 2, lam)
            trial = u - lam * step
            Ft, Jt = residual_and_jacobian(trial)
            rt = np.linalg.norm(Ft, axis=0) / scale
        keep = active & ((rt < res) | (res > tol))
        u = np.where(keep, trial, u)
        F = np.where(keep, Ft, F)
        Jm = np.where(keep[..., None, None], Jt, Jm)
        res = np.where(keep, rt, res)
        trace.append(float(res.max()))
        if not np.all(np.isfinite(res)):
            break
    if res.max() <= tol:
        return u
    raise NewtonError(f"{what}: no convergence in {maxiter} iterations", trace)


def invert_gradient(phase: PhaseHandle, side: str, fixed, target, guess=None,
                    tol: float = NEWTON_TOL, maxiter: int = NEWTON_MAXITER,
                    use_cache: bool = True) -> np.ndarray:
    """Solve a gradient equation of the phase.

    ``side='x'`` returns ``eta`` with ``phi'_x(fixed, eta) = target``;
    ``side='xi'`` returns ``y`` with ``phi'_xi(y, fixed) = target``.
    Points have shape ``(d, *batch)``.  The residual satisfies
    ``|F| <= tol * <target>``.
    """
    d = phase.dim
    fixed = as_points(np.asarray(fixed, dtype=float), d)
    target = as_points(np.asarray(target, dtype=float), d)
    fixed, target = np.broadcast_arrays(fixed, target)
    shape = fixed.shape
    fixed = fixed.reshape(d, -1)
    target = target.reshape(d, -1)
    u0 = target.copy() if guess is None else \
        np.broadcast_to(as_points(np.asarray(guess, dtype=float), d), shape).reshape(d, -1).copy()
    key = None
    if use_cache and phase.cache_enabled:
        key = (side, fixed.tobytes(), target.tobytes(), u0.tobytes(), tol)
        with phase._lock:
            hit = phase._cache.get(key)
        if hit is not None:
            return hit.copy().reshape(shape)
    scale = japanese(target)

    if side == "x":
        def rj(u):
            so = phase.second_order(fixed, u)
            return so["gx"] - target, so["hxxi"]
    elif side == "xi":
        def rj(u):
            so = phase.second_order(u, fixed)
            return so["gxi"] - target, so["hxix"]
    else:
        raise ValueError("side must be 'x' or 'xi'")
    sol = _newton(rj, u0, scale, tol, maxiter, f"invert_gradient({phase.name}, side={side})")
    if key is not None:
        with phase._lock:
            if len(phase._cache) > 256:
                phase._cache.clear()
            phase._cache[key] = sol.copy()
    return sol.reshape(shape)


def canonical_transform(phase: PhaseHandle, x, eta) -> tuple[np.ndarray, np.ndarray]:
    """``(y, xi) = (phi'_xi(x, eta), phi'_x(x, eta))``."""
    so = phase.second_order(x, eta)
    return so["gxi"], so["gx"]


# ---------------------------------------------------------------------------
# inverse-gradient maps as handles

def _solve_jets(G: Callable, unknown0: np.ndarray, jac0: np.ndarray, target_jets: list,
                order: int) -> list:
    """Lift a numeric root ``G(u0) = target`` to jets.

    ``G`` maps a list of ``d`` jets to ``d`` jets; ``jac0`` is the base
    Jacobian with shape ``(*B, d, d)``.  Each pass of the fixed-Jacobian
    Newton map gains one correct order.
    """
    d = len(target_jets)
    nv = target_jets[0].nvars
    inv = np.linalg.inv(jac0)
    u = [Jet.constant(unknown0[j], nv, order) for j in range(d)]
    for _ in range(order + 1):
        R = [g - t for g, t in zip(G(u), target_jets)]
        u = [u[j] - sum(R[k] * inv[..., j, k] for k in range(d)) for j in range(d)]
    return u


class InverseGradientHandle(DerivedHandle):
    """``eta(x, xi)`` solving ``phi'_x(x, eta) = xi`` (``side='x'``), or
    ``y(y_target, xi)`` solving ``phi'_xi(y, xi) = y_target`` (``side='xi'``).

    Returned handles are one per component.
    """

    def __init__(self, phase: PhaseHandle, side: str, component: int):
        super().__init__(2, phase.dim, f"inv_grad_{side}[{phase.name}]_{component}")
        self.phase = phase
        self.side = side
        self.component = component

    def taylor(self, base, order):
        d = self.dim
        p = np.array(base[:d], dtype=float)
        q = np.array(base[d:], dtype=float)
        X, Q = J.seed_groups([list(p), list(q)], order)
        if self.side == "x":
            sol = invert_gradient(self.phase, "x", p, q)
            jac = self.phase.second_order(p, sol)["hxxi"]
            u = _solve_jets(lambda v: self.phase.grad_x(X, v), sol, jac, Q, order)
        else:
            sol = invert_gradient(self.phase, "xi", q, p)
            jac = self.phase.second_order(sol, q)["hxix"]
            u = _solve_jets(lambda v: self.phase.grad_xi(v, Q), sol, jac, X, order)
        return u[self.component]


def inverse_gradient_handles(phase: PhaseHandle, side: str) -> list[Handle]:
    return [InverseGradientHandle(phase, side, j) for j in range(phase.dim)]


# ---------------------------------------------------------------------------
# averaged gradient and S_phi

def gauss_legendre01(n: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(n)
    return (t + 1) / 2, w / 2


def averaged_gradient(phase: PhaseHandle, x, y, xi, nodes: int = GL_NODES) -> list:
    """``int_0^1 phi'_x(y + t (x - y), xi) dt`` by Gauss-Legendre (generic)."""
    ts, ws = gauss_legendre01(nodes)
    d = phase.dim
    acc = [0] * d
    for t, w in zip(ts, ws):
        z = [y[k] + t * (x[k] - y[k]) for k in range(d)]
        g = phase.grad_x(z, xi)
        acc = [acc[k] + w * g[k] for k in range(d)]
    return acc


def averaged_xi_gradient(phase: PhaseHandle, z, xi, eta, nodes: int = GL_NODES) -> list:
    """``int_0^1 phi'_xi(z, eta + t (xi - eta)) dt`` by Gauss-Legendre (generic)."""
    ts, ws = gauss_legendre01(nodes)
    d = phase.dim
    acc = [0] * d
    for t, w in zip(ts, ws):
        m = [eta[k] + t * (xi[k] - eta[k]) for k in range(d)]
        g = phase.grad_xi(z, m)
        acc = [acc[k] + w * g[k] for k in range(d)]
    return acc


class SPhiAmplitude(DerivedHandle):
    """Change of variables ``S_phi`` applied to an amplitude.

    ``variant='xy'``: ``(S f)(x, y, xi) = f(x, y, Phi) |det Phi'_xi|`` with
    ``int_0^1 phi'_x(y + t(x - y), Phi) dt = xi``.

    ``variant='xieta'``: ``(S f)(x, xi, eta) = f(Phi, xi, eta) |det Phi'_x|``
    with ``int_0^1 phi'_xi(Phi, eta + t(xi - eta)) dt = x``.

    Evaluation is only allowed where the paired variables satisfy
    ``|q - p| <= k <p>`` (the support of the diagonal cutoff).
    """

    def __init__(self, c0: Handle, phase: PhaseHandle, variant: str, k_cutoff: float,
                 nodes: int = GL_NODES):
        if c0.groups != 3 or c0.dim != phase.dim:
            raise ValueError("S_phi needs a three-group amplitude of matching dimension")
        if variant not in ("xy", "xieta"):
            raise ValueError("variant must be 'xy' or 'xieta'")
        super().__init__(3, phase.dim, f"S[{phase.name},{variant}]{c0.name}")
        self.c0 = c0
        self.phase = phase
        self.variant = variant
        self.k = k_cutoff
        self.nodes = nodes

    def _avg(self, u, p, q, nodes):
        if self.variant == "xy":
            return averaged_gradient(self.phase, p, q, u, nodes)
        return averaged_xi_gradient(self.phase, u, p, q, nodes)

    def _avg_values_and_jacobian(self, u, p, q, nodes):
        """Numeric averaged map and its Jacobian in the unknown."""
        ts, ws = gauss_legendre01(nodes)
        d = self.dim
        G = np.zeros_like(u)
        Jm = np.zeros(u.shape[1:] + (d, d))
        for t, w in zip(ts, ws):
            m = q + t * (p - q)
            if self.variant == "xy":
                so = self.phase.second_order(m, u)
                G += w * so["gx"]
                Jm += w * so["hxxi"]
            else:
                so = self.phase.second_order(u, m)
                G += w * so["gxi"]
                Jm += w * so["hxix"]
        return G, Jm

    def solve(self, p: np.ndarray, q: np.ndarray, target: np.ndarray) -> tuple:
        """Numeric ``Phi`` and the node count actually used."""
        d = self.dim
        scale = japanese(target)
        nodes = self.nodes
        for attempt in range(2):
            sol = _newton(lambda u: self._with_target(u, p, q, target, nodes),
                          target.copy(), scale, NEWTON_TOL, NEWTON_MAXITER,
                          f"S_phi({self.phase.name}) inverse")
            g1, _ = self._avg_values_and_jacobian(sol, p, q, nodes)
            g2, _ = self._avg_values_and_jacobian(sol, p, q, 2 * nodes)
            if np.max(np.abs(g1 - g2) / scale) <= 1e-12 or attempt == 1:
                return sol, nodes
            nodes *= 2
        return sol, nodes  # pragma: no cover

    def _with_target(self, u, p, q, target, nodes):
        G, Jm = self._avg_values_and_jacobian(u, p, q, nodes)
        return G - target, Jm

    def _check_region(self, p, q):
        gap = np.linalg.norm(q - p, axis=0)
        bad = gap > self.k * japanese(p) * (1 + 1e-12)
        if np.any(bad):
            i = int(np.flatnonzero(bad.ravel())[0])
            pf = p.reshape(self.dim, -1)[:, i].tolist()
            qf = q.reshape(self.dim, -1)[:, i].tolist()
            raise PhaseError(f"S_phi evaluated outside the cutoff region |q - p| <= "
                             f"{self.k:g} <p> at p={pf}, q={qf}")

    def taylor(self, base, order):
        d = self.dim
        g1 = np.array(base[:d], dtype=float)
        g2 = np.array(base[d:2 * d], dtype=float)
        g3 = np.array(base[2 * d:], dtype=float)
        shape = np.broadcast_shapes(g1.shape, g2.shape, g3.shape)
        g1, g2, g3 = (np.broadcast_to(a, shape) for a in (g1, g2, g3))
        if self.variant == "xy":
            p, q, target = g1, g2, g3          # unknown replaces xi
        else:
            p, q, target = g2, g3, g1          # unknown replaces x
        self._check_region(p, q)
        sol, nodes = self.solve(p, q, target)
        _, jac = self._avg_values_and_jacobian(sol, p, q, nodes)
        G1, G2, G3 = J.seed_groups([list(g1), list(g2), list(g3)], order + 1)
        if self.variant == "xy":
            P, Q, T = G1, G2, G3
        else:
            P, Q, T = G2, G3, G1
        u = _solve_jets(lambda v: self._avg(v, P, Q, nodes), sol, jac, T, order + 1)
        # Jacobian of Phi with respect to the target variables
        off = 2 * d if self.variant == "xy" else 0
        mat = []
        for j in range(d):
            row = []
            for k in range(d):
                alpha = [0] * (3 * d)
                alpha[off + k] = 1
                row.append(u[j].derivative(alpha))
            mat.append(row)
        det = J.det(mat)
        det = det * np.sign(np.real(det.value))
        u = [c.truncate(order) for c in u]
        if self.variant == "xy":
            args = ([g.truncate(order) for g in G1], [g.truncate(order) for g in G2], u)
        else:
            args = (u, [g.truncate(order) for g in G2], [g.truncate(order) for g in G3])
        val = self.c0(*args)
        if not isinstance(val, Jet):
            val = Jet.constant(np.broadcast_to(val, shape[1:]), 3 * d, order)
        return val * det


def s_phi_transform(c0: Handle, phase: PhaseHandle, variant: str,
                    k_cutoff: float = 0.5) -> SPhiAmplitude:
    """Wrap ``c0`` in the ``S_phi`` change of variables (see :class:`SPhiAmplitude`)."""
    return SPhiAmplitude(c0, phase, variant, k_cutoff)
