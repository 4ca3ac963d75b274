"""Weight functions, probe sets and moderateness probes.

Weights are positive handles on ``R^{2d}``.  Sup-type conditions are
checked on a finite :class:`ProbeSet`; a probe pass is evidence and never a
proof, so every report carries the description of the probes it used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import jets as J
from .handles import DERIVATIVE_CAP, FormulaHandle, Handle, check_cap

DEFAULT_THRESHOLD = 100.0
DEFAULT_INVARIANCE_THRESHOLD = 10.0
DEFAULT_NV = 4


class WeightError(ValueError):
    """A weight evaluated to a non-positive or non-finite value."""


# ---------------------------------------------------------------------------
# probe sets

_RADII = (0.0, 0.5, 2.0, 8.0, 30.0, 100.0, 300.0, 1000.0)


def _directions(d: int) -> np.ndarray:
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        v = np.array([[1, 0], [0, 1], [1, 1], [-0.6, 0.8], [-1, -0.3]], dtype=float)
    else:
        v = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1], [-0.6, 0.8, -0.2]],
                     dtype=float)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass(frozen=True)
class ProbeSet:
    """Finite set of phase-space points ``(x, xi)``.

    Attributes
    ----------
    x, xi : ndarray, shape (d, P)
    description : str
        Generation rule, recorded in every report.
    """

    x: np.ndarray
    xi: np.ndarray
    description: str = ""

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        xi = np.atleast_2d(np.asarray(self.xi, dtype=float))
        if x.shape != xi.shape or x.shape[1] == 0:
            raise ValueError("probe set must be nonempty with matching x and xi shapes")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(xi))):
            raise ValueError("probe coordinates must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)

    @property
    def dim(self) -> int:
        return self.x.shape[0]

    def __len__(self) -> int:
        return self.x.shape[1]

    def subset(self, mask) -> "ProbeSet":
        return ProbeSet(self.x[:, mask], self.xi[:, mask], self.description + " (subset)")

    def union(self, other: "ProbeSet") -> "ProbeSet":
        return ProbeSet(np.hstack([self.x, other.x]), np.hstack([self.xi, other.xi]),
                        f"{self.description} + {other.description}")

    def point(self, k: int) -> tuple:
        return self.x[:, k].tolist(), self.xi[:, k].tolist()

    def span_decades(self) -> tuple[float, float]:
        jx = np.sqrt(1 + np.sum(self.x ** 2, axis=0))
        jxi = np.sqrt(1 + np.sum(self.xi ** 2, axis=0))
        return float(np.log10(jx.max() / jx.min())), float(np.log10(jxi.max() / jxi.min()))


def log_radial_probes(dim: int, radii: Sequence[float] = _RADII) -> ProbeSet:
    """Products of log-spaced radii along a few fixed directions in x and xi."""
    dirs = _directions(dim)
    xs, xis = [], []
    for r1 in radii:
        for u in dirs:
            for r2 in radii:
                for v in dirs:
                    xs.append(r1 * u)
                    xis.append(r2 * v)
    pts = np.unique(np.hstack([np.array(xs), np.array(xis)]), axis=0)
    return ProbeSet(pts[:, :dim].T, pts[:, dim:].T,
                    f"log-radial rays, radii {min(radii)}..{max(radii)}, d={dim}")


def lattice_probes(dim: int, extent: float = 4.0, n: int = 5) -> ProbeSet:
    ax = np.linspace(-extent, extent, n)
    mesh = np.meshgrid(*([ax] * (2 * dim)), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh])
    return ProbeSet(pts[:dim], pts[dim:], f"lattice [-{extent},{extent}]^{2 * dim}, {n}/axis")


def random_probes(dim: int, n: int = 100, seed: int = 0, scale: float = 1000.0) -> ProbeSet:
    """Seeded points with log-uniform radii in ``[0, scale]`` and random directions."""
    rng = np.random.default_rng(seed)

    def draw():
        r = np.expm1(rng.uniform(0, np.log1p(scale), n))
        v = rng.normal(size=(dim, n))
        return v / np.linalg.norm(v, axis=0) * r

    return ProbeSet(draw(), draw(), f"random log-radial, n={n}, seed={seed}, scale={scale}")


def default_probes(dim: int = 1, seed: int = 0) -> ProbeSet:
    """Log-radial rays out to 1e3 plus seeded random points."""
    return log_radial_probes(dim).union(random_probes(dim, 60 if dim == 1 else 120, seed))


def far_field(probes: ProbeSet, R: float) -> ProbeSet:
    """Probe points with ``|x| + |xi| >= R``."""
    s = np.linalg.norm(probes.x, axis=0) + np.linalg.norm(probes.xi, axis=0)
    return probes.subset(s >= R)


def japanese(v: np.ndarray) -> np.ndarray:
    return np.sqrt(1 + np.sum(np.asarray(v) ** 2, axis=0))


# ---------------------------------------------------------------------------
# weights

def weight(fn: Callable, dim: int, name: str, claimed_orders=(1.0, 1.0)) -> Handle:
    """Wrap a closed-form positive function of ``(x, xi)`` as a weight handle."""
    return FormulaHandle(fn, 2, dim, name, {"kind": "weight", "claimed_orders": claimed_orders})


def theta_weight(m: float, mu: float, dim: int = 1) -> Handle:
    """``theta_{m,mu}(x, xi) = <x>^m <xi>^mu`` with claimed orders (1, 1)."""

    def fn(x, xi):
        out = 1
        if m:
            out = out * J.power(1 + J.dot(x, x), m / 2)
        if mu:
            out = out * J.power(1 + J.dot(xi, xi), mu / 2)
        return out

    h = weight(fn, dim, f"theta[{m:g},{mu:g}]")
    h.meta.update(m=m, mu=mu)
    return h


def constant_weight(c: float = 1.0, dim: int = 1) -> Handle:
    if c <= 0:
        raise WeightError("a constant weight must be positive")
    return weight(lambda x, xi: c, dim, f"const[{c:g}]", (0.0, 0.0))


def weight_product(*ws: Handle, name: str = "") -> Handle:
    def fn(x, xi):
        out = 1
        for w in ws:
            out = out * w(x, xi)
        return out

    return weight(fn, ws[0].dim, name or "*".join(w.name for w in ws))


def theta_transform(w: Handle, phase, side: int) -> Handle:
    """Phase-modified weight.

    ``side=1`` gives ``w(phi'_xi(x, xi), xi)`` and ``side=2`` gives
    ``w(x, phi'_x(x, xi))``.
    """
    if side == 1:
        fn = lambda x, xi: w(phase.grad_xi(x, xi), xi)  # noqa: E731
    elif side == 2:
        fn = lambda x, xi: w(x, phase.grad_x(x, xi))  # noqa: E731
    else:
        raise ValueError("side must be 1 or 2")
    h = weight(fn, w.dim, f"Theta{side}[{phase.name}]{w.name}",
               w.meta.get("claimed_orders", (1.0, 1.0)))
    h.meta.update(phase=phase.name, side=side, base=w.name)
    return h


def evaluate_weight(w: Handle, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
    vals = np.asarray(w.evaluate(x, xi))
    vals = np.broadcast_to(vals, x.shape[1:])
    bad = ~np.isfinite(vals) | (np.real(vals) <= 0) | (np.abs(np.imag(vals)) > 0)
    if np.any(bad):
        k = int(np.flatnonzero(bad.ravel())[0])
        pt = (x.reshape(x.shape[0], -1)[:, k].tolist(), xi.reshape(xi.shape[0], -1)[:, k].tolist())
        raise WeightError(f"weight {w.name} is not positive and finite at (x, xi) = {pt}: "
                          f"{vals.ravel()[k]}")
    return np.real(vals)


# ---------------------------------------------------------------------------
# reports

@dataclass
class ModerationReport:
    """Probe constants ``sup <x>^{r|a|} <xi>^{rho|b|} |d^a_x d^b_xi w| / w``."""

    orders: list
    v_ratio_max: float
    passed: bool
    threshold: float
    probes: str = ""
    extra: dict = field(default_factory=dict)

    def constant(self, alpha, beta) -> float:
        for a, b, c in self.orders:
            if tuple(a) == tuple(alpha) and tuple(b) == tuple(beta):
                return c
        raise KeyError((alpha, beta))

    @property
    def max_constant(self) -> float:
        return max(c for _, _, c in self.orders)

    def to_dict(self) -> dict:
        return {"orders": [[list(a), list(b), float(c)] for a, b, c in self.orders],
                "v_ratio_max": float(self.v_ratio_max), "pass": bool(self.passed)}


def derivative_table(h: Handle, probes: ProbeSet, r: float, rho: float, K: int,
                     scale: np.ndarray, exclude_value: bool = False) -> list:
    """``[(alpha, beta, sup |d^a_x d^b_xi h| <x>^{r|a|} <xi>^{rho|b|} / scale)]``."""
    d = probes.dim
    jet = h.jet(probes.x, probes.xi, order=K)
    jx = japanese(probes.x)
    jxi = japanese(probes.xi)
    rows = []
    for alpha, beta in J.all_pairs(d, K):
        vals = np.abs(jet.partial(alpha + beta))
        vals = np.broadcast_to(vals, scale.shape)
        ratio = vals * jx ** (r * sum(alpha)) * jxi ** (rho * sum(beta)) / scale
        if not np.all(np.isfinite(ratio)):
            k = int(np.flatnonzero(~np.isfinite(ratio))[0])
            raise ValueError(f"{h.name}: non-finite derivative {alpha, beta} at "
                             f"{probes.point(k)}")
        rows.append((alpha, beta, float(ratio.max())))
    return rows


def weight_probe(w: Handle, r: float, rho: float, K: int, probes: ProbeSet,
                 nv: int = DEFAULT_NV, threshold: float = DEFAULT_THRESHOLD,
                 seed: int = 0) -> ModerationReport:
    """Probe SG-moderateness of ``w`` and v-moderateness with ``v = <z>^nv``."""
    check_cap(K, DERIVATIVE_CAP, "probe order K")
    values = evaluate_weight(w, probes.x, probes.xi)
    rows = derivative_table(w, probes, r, rho, K, values)

    # v-moderateness over paired probes, plus unit-scale shifts
    rng = np.random.default_rng(seed)
    P = len(probes)
    perm = rng.permutation(P)
    sx = np.hstack([probes.x[:, perm], rng.normal(size=probes.x.shape)])
    sxi = np.hstack([probes.xi[:, perm], rng.normal(size=probes.xi.shape)])
    X = np.hstack([probes.x, probes.x])
    XI = np.hstack([probes.xi, probes.xi])
    shifted = evaluate_weight(w, X + sx, XI + sxi)
    base = np.hstack([values, values])
    v = (1 + np.sum(sx ** 2, axis=0) + np.sum(sxi ** 2, axis=0)) ** (nv / 2)
    v_ratio = float(np.max(shifted / (base * v)))
    passed = all(c <= threshold for _, _, c in rows) and v_ratio <= threshold
    return ModerationReport(rows, v_ratio, passed, threshold, probes.description,
                            {"r": r, "rho": rho, "K": K, "nv": nv, "weight": w.name})


@dataclass
class InvarianceReport:
    ratio_max: float
    ratio_min: float
    theta_ratio_max: float | None
    theta_ratio_min: float | None
    passed: bool
    threshold: float
    probes: str = ""

    def to_dict(self) -> dict:
        return {"ratio_max": self.ratio_max, "ratio_min": self.ratio_min,
                "theta_ratio_max": self.theta_ratio_max,
                "theta_ratio_min": self.theta_ratio_min, "pass": self.passed}


def phase_maps(phase):
    """The SG maps a phase induces: ``(x, eta) -> phi'_xi(x, eta)`` and
    ``(xi, eta) -> phi'_x(eta, xi)``."""
    return (lambda x, eta: phase.grad_xi(x, eta),
            lambda xi, eta: phase.grad_x(eta, xi))


def default_shifts(dim: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    mags = np.array([0.5, 3.0, 30.0, 300.0])
    v = rng.normal(size=(dim, mags.size))
    v = v / np.linalg.norm(v, axis=0) * mags
    return np.hstack([v, -v])


def invariance_probe(w: Handle, mapping, side: int, probes: ProbeSet,
                     shifts: np.ndarray | None = None,
                     threshold: float = DEFAULT_INVARIANCE_THRESHOLD) -> InvarianceReport:
    """Probe ``(phi, side)``-invariance of ``w``.

    ``mapping`` is either a phase handle, whose induced maps are used and
    which additionally enables the ``Theta_1 w / Theta_2 w`` comparison, or a
    generic callable ``mapping(z, eta) -> components``.

    For side 1 the ratio is ``w(f(x, eta1 + eta2), xi) / w(f(x, eta1), xi)``
    with ``eta1 = xi``; for side 2 it is
    ``w(x, f(xi, eta1 + eta2)) / w(x, f(xi, eta1))`` with ``eta1 = x``.
    """
    d = probes.dim
    phase = mapping if hasattr(mapping, "grad_x") else None
    if phase is not None:
        f = phase_maps(phase)[side - 1]
    else:
        f = mapping
    if shifts is None:
        shifts = default_shifts(d)
    shifts = np.asarray(shifts, dtype=float).reshape(d, -1)
    ratios = []
    for s in shifts.T:
        s = s[:, None]
        if side == 1:
            eta1 = probes.xi
            top = w.evaluate(np.array(f(list(probes.x), list(eta1 + s))), probes.xi)
            bot = w.evaluate(np.array(f(list(probes.x), list(eta1))), probes.xi)
        elif side == 2:
            eta1 = probes.x
            top = w.evaluate(probes.x, np.array(f(list(probes.xi), list(eta1 + s))))
            bot = w.evaluate(probes.x, np.array(f(list(probes.xi), list(eta1))))
        else:
            raise ValueError("side must be 1 or 2")
        ratios.append(np.broadcast_to(np.real(top) / np.real(bot), (len(probes),)))
    ratios = np.concatenate(ratios)
    if not np.all(np.isfinite(ratios)):
        k = int(np.flatnonzero(~np.isfinite(ratios))[0]) % len(probes)
        raise WeightError(f"non-finite invariance ratio at {probes.point(k)}")
    tmax = tmin = None
    ok = ratios.max() <= threshold and 1 / ratios.min() <= threshold
    if phase is not None:
        t1 = theta_transform(w, phase, 1).evaluate(probes.x, probes.xi)
        t2 = theta_transform(w, phase, 2).evaluate(probes.x, probes.xi)
        q = np.broadcast_to(np.real(t1) / np.real(t2), (len(probes),))
        tmax, tmin = float(q.max()), float(q.min())
        ok = ok and tmax <= threshold and 1 / tmin <= threshold
    return InvarianceReport(float(ratios.max()), float(ratios.min()), tmax, tmin,
                            bool(ok), threshold, probes.description)
