"""Symbols, seminorm probes, structure functions and asymptotic sums."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import jets as J
from .handles import DERIVATIVE_CAP, FormulaHandle, Handle, check_cap
from .jets import Jet, multi_indices
from .weights import (DEFAULT_THRESHOLD, ProbeSet, derivative_table, evaluate_weight,
                      far_field, japanese, theta_weight, weight_product)


class SymbolError(ValueError):
    """Invalid symbol construction or failed symbol evaluation."""


def enumerate_multi_indices(d: int, M: int) -> tuple:
    """All ``alpha`` in ``N^d`` with ``|alpha| <= M``, graded lexicographic."""
    return multi_indices(d, M)


def symbol(fn, dim: int, name: str, weight: Handle | None = None, r: float = 1.0,
           rho: float = 1.0) -> Handle:
    """Wrap a generic expression ``fn(x, xi)`` as a symbol with claimed class."""
    return FormulaHandle(fn, 2, dim, name, {"kind": "symbol", "weight": weight, "r": r,
                                             "rho": rho})


def amplitude(fn, dim: int, name: str) -> Handle:
    return FormulaHandle(fn, 3, dim, name, {"kind": "amplitude"})


@dataclass
class SeminormReport:
    """Probe constants ``sup |D^a_x D^b_xi a| <x>^{r|a|} <xi>^{rho|b|} / w``."""

    orders: list
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
                "pass": bool(self.passed)}


def seminorm_probe(a: Handle, w: Handle, r: float, rho: float, K: int, probes: ProbeSet,
                   threshold: float = DEFAULT_THRESHOLD) -> SeminormReport:
    """Probe membership of ``a`` in the class defined by ``(w, r, rho)``."""
    check_cap(K, DERIVATIVE_CAP, "probe order K")
    wv = evaluate_weight(w, probes.x, probes.xi)
    try:
        rows = derivative_table(a, probes, r, rho, K, wv)
    except (ArithmeticError, np.linalg.LinAlgError) as exc:  # pragma: no cover
        raise SymbolError(f"evaluation of {a.name} failed: {exc}") from exc
    except ValueError as exc:
        raise SymbolError(str(exc)) from exc
    passed = all(c <= threshold for _, _, c in rows)
    return SeminormReport(rows, passed, threshold, probes.description,
                          {"symbol": a.name, "weight": w.name, "r": r, "rho": rho, "K": K})


# ---------------------------------------------------------------------------
# structure functions

def cutoff_diagonal(k: float, dim: int = 1) -> Handle:
    """Diagonal cutoff ``chi(x, y)``.

    Equal to 1 for ``|y - x| <= k <x> / 2`` and to 0 for ``|y - x| >= k <x>``.
    The smooth step acts on ``s = |y - x|^2 / (k <x>)^2`` over ``[1/4, 1]``,
    which keeps ``chi`` smooth across the diagonal.
    """
    if not 0 < k < 1:
        raise SymbolError(f"cutoff parameter k must lie in (0, 1), got {k}")

    def fn(x, y):
        diff = [y[j] - x[j] for j in range(dim)]
        s = J.dot(diff, diff) / ((k * k) * (1 + J.dot(x, x)))
        return J.smooth_step(s, 0.25, 1.0)

    return FormulaHandle(fn, 2, dim, f"cutoff[{k:g}]", {"kind": "cutoff", "k": k})


def excision(R: float, dim: int = 1, mode: str = "joint") -> Handle:
    """0-excision ``sigma(x, xi)``.

    With ``mode='joint'`` it equals 0 for ``|x| + |xi| <= R/2`` and 1 for
    ``|x| + |xi| >= R``.  The step acts on ``s = |x|^2 + |xi|^2`` over
    ``[R^2/4, R^2/2]``; since ``(|x| + |xi|)^2 / 2 <= s <= (|x| + |xi|)^2``
    both plateaus are respected.  The reversed step is used directly
    rather than ``1 - step`` to keep relative accuracy near the zero plateau.

    ``mode='xi'`` (or ``'x'``) excises in one variable only: 0 for
    ``|xi| <= R/2`` and 1 for ``|xi| >= R``.  This is the mask needed when
    only the frequency (or only the space) orders decrease.
    """
    if not R > 0:
        raise SymbolError(f"excision radius must be positive, got {R}")
    if mode == "joint":
        def fn(x, xi):
            s = J.dot(x, x) + J.dot(xi, xi)
            return J.smooth_step(s, R * R / 2, R * R / 4)
    elif mode in ("x", "xi"):
        def fn(x, xi):
            v = x if mode == "x" else xi
            return J.smooth_step(J.dot(v, v), R * R, R * R / 4)
    else:
        raise SymbolError(f"unknown excision mode {mode!r}")
    return FormulaHandle(fn, 2, dim, f"excision[{R:g},{mode}]",
                         {"kind": "excision", "R": R, "mode": mode})


def structure_function(kind: str, param: float, dim: int = 1) -> Handle:
    if kind in ("cutoff", "cutoff_diagonal"):
        return cutoff_diagonal(param, dim)
    if kind == "excision":
        return excision(param, dim)
    raise SymbolError(f"unknown structure function kind {kind!r}")


def transition_probes(h: Handle, n: int = 16, radii=(0.0, 1.0, 10.0, 100.0, 1000.0),
                      seed: int = 0) -> ProbeSet:
    """Probe points inside the transition band of a cutoff or excision.

    Generic probe sets rarely land where a structure function varies; these
    points sit at ``n`` evenly spaced fractions of the band, for base points
    at the given radii along seeded random directions.
    """
    meta = h.meta or {}
    kind = meta.get("kind")
    d = h.dim
    rng = np.random.default_rng(seed)
    fr = (np.arange(n) + 0.5) / n
    xs, ys = [], []

    def unit():
        v = rng.normal(size=d)
        return v / np.linalg.norm(v)

    if kind == "cutoff":
        k = meta["k"]
        for r in radii:
            for f in fr:
                x = r * unit()
                gap = k * np.sqrt(1 + x @ x) * (0.5 + 0.5 * f)
                xs.append(x)
                ys.append(x + gap * unit())
    elif kind == "excision":
        R, mode = meta["R"], meta["mode"]
        lo, hi = (R * R / 4, R * R / 2) if mode == "joint" else (R * R / 4, R * R)
        for f in fr:
            for _ in range(len(radii)):
                rad = np.sqrt(lo + f * (hi - lo))
                if mode == "joint":
                    th = rng.uniform(0, np.pi / 2)
                    xs.append(rad * np.cos(th) * unit())
                    ys.append(rad * np.sin(th) * unit())
                else:
                    free = rng.uniform(0, 100) * unit()
                    pair = (rad * unit(), free)
                    xs.append(pair[0] if mode == "x" else pair[1])
                    ys.append(pair[1] if mode == "x" else pair[0])
    else:
        raise SymbolError(f"transition_probes needs a cutoff or excision, got {h.name}")
    return ProbeSet(np.array(xs).T, np.array(ys).T,
                    f"transition band of {h.name}, {n} fractions, seed={seed}")


# ---------------------------------------------------------------------------
# asymptotic sums

class AsymptoticSum(FormulaHandle):
    """``sum_j sigma(x, xi; R_j) a_j(x, xi)`` with increasing radii ``R_j``."""

    def __init__(self, terms, tags, radii, dim, name, mode="joint"):
        self.terms = list(terms)
        self.tags = list(tags)
        self.radii = list(radii)
        self.mode = mode
        masks = [excision(R, dim, mode) for R in self.radii]

        def fn(x, xi):
            acc = 0
            for a, m in zip(self.terms, masks):
                acc = acc + m(x, xi) * a(x, xi)
            return acc

        super().__init__(fn, 2, dim, name, {"kind": "symbol"})
        self.masks = masks

    def partial_sum(self, n: int) -> Handle:
        """Unmasked ``a_0 + ... + a_{n-1}``."""
        terms = self.terms[:n]

        def fn(x, xi):
            acc = 0
            for a in terms:
                acc = acc + a(x, xi)
            return acc

        return FormulaHandle(fn, 2, self.dim, f"{self.name}[:{n}]")


def asymptotic_sum(terms: Sequence[Handle], tags: Sequence[tuple], base: tuple,
                   probes: ProbeSet, K: int = 2, max_doublings: int = 60) -> AsymptoticSum:
    """Excision-masked summation of an asymptotic expansion.

    Each radius ``R_j`` starts at ``max(2 R_{j-1}, R_0)`` (``R_0`` is the
    smallest probe radius, floored at 1) and is doubled until the masked term
    ``sigma_j a_j`` has probe seminorm at most ``2^-j`` in the class
    ``w theta_{s_{j-1}, sigma_{j-1}}`` of the preceding tag.  Measuring
    against the preceding class is what makes the search meaningful: in
    its own class a term's constant does not shrink as ``R`` grows.

    The masks excise jointly in ``(x, xi)`` when both ``r`` and ``rho`` are
    positive, and only in the variable whose order decreases otherwise.

    Parameters
    ----------
    terms : list of symbol handles
    tags : list of ``(s_j, sigma_j)``
    base : ``(w, r, rho)``
    """
    if not terms:
        raise SymbolError("asymptotic_sum needs at least one term")
    if len(tags) != len(terms):
        raise SymbolError("one order tag per term is required")
    w, r, rho = base
    d = terms[0].dim
    for (s0, g0), (s1, g1) in zip(tags, tags[1:]):
        if s1 > s0 or g1 > g0:
            raise SymbolError(f"order tags must be non-increasing, got {tags}")
    if r > 0 and rho > 0:
        mode = "joint"
        radius = np.sqrt(np.sum(probes.x ** 2, axis=0) + np.sum(probes.xi ** 2, axis=0))
    elif rho > 0:
        mode = "xi"
        radius = np.sqrt(np.sum(probes.xi ** 2, axis=0))
    elif r > 0:
        mode = "x"
        radius = np.sqrt(np.sum(probes.x ** 2, axis=0))
    else:
        raise SymbolError("asymptotic sums need r + rho > 0")
    R0 = max(1.0, float(radius.min()))
    radii = []
    prev = None
    for j, (a, tag) in enumerate(zip(terms, tags)):
        R = R0 if prev is None else 2 * prev
        if j == 0:
            radii.append(R)
            prev = R
            continue
        cls = weight_product(w, theta_weight(tags[j - 1][0], tags[j - 1][1], d))
        for _ in range(max_doublings):
            mask = excision(R, d, mode)
            masked = FormulaHandle(lambda x, xi, a=a, m=mask: m(x, xi) * a(x, xi), 2, d)
            rep = seminorm_probe(masked, cls, r, rho, K, probes, threshold=np.inf)
            if rep.max_constant <= 2.0 ** (-j):
                break
            R *= 2
        else:
            raise SymbolError(f"radius search for term j={j} did not terminate within "
                              f"{max_doublings} doublings")
        radii.append(R)
        prev = R
    return AsymptoticSum(terms, tags, radii, d,
                         "asum[" + ",".join(t.name for t in terms) + "]", mode)


# ---------------------------------------------------------------------------
# ellipticity

@dataclass
class EllipticityReport:
    inf_ratio: float
    passed: bool
    threshold: float
    n_points: int
    witness: tuple | None = None

    def to_dict(self) -> dict:
        return {"inf_ratio": self.inf_ratio, "pass": self.passed, "threshold": self.threshold,
                "n_points": self.n_points}


def ellipticity_probe(a: Handle, w: Handle, R: float, probes: ProbeSet,
                      threshold: float = 1e-2) -> EllipticityReport:
    """``inf |a| / w`` over probes with ``|x| + |xi| >= R``."""
    far = far_field(probes, R)
    vals = np.abs(np.broadcast_to(a.evaluate(far.x, far.xi), (len(far),)))
    wv = evaluate_weight(w, far.x, far.xi)
    ratio = vals / wv
    if not np.all(np.isfinite(ratio)):
        raise SymbolError(f"non-finite ellipticity ratio for {a.name}")
    k = int(np.argmin(ratio))
    return EllipticityReport(float(ratio[k]), bool(ratio[k] >= threshold), threshold,
                             len(far), far.point(k))


def jet_value(h: Handle, x, xi, alpha, beta) -> np.ndarray:
    """``d^alpha_x d^beta_xi h`` at points via jets."""
    order = sum(alpha) + sum(beta)
    return h.jet(x, xi, order=order).partial(tuple(alpha) + tuple(beta))


__all__ = ["SymbolError", "enumerate_multi_indices", "symbol", "amplitude", "SeminormReport",
           "seminorm_probe", "cutoff_diagonal", "excision", "structure_function",
           "transition_probes",
           "AsymptoticSum", "asymptotic_sum", "EllipticityReport", "ellipticity_probe",
           "jet_value", "japanese", "Jet"]
