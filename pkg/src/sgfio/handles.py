"""Smooth functions of grouped variables with exact jets.

A handle is a function of ``groups`` blocks of ``dim`` real variables, e.g.
a symbol ``a(x, xi)`` (two groups) or an amplitude ``c(x, y, xi)`` (three
groups).  Handles are called with one sequence of components per group; the
components may be ndarrays, mpmath scalars or :class:`~sgfio.jets.Jet`
objects, and jets propagate through every call.

Two flavours exist.  :class:`FormulaHandle` wraps a closed-form expression
written with the generic functions of :mod:`sgfio.jets`, so the same code
yields values, Taylor jets and high-precision values.  :class:`DerivedHandle`
subclasses instead provide their own Taylor expansion at numeric base points
(for instance through a Newton solve), and jet inputs are handled by jet
composition.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from . import jets as J
from .jets import Jet

# Engine-wide cap on user-facing derivative orders.
DERIVATIVE_CAP = 6


class CapError(ValueError):
    """Requested derivative order exceeds the engine cap."""


def check_cap(order: int, cap: int = DERIVATIVE_CAP, what: str = "derivative order"):
    if order > cap:
        raise CapError(f"{what} {order} exceeds the derivative cap {cap}")


def as_points(p, dim: int) -> np.ndarray:
    """Coerce ``p`` to component-major shape ``(dim, *batch)``.

    In one dimension a bare array of any shape is read as a batch of
    scalars.
    """
    p = np.asarray(p)
    if dim == 1 and (p.ndim == 0 or p.shape[0] != 1):
        p = p[None]
    if p.shape[0] != dim:
        raise ValueError(f"expected {dim} components, got array of shape {p.shape}")
    return p


class Handle:
    """Base class for functions of grouped variables.

    Parameters
    ----------
    groups : int
        Number of variable blocks (2 for symbols and weights on R^2d,
        3 for amplitudes).
    dim : int
        Block size ``d``.
    name : str
        Human readable provenance.
    meta : dict, optional
        Claimed class data, e.g. ``{"weight": w, "r": 1, "rho": 1}``.
    """

    def __init__(self, groups: int, dim: int, name: str = "", meta: dict | None = None):
        self.groups = groups
        self.dim = dim
        self.name = name
        self.meta = dict(meta or {})

    @property
    def nvars(self) -> int:
        return self.groups * self.dim

    def __call__(self, *groups):
        raise NotImplementedError

    def taylor(self, base: Sequence[np.ndarray], order: int) -> Jet:
        """Own Taylor expansion at flat numeric base points."""
        raise NotImplementedError

    def _check_groups(self, groups):
        if len(groups) != self.groups:
            raise ValueError(f"{self.name or type(self).__name__} takes {self.groups} "
                             f"variable groups, got {len(groups)}")
        for g in groups:
            if len(g) != self.dim:
                raise ValueError(f"expected {self.dim} components per group, got {len(g)}")

    def evaluate(self, *points) -> np.ndarray:
        """Values at points given as arrays of shape ``(dim, *batch)``."""
        pts = [as_points(p, self.dim) for p in points]
        pts = np.broadcast_arrays(*pts)
        return np.asarray(self(*[list(p) for p in pts]))

    def jet(self, *points, order: int) -> Jet:
        """Jet in all ``groups * dim`` variables at the given points."""
        pts = [as_points(p, self.dim) for p in points]
        pts = np.broadcast_arrays(*pts)
        groups = J.seed_groups([list(p) for p in pts], order)
        out = self(*groups)
        if not isinstance(out, Jet):
            out = Jet.constant(np.broadcast_to(out, pts[0].shape[1:]), self.nvars, order)
        return out

    def with_meta(self, **meta) -> "Handle":
        self.meta.update(meta)
        return self

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r}, groups={self.groups}, dim={self.dim})"


class FormulaHandle(Handle):
    """Handle defined by a generic closed-form expression.

    ``fn`` receives one list of ``dim`` components per group and must only
    use arithmetic and the functions of :mod:`sgfio.jets`.
    """

    def __init__(self, fn: Callable, groups: int, dim: int, name: str = "",
                 meta: dict | None = None):
        super().__init__(groups, dim, name, meta)
        self.fn = fn

    def __call__(self, *groups):
        self._check_groups(groups)
        return self.fn(*[list(g) for g in groups])

    def taylor(self, base, order):
        groups = J.seed_groups(_regroup(base, self.groups, self.dim), order)
        out = self.fn(*groups)
        if not isinstance(out, Jet):
            shape = np.broadcast_shapes(*[np.shape(b) for b in base])
            out = Jet.constant(np.broadcast_to(out, shape), self.nvars, order)
        return out


def _regroup(flat, groups, dim):
    return [list(flat[k * dim:(k + 1) * dim]) for k in range(groups)]


class DerivedHandle(Handle):
    """Handle whose jets come from :meth:`taylor` at numeric base points."""

    def __call__(self, *groups):
        self._check_groups(groups)
        flat = [c for g in groups for c in g]
        jet_args = [c for c in flat if isinstance(c, Jet)]
        if not jet_args:
            base = np.broadcast_arrays(*[np.asarray(c) for c in flat])
            return self.taylor(base, 0).value
        order = min(j.order for j in jet_args)
        nv = jet_args[0].nvars
        inner = [c.truncate(order) if isinstance(c, Jet) else Jet.constant(c, nv, order)
                 for c in flat]
        base = np.broadcast_arrays(*[np.real(i.value) for i in inner])
        own = self.taylor(base, order)
        return own.compose(inner)


class DerivativeHandle(DerivedHandle):
    """Partial derivative ``d^alpha`` of another handle (alpha over all variables)."""

    def __init__(self, base: Handle, alpha: Sequence[int], name: str = ""):
        alpha = tuple(alpha)
        if len(alpha) != base.nvars:
            raise ValueError("multi-index length must equal the number of variables")
        super().__init__(base.groups, base.dim, name or f"d{alpha} {base.name}")
        self.base = base
        self.alpha = alpha

    def taylor(self, base, order):
        return self.base.taylor(base, order + sum(self.alpha)).derivative(self.alpha)


def derivative(h: Handle, *alphas: Sequence[int]) -> Handle:
    """``d^alpha`` with one multi-index per variable group."""
    flat = tuple(a for al in alphas for a in al)
    if not any(flat):
        return h
    return DerivativeHandle(h, flat)


def unit(d: int, i: int) -> tuple:
    return tuple(1 if j == i else 0 for j in range(d))


def zero(d: int) -> tuple:
    return (0,) * d


def transpose(h: Handle, name: str | None = None) -> Handle:
    """Swap the two variable groups of a symbol: ``(x, xi) -> h(xi, x)``."""
    if h.groups != 2:
        raise ValueError("transpose needs a two-group handle")
    return FormulaHandle(lambda x, xi: h(xi, x), 2, h.dim,
                         name if name is not None else f"t[{h.name}]")


def conjugate(h: Handle) -> Handle:
    return FormulaHandle(lambda *g: J.conj(h(*g)), h.groups, h.dim, f"conj[{h.name}]")


def product(*hs: Handle, name: str = "") -> Handle:
    g, d = hs[0].groups, hs[0].dim

    def fn(*groups):
        acc = 1
        for h in hs:
            acc = acc * h(*groups)
        return acc

    return FormulaHandle(fn, g, d, name or "*".join(h.name for h in hs))


def scaled(h: Handle, c, name: str = "") -> Handle:
    return FormulaHandle(lambda *g: c * h(*g), h.groups, h.dim, name or f"{c}*{h.name}")


def total(hs: Sequence[Handle], name: str = "") -> Handle:
    g, d = hs[0].groups, hs[0].dim

    def fn(*groups):
        acc = 0
        for h in hs:
            acc = acc + h(*groups)
        return acc

    return FormulaHandle(fn, g, d, name or "+".join(h.name for h in hs))


def constant(value, groups: int, dim: int, name: str = "") -> Handle:
    return FormulaHandle(lambda *g: value, groups, dim, name or repr(value))
