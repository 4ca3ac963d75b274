"""Truncated multivariate Taylor arithmetic.

A :class:`Jet` stores the Taylor coefficients ``f_m = (d^m f)(z0) / m!`` of a
function of ``n`` real variables, for every multi-index ``m`` with
``|m| <= order``, at a whole batch of base points at once.  Coefficients are
laid out in graded-lexicographic order, so ``coef[0]`` is the value and
``coef[1 + i]`` is the first partial in variable ``i``.

Arithmetic, the elementary functions used by the presets and composition with
other jets are exact up to the truncation order; finite differences are never
used on the primary path.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Sequence

import mpmath
import numpy as np

# Number of scalar products handled per chunk in a jet product.  Bounds the
# temporary memory of the pair table without changing the summation order.
_CHUNK = 1 << 22


def _compositions(total: int, n: int):
    """Yield all n-tuples of non-negative integers summing to ``total``,
    lexicographically descending."""
    if n == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, n - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def multi_indices(n: int, order: int) -> tuple:
    """All multi-indices in ``n`` variables with ``|m| <= order``.

    The ordering is graded lexicographic: by total degree, then descending
    lexicographic within a degree.  Each index appears exactly once.
    """
    out = []
    for deg in range(order + 1):
        out.extend(_compositions(deg, n))
    return tuple(out)


def n_coefficients(n: int, order: int) -> int:
    return math.comb(n + order, order)


def factorial(alpha: Sequence[int]) -> int:
    return math.prod(math.factorial(a) for a in alpha)


class _Layout:
    """Index tables shared by all jets with the same (nvars, order)."""

    def __init__(self, n: int, order: int):
        self.n = n
        self.order = order
        self.monos = multi_indices(n, order)
        self.index = {m: k for k, m in enumerate(self.monos)}
        self.size = len(self.monos)
        self.degree = np.array([sum(m) for m in self.monos])
        # first slot of each degree block
        self.block = [n_coefficients(n, k - 1) if k > 0 else 0 for k in range(order + 2)]
        pairs = []
        for a, ma in enumerate(self.monos):
            da = sum(ma)
            for b, mb in enumerate(self.monos):
                if da + sum(mb) > order:
                    continue
                c = self.index[tuple(i + j for i, j in zip(ma, mb))]
                pairs.append((c, a, b))
        pairs.sort()
        arr = np.array(pairs, dtype=np.intp)
        self.pair_out = arr[:, 0]
        self.pair_a = arr[:, 1]
        self.pair_b = arr[:, 2]
        # every output slot has at least the pair (slot, 0)
        self.starts = np.searchsorted(self.pair_out, np.arange(self.size))
        # predecessor table for building monomial products: mono = pred + e_var
        self.pred = [None]
        for m in self.monos[1:]:
            var = next(i for i, v in enumerate(m) if v > 0)
            prev = list(m)
            prev[var] -= 1
            self.pred.append((self.index[tuple(prev)], var))


@lru_cache(maxsize=None)
def layout(n: int, order: int) -> _Layout:
    return _Layout(n, order)


def _mul_coef(lay: _Layout, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = np.broadcast_arrays(a, b)
    batch = a.shape[1:]
    a2 = a.reshape(lay.size, -1)
    b2 = b.reshape(lay.size, -1)
    nb = a2.shape[1]
    out = np.empty((lay.size, nb), dtype=np.result_type(a2, b2))
    if nb == 0:
        return out.reshape((lay.size,) + batch)
    step = max(1, _CHUNK // len(lay.pair_out))
    for s in range(0, nb, step):
        prod = a2[lay.pair_a, s:s + step] * b2[lay.pair_b, s:s + step]
        out[:, s:s + step] = np.add.reduceat(prod, lay.starts, axis=0)
    return out.reshape((lay.size,) + batch)


class Jet:
    """Batch of truncated Taylor expansions in ``nvars`` variables.

    Parameters
    ----------
    coef : ndarray, shape (ncoef, *batch)
        Taylor coefficients in graded-lexicographic order.
    nvars : int
    order : int
    """

    __array_priority__ = 1000

    def __init__(self, coef, nvars: int, order: int):
        coef = np.asarray(coef)
        lay = layout(nvars, order)
        if coef.shape[0] != lay.size:
            raise ValueError(f"expected {lay.size} coefficients, got {coef.shape[0]}")
        self.coef = coef
        self.nvars = nvars
        self.order = order

    # -- construction -------------------------------------------------
    @classmethod
    def variables(cls, points: Sequence, order: int) -> list["Jet"]:
        """Seed one jet per coordinate of ``points`` (identity map)."""
        n = len(points)
        pts = np.broadcast_arrays(*[np.asarray(p) for p in points])
        lay = layout(n, order)
        out = []
        for i, p in enumerate(pts):
            coef = np.zeros((lay.size,) + p.shape, dtype=np.result_type(p, float))
            coef[0] = p
            if order >= 1:
                coef[1 + i] = 1.0
            out.append(cls(coef, n, order))
        return out

    @classmethod
    def constant(cls, value, nvars: int, order: int) -> "Jet":
        value = np.asarray(value)
        coef = np.zeros((n_coefficients(nvars, order),) + value.shape,
                        dtype=np.result_type(value, float))
        coef[0] = value
        return cls(coef, nvars, order)

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.nvars != self.nvars:
                raise ValueError("jets over different variable sets")
            return other
        return Jet.constant(other, self.nvars, self.order)

    # -- basic properties ---------------------------------------------
    @property
    def layout(self) -> _Layout:
        return layout(self.nvars, self.order)

    @property
    def value(self) -> np.ndarray:
        return self.coef[0]

    @property
    def batch_shape(self) -> tuple:
        return self.coef.shape[1:]

    def __repr__(self):
        return f"Jet(nvars={self.nvars}, order={self.order}, batch={self.batch_shape})"

    def coefficient(self, m: Sequence[int]) -> np.ndarray:
        """Taylor coefficient of the monomial ``z^m``."""
        m = tuple(m)
        if sum(m) > self.order:
            raise ValueError(f"multi-index {m} exceeds jet order {self.order}")
        return self.coef[self.layout.index[m]]

    def partial(self, m: Sequence[int]) -> np.ndarray:
        """Value of the partial derivative ``d^m f`` at the base points."""
        return self.coefficient(m) * factorial(m)

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError("cannot raise the order of a jet")
        if order == self.order:
            return self
        return Jet(self.coef[:n_coefficients(self.nvars, order)], self.nvars, order)

    def derivative(self, alpha: Sequence[int]) -> "Jet":
        """Jet of ``d^alpha f``, of order ``order - |alpha|``."""
        alpha = tuple(alpha)
        k = sum(alpha)
        if k > self.order:
            raise ValueError(f"derivative {alpha} exceeds jet order {self.order}")
        if k == 0:
            return self
        src = self.layout
        dst = layout(self.nvars, self.order - k)
        idx = np.empty(dst.size, dtype=np.intp)
        scale = np.empty(dst.size)
        for j, m in enumerate(dst.monos):
            full = tuple(a + b for a, b in zip(m, alpha))
            idx[j] = src.index[full]
            scale[j] = factorial(full) / factorial(m)
        scale = scale.reshape((-1,) + (1,) * len(self.batch_shape))
        return Jet(self.coef[idx] * scale, self.nvars, self.order - k)

    def conj(self) -> "Jet":
        return Jet(np.conj(self.coef), self.nvars, self.order)

    conjugate = conj

    @property
    def real(self) -> "Jet":
        return Jet(self.coef.real, self.nvars, self.order)

    @property
    def imag(self) -> "Jet":
        return Jet(self.coef.imag, self.nvars, self.order)

    def _same_order(self, other: "Jet") -> tuple["Jet", "Jet"]:
        k = min(self.order, other.order)
        return self.truncate(k), other.truncate(k)

    # -- arithmetic ---------------------------------------------------
    def __neg__(self):
        return Jet(-self.coef, self.nvars, self.order)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b = self._same_order(self._lift(other))
            return Jet(a.coef + b.coef, a.nvars, a.order)
        other = np.asarray(other)
        shape = np.broadcast_shapes(self.batch_shape, other.shape)
        coef = np.array(np.broadcast_to(self.coef, self.coef.shape[:1] + shape),
                        dtype=np.result_type(self.coef, other))
        coef[0] += other
        return Jet(coef, self.nvars, self.order)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self._same_order(self._lift(other))
            return Jet(_mul_coef(a.layout, a.coef, b.coef), a.nvars, a.order)
        other = np.asarray(other)
        return Jet(self.coef * other[None, ...], self.nvars, self.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        other = np.asarray(other)
        return Jet(self.coef / other[None, ...], self.nvars, self.order)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, p):
        return power(self, p)

    # -- series -------------------------------------------------------
    def apply_series(self, coeffs: Sequence) -> "Jet":
        """Compose with a univariate series ``sum_k coeffs[k] (u - u0)^k``.

        ``coeffs[k]`` are arrays broadcastable to the batch shape; only the
        first ``order + 1`` entries are used.
        """
        K = self.order
        delta_coef = self.coef.copy()
        delta_coef[0] = 0
        delta = Jet(delta_coef, self.nvars, K)
        coeffs = list(coeffs)[:K + 1]
        result = Jet.constant(np.asarray(coeffs[-1]), self.nvars, K)
        for c in reversed(coeffs[:-1]):
            result = result * delta + np.asarray(c)
        if result.batch_shape != self.batch_shape:
            shape = np.broadcast_shapes(result.batch_shape, self.batch_shape)
            result = Jet(np.broadcast_to(result.coef, (result.coef.shape[0],) + shape).copy(),
                         self.nvars, K)
        return result

    def compose(self, inner: Sequence["Jet"]) -> "Jet":
        """Substitute jets ``inner`` (one per variable of ``self``).

        ``self`` is read as a polynomial in ``z - z0`` where ``z0`` are the
        base values of ``inner``; the caller is responsible for expanding
        ``self`` at exactly those values.  The result has order
        ``min(self.order, inner orders)``.
        """
        if len(inner) != self.nvars:
            raise ValueError(f"need {self.nvars} inner jets, got {len(inner)}")
        n = inner[0].nvars
        K = min([self.order] + [g.order for g in inner])
        deltas = []
        for g in inner:
            g = g.truncate(K)
            c = g.coef.copy()
            c[0] = 0
            deltas.append(Jet(c, n, K))
        lay = layout(self.nvars, K)
        dtype = np.result_type(self.coef, *[g.coef for g in deltas])
        shape = np.broadcast_shapes(self.batch_shape, *[g.batch_shape for g in deltas])
        out = np.zeros((n_coefficients(n, K),) + shape, dtype=dtype)
        out[0] = self.coef[0]
        prods: list = [None] * lay.size
        for j in range(1, lay.size):
            p, var = lay.pred[j]
            prods[j] = deltas[var] if p == 0 else prods[p] * deltas[var]
            out += prods[j].coef * self.coef[j][None, ...]
        return Jet(out, n, K)


# ---------------------------------------------------------------------------
# elementary functions, generic over ndarray, mpmath scalars and Jet

def _is_mp(u) -> bool:
    return isinstance(u, (mpmath.mpf, mpmath.mpc))


def exp(u):
    if isinstance(u, Jet):
        e = np.exp(u.value)
        return u.apply_series([e / math.factorial(k) for k in range(u.order + 1)])
    if _is_mp(u):
        return mpmath.exp(u)
    return np.exp(u)


def log(u):
    if isinstance(u, Jet):
        u0 = u.value
        cs = [np.log(u0)]
        for k in range(1, u.order + 1):
            cs.append((-1) ** (k + 1) / (k * u0 ** k))
        return u.apply_series(cs)
    if _is_mp(u):
        return mpmath.log(u)
    return np.log(u)


def reciprocal(u):
    if isinstance(u, Jet):
        u0 = u.value
        inv = 1.0 / u0
        cs = [inv]
        for _ in range(u.order):
            cs.append(-cs[-1] * inv)
        return u.apply_series(cs)
    return 1 / u


def power(u, p):
    """``u**p``; integer ``p >= 0`` never divides by the base value."""
    if isinstance(u, Jet):
        if float(p).is_integer() and p >= 0:
            p = int(p)
            result = Jet.constant(np.ones(u.batch_shape), u.nvars, u.order)
            base = u
            while p:
                if p & 1:
                    result = result * base
                p >>= 1
                if p:
                    base = base * base
            return result
        u0 = u.value
        cs = [u0 ** p]
        inv = 1.0 / u0
        for k in range(1, u.order + 1):
            cs.append(cs[-1] * (p - k + 1) / k * inv)
        return u.apply_series(cs)
    if _is_mp(u):
        return u ** p
    return np.power(u, p)


def sqrt(u):
    if isinstance(u, Jet):
        return power(u, 0.5)
    if _is_mp(u):
        return mpmath.sqrt(u)
    return np.sqrt(u)


def sin(u):
    if isinstance(u, Jet):
        u0 = u.value
        cs = [np.sin(u0 + k * np.pi / 2) / math.factorial(k) for k in range(u.order + 1)]
        return u.apply_series(cs)
    if _is_mp(u):
        return mpmath.sin(u)
    return np.sin(u)


def cos(u):
    if isinstance(u, Jet):
        u0 = u.value
        cs = [np.cos(u0 + k * np.pi / 2) / math.factorial(k) for k in range(u.order + 1)]
        return u.apply_series(cs)
    if _is_mp(u):
        return mpmath.cos(u)
    return np.cos(u)


def conj(u):
    if isinstance(u, Jet):
        return u.conj()
    if _is_mp(u):
        return mpmath.conj(u)
    return np.conj(u)


def flat_h(u):
    """``h(s) = exp(-1/s)`` for ``s > 0`` and ``0`` otherwise."""
    if isinstance(u, Jet):
        u0 = np.asarray(u.value).real
        pos = u0 > 0
        safe = np.where(pos, u0, 1.0)
        shifted = u.real + (safe - u0)  # same derivatives, safe base point
        out = exp(-reciprocal(shifted))
        return Jet(out.coef * pos, u.nvars, u.order)
    if _is_mp(u):
        return mpmath.exp(-1 / u) if u > 0 else mpmath.mpf(0)
    u = np.asarray(u, dtype=float)
    pos = u > 0
    return np.where(pos, np.exp(-1.0 / np.where(pos, u, 1.0)), 0.0)


def smooth_step(s, lo: float, hi: float):
    """Smooth step: 1 for ``s`` on the ``lo`` side, 0 on the ``hi`` side.

    Non-increasing when ``lo < hi``; passing ``lo > hi`` gives the reversed step.

    Built from ``h`` as ``h(1-t) / (h(1-t) + h(t))`` with
    ``t = (s - lo) / (hi - lo)``; the denominator never vanishes.
    """
    t = (s - lo) * (1.0 / (hi - lo))
    a = flat_h(1 - t)
    b = flat_h(t)
    out = a / (a + b)
    if isinstance(out, Jet):
        t0 = np.asarray(t.value).real
        # near the 1-plateau take derivatives from the small complement b/(a+b)
        comp = b / (a + b)
        coef = np.where(t0 < 0.5, -comp.coef, out.coef)
        coef[0] = out.coef[0]
        # plateaus are exactly constant; drop quotient roundoff there
        flat = (t0 <= 0) | (t0 >= 1)
        coef[1:] = np.where(flat, 0, coef[1:])
        coef[0] = np.where(t0 <= 0, 1, np.where(t0 >= 1, 0, coef[0]))
        out = Jet(coef, out.nvars, out.order)
    return out


def japanese(v: Sequence):
    """``<v> = (1 + |v|^2)^(1/2)`` for a sequence of components."""
    acc = 1
    for c in v:
        acc = acc + c * c
    return sqrt(acc)


def dot(u: Sequence, v: Sequence):
    acc = 0
    for a, b in zip(u, v):
        acc = acc + a * b
    return acc


def value_of(u):
    """Base value of a jet, or the argument itself."""
    return u.value if isinstance(u, Jet) else u


def seed_groups(groups: Sequence, order: int) -> list[list[Jet]]:
    """Seed jets for grouped coordinates, e.g. ``(x, xi)`` with ``d`` entries each."""
    flat = [c for g in groups for c in g]
    jets = Jet.variables(flat, order)
    out, k = [], 0
    for g in groups:
        out.append(jets[k:k + len(g)])
        k += len(g)
    return out


def det(matrix: Sequence[Sequence]):
    """Determinant of a small square matrix of scalars, arrays or jets."""
    n = len(matrix)
    if n == 1:
        return matrix[0][0]
    if n == 2:
        return matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0]
    acc = 0
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in matrix[1:]]
        term = matrix[0][j] * det(minor)
        acc = acc + term if j % 2 == 0 else acc - term
    return acc


def all_pairs(d: int, order: int):
    """All ``(alpha, beta)`` in ``N^d x N^d`` with ``|alpha| + |beta| <= order``."""
    for m in multi_indices(2 * d, order):
        yield tuple(m[:d]), tuple(m[d:])


def split_index(m: Sequence[int], sizes: Sequence[int]) -> list[tuple]:
    out, k = [], 0
    for s in sizes:
        out.append(tuple(m[k:k + s]))
        k += s
    return out


__all__ = [
    "Jet", "multi_indices", "n_coefficients", "factorial", "layout",
    "exp", "log", "reciprocal", "power", "sqrt", "sin", "cos", "conj",
    "flat_h", "smooth_step", "japanese", "dot", "value_of", "seed_groups",
    "det", "all_pairs", "split_index",
]
