"""Uniform box grids, the discrete unitary Fourier transform and test inputs.

The box is ``[-L, L)^d`` with ``N`` points per axis, spacing ``h = 2L/N``, and
dual frequencies ``xi_k = pi k / L`` for ``k`` in ``[-N/2, N/2)``.  Since
``h * (pi/L) = 2 pi / N`` the discrete transform below is exactly unitary up
to the ``h^d`` and ``(pi/L)^d`` quadrature weights, so inversion and Parseval
hold to rounding error.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special

SUPPORTED_DIMS = (1, 2, 3)


class GridError(ValueError):
    """Invalid grid parameters, mismatched grids or violated sampling margins."""


@dataclass(frozen=True)
class Grid:
    """Uniform grid on ``[-L, L)^d``.

    Attributes
    ----------
    dim : int
    points_per_axis : int
        Even number ``N`` of samples per axis.
    half_width : float
        ``L``.
    """

    dim: int
    points_per_axis: int
    half_width: float

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def freq_spacing(self) -> float:
        return math.pi / self.half_width

    @property
    def nyquist(self) -> float:
        return math.pi * self.points_per_axis / (2.0 * self.half_width)

    @property
    def size(self) -> int:
        return self.points_per_axis ** self.dim

    @property
    def shape(self) -> tuple:
        return (self.points_per_axis,) * self.dim

    @property
    def axis(self) -> np.ndarray:
        N = self.points_per_axis
        return -self.half_width + self.spacing * np.arange(N)

    @property
    def freq_axis(self) -> np.ndarray:
        N = self.points_per_axis
        return self.freq_spacing * np.arange(-N // 2, N // 2)

    def _mesh(self, ax) -> np.ndarray:
        grids = np.meshgrid(*([ax] * self.dim), indexing="ij")
        return np.stack([g.ravel() for g in grids])

    def coords(self) -> np.ndarray:
        """Spatial points, shape ``(d, N^d)`` in row-major order."""
        return self._mesh(self.axis)

    def freqs(self) -> np.ndarray:
        """Frequency points, shape ``(d, N^d)`` in row-major order."""
        return self._mesh(self.freq_axis)

    def index_to_coord(self, index) -> np.ndarray:
        idx = np.asarray(index)
        return -self.half_width + self.spacing * idx

    def coord_to_index(self, coord) -> np.ndarray:
        c = np.asarray(coord, dtype=float)
        return np.rint((c + self.half_width) / self.spacing).astype(int)

    def freq_index_to_coord(self, k) -> np.ndarray:
        return self.freq_spacing * np.asarray(k)

    def freq_coord_to_index(self, xi) -> np.ndarray:
        return np.rint(np.asarray(xi, dtype=float) / self.freq_spacing).astype(int)

    def weight(self, domain: str = "space") -> float:
        h = self.spacing if domain == "space" else self.freq_spacing
        return h ** self.dim

    def describe(self) -> dict:
        return {"dim": self.dim, "points_per_axis": self.points_per_axis,
                "half_width": self.half_width}


def make_grid(dim: int, points_per_axis: int, half_width: float) -> Grid:
    """Validated :class:`Grid` constructor."""
    if dim not in SUPPORTED_DIMS:
        raise GridError(f"dim must be one of {SUPPORTED_DIMS}, got {dim}")
    if int(points_per_axis) != points_per_axis or points_per_axis % 2:
        raise GridError(f"points_per_axis must be an even integer, got {points_per_axis}")
    if points_per_axis < 8:
        raise GridError(f"points_per_axis must be at least 8, got {points_per_axis}")
    if not (half_width > 0 and math.isfinite(half_width)):
        raise GridError(f"half_width must be positive and finite, got {half_width}")
    return Grid(int(dim), int(points_per_axis), float(half_width))


@dataclass(frozen=True)
class GridFunction:
    """Complex samples on a grid, row-major; ``domain`` is space or frequency."""

    grid: Grid
    values: np.ndarray = field(repr=False)
    domain: str = "space"

    def __post_init__(self):
        v = np.array(self.values, dtype=complex).ravel()
        if v.size != self.grid.size:
            raise GridError(f"expected {self.grid.size} values, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise GridError("grid function has non-finite values")
        if self.domain not in ("space", "frequency"):
            raise GridError(f"unknown domain {self.domain!r}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def norm(self) -> float:
        return float(np.sqrt(self.grid.weight(self.domain)) * np.linalg.norm(self.values))

    def reshaped(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    def points(self) -> np.ndarray:
        return self.grid.coords() if self.domain == "space" else self.grid.freqs()

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.grid, values, self.domain)

    def __add__(self, other: "GridFunction"):
        _check_same(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "GridFunction"):
        _check_same(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c):
        return self.with_values(self.values * c)

    __rmul__ = __mul__


def _check_same(f: GridFunction, g: GridFunction):
    if f.grid != g.grid:
        raise GridError(f"grid mismatch: {f.grid} vs {g.grid}")
    if f.domain != g.domain:
        raise GridError(f"domain mismatch: {f.domain} vs {g.domain}")


def _sign(grid: Grid) -> np.ndarray:
    """``(-1)^(k_1 + ... + k_d)`` on the frequency index grid."""
    N = grid.points_per_axis
    s = (-1.0) ** np.arange(-N // 2, N // 2)
    out = s
    for _ in range(grid.dim - 1):
        out = np.multiply.outer(out, s)
    return out


def fourier(f: GridFunction, direction: str = "forward") -> GridFunction:
    """Discrete unitary Fourier transform.

    ``forward`` approximates ``(2 pi)^(-d/2) int f(x) exp(-i x.xi) dx`` at the
    frequency grid; ``inverse`` approximates the inverse integral at the
    spatial grid.
    """
    g = f.grid
    d = g.dim
    axes = tuple(range(d))
    if direction == "forward":
        if f.domain != "space":
            raise GridError("forward transform expects a space-domain function")
        arr = np.fft.fftshift(np.fft.fftn(f.reshaped(), axes=axes), axes=axes)
        arr = arr * _sign(g) * (g.spacing / math.sqrt(2 * math.pi)) ** d
        return GridFunction(g, arr.ravel(), "frequency")
    if direction == "inverse":
        if f.domain != "frequency":
            raise GridError("inverse transform expects a frequency-domain function")
        arr = f.reshaped() * _sign(g)
        arr = np.fft.ifftn(np.fft.ifftshift(arr, axes=axes), axes=axes)
        arr = arr * (g.points_per_axis * g.freq_spacing / math.sqrt(2 * math.pi)) ** d
        return GridFunction(g, arr.ravel(), "space")
    raise GridError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def inner_product(f: GridFunction, g: GridFunction) -> complex:
    """Riemann-sum pairing ``sum f conj(g) h^d``."""
    _check_same(f, g)
    return complex(np.vdot(g.values, f.values) * f.grid.weight(f.domain))


def from_callable(grid: Grid, fn, domain: str = "space") -> GridFunction:
    """Sample ``fn(points)`` with points of shape ``(d, N^d)``."""
    pts = grid.coords() if domain == "space" else grid.freqs()
    return GridFunction(grid, np.broadcast_to(fn(pts), (grid.size,)), domain)


# ---------------------------------------------------------------------------
# test functions

TEST_FUNCTION_KINDS = ("gaussian", "hermite", "modulated_gaussian")

def _vector(v, d, name):
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.size == 1:
        arr = np.full(d, float(arr[0]))
    if arr.size != d:
        raise GridError(f"{name} must have {d} components")
    return arr


def test_function(grid: Grid, kind: str, **params) -> GridFunction:
    """Normalized Schwartz samples.

    Parameters
    ----------
    grid : Grid
    kind : {'gaussian', 'hermite', 'modulated_gaussian'}
    width : float, default 1
        Gaussian envelope ``exp(-|x - center|^2 / (2 width^2))``.
    center : float or sequence, default 0
    index : int or sequence, default 0
        Hermite degree per axis (``hermite`` only).
    frequency : float or sequence, default 0
        Carrier ``exp(i frequency . x)`` (``modulated_gaussian`` only).

    Raises
    ------
    GridError
        When the modulation frequency is at or above ``0.8 * nyquist``
        (aliasing margin) or the envelope exceeds ``1e-14`` of its peak at the
        box boundary (truncation margin).
    """
    if kind not in TEST_FUNCTION_KINDS:
        raise GridError(f"unknown test function kind {kind!r}; expected one of "
                        f"{TEST_FUNCTION_KINDS}")
    d = grid.dim
    width = float(params.get("width", 1.0))
    if width <= 0:
        raise GridError("width must be positive")
    center = _vector(params.get("center", 0.0), d, "center")
    freq = _vector(params.get("frequency", 0.0), d, "frequency")
    index = np.atleast_1d(np.asarray(params.get("index", 0), dtype=int))
    if index.size == 1:
        index = np.full(d, int(index[0]))

    if kind == "modulated_gaussian":
        top = np.max(np.abs(freq))
        if top >= 0.8 * grid.nyquist:
            raise GridError(f"aliasing margin violated: modulation frequency {top:.4g} "
                            f">= 0.8 * nyquist = {0.8 * grid.nyquist:.4g}")
    # distance from the envelope center to the nearest box face
    gap = np.min(grid.half_width - np.abs(center))
    degree = int(index.max()) if kind == "hermite" else 0
    scaled_gap = max(gap, 0.0) / width
    boundary = np.exp(-scaled_gap ** 2 / 2) * (1 + scaled_gap) ** degree
    if gap <= 0 or boundary >= 1e-14:
        raise GridError(f"truncation margin violated: envelope at the box boundary is "
                        f"{boundary:.3g} of its peak (limit 1e-14)")

    x = grid.coords()
    z = (x - center[:, None]) / width
    vals = np.exp(-0.5 * np.sum(z * z, axis=0)).astype(complex)
    if kind == "hermite":
        for j in range(d):
            vals = vals * special.eval_hermite(int(index[j]), z[j])
    if kind == "modulated_gaussian":
        vals = vals * np.exp(1j * (freq @ x))
    f = GridFunction(grid, vals)
    return f * (1.0 / f.norm())


# ---------------------------------------------------------------------------
# serialization

_HEADER = struct.Struct("<IId")


def save_binary(f: GridFunction, path) -> None:
    """Write the 16-byte header ``(d, N, L)`` then little-endian (re, im) pairs."""
    g = f.grid
    data = np.empty((g.size, 2), dtype="<f8")
    data[:, 0] = f.values.real
    data[:, 1] = f.values.imag
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(g.dim, g.points_per_axis, g.half_width))
        fh.write(data.tobytes())


def load_binary(path, domain: str = "space") -> GridFunction:
    raw = Path(path).read_bytes()
    d, N, L = _HEADER.unpack_from(raw, 0)
    grid = make_grid(d, N, L)
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if data.size != 2 * grid.size:
        raise GridError(f"{path}: expected {grid.size} samples, found {data.size // 2}")
    data = data.reshape(-1, 2)
    return GridFunction(grid, data[:, 0] + 1j * data[:, 1], domain)


def save_csv(f: GridFunction, path) -> None:
    """CSV with index columns, coordinate columns, re, im."""
    g = f.grid
    d = g.dim
    idx = np.unravel_index(np.arange(g.size), g.shape)
    pts = f.points()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"i{j}" for j in range(d)] + [f"x{j}" for j in range(d)] + ["re", "im"])
        for n in range(g.size):
            w.writerow([int(idx[j][n]) for j in range(d)]
                       + [repr(float(pts[j, n])) for j in range(d)]
                       + [repr(float(f.values[n].real)), repr(float(f.values[n].imag))])
