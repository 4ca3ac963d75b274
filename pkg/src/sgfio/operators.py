"""Application of pseudo-differential and Fourier integral operators on grids.

All operators are discretized with the same Riemann sums as the grid
transform, so that the discrete type I and type II operators are exact
adjoints of each other and a type I operator with the identity phase is
exactly the Kohn-Nirenberg quantization of its symbol.
"""

from __future__ import annotations

import math
import threading
import warnings
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
import numpy as np

from . import jets as J
from .grid import Grid, GridError, GridFunction, fourier, inner_product, make_grid
from .handles import (DERIVATIVE_CAP, DerivativeHandle, FormulaHandle, Handle, check_cap,
                      unit, zero)
from .phases import PhaseHandle, identity_phase

TAIL_TOL = 1e-10
ROW_CHUNK = 32
KINDS = ("pdo_t", "pdo_amplitude", "fio_type1", "fio_type2", "chain")


class TailMassWarning(UserWarning):
    """Integrand does not decay to the tail tolerance at the grid boundary."""


class TailMassError(ValueError):
    """Kernel quadrature needs an amplitude that decays on the frequency grid."""


@dataclass(eq=False)
class OperatorSpec:
    """Declarative description of an operator.

    Attributes
    ----------
    kind : {'pdo_t', 'pdo_amplitude', 'fio_type1', 'fio_type2', 'chain'}
    symbol : Handle
        Symbol on R^2d, or amplitude on R^3d for ``pdo_amplitude``.
    phase : PhaseHandle, optional
    t : float
        Quantization parameter of ``pdo_t``.
    parts : list of OperatorSpec
        Factors of a ``chain``, applied right to left.
    """

    kind: str
    symbol: Handle | None = None
    phase: PhaseHandle | None = None
    t: float = 0.0
    parts: list = field(default_factory=list)
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if self.kind in ("fio_type1", "fio_type2") and self.phase is None:
            raise ValueError(f"{self.kind} needs a phase")
        if self.kind == "pdo_amplitude" and self.symbol.groups != 3:
            raise ValueError("pdo_amplitude needs a three-group amplitude")
        if self.kind in ("pdo_t", "fio_type1", "fio_type2") and self.symbol.groups != 2:
            raise ValueError(f"{self.kind} needs a two-group symbol")
        if self.kind == "chain" and not self.parts:
            raise ValueError("a chain needs at least one factor")

    @property
    def dim(self) -> int:
        if self.kind == "chain":
            return self.parts[0].dim
        return self.symbol.dim

    def describe(self) -> dict:
        if self.kind == "chain":
            return {"kind": "chain", "parts": [p.describe() for p in self.parts]}
        out = {"kind": self.kind, "symbol": self.symbol.name}
        if self.phase is not None:
            out["phase"] = self.phase.name
        if self.kind == "pdo_t":
            out["t"] = self.t
        return out


def pdo(a: Handle, t: float = 0.0, name: str = "") -> OperatorSpec:
    return OperatorSpec("pdo_t", a, t=t, name=name or f"Op_{t:g}({a.name})")


def pdo_amplitude(c: Handle, name: str = "") -> OperatorSpec:
    return OperatorSpec("pdo_amplitude", c, name=name or f"Op({c.name})")


def fio1(phase: PhaseHandle, a: Handle, name: str = "") -> OperatorSpec:
    return OperatorSpec("fio_type1", a, phase, name=name or f"Op_{phase.name}({a.name})")


def fio2(phase: PhaseHandle, b: Handle, name: str = "") -> OperatorSpec:
    return OperatorSpec("fio_type2", b, phase, name=name or f"Op*_{phase.name}({b.name})")


def chain(*parts: OperatorSpec) -> OperatorSpec:
    """Product ``parts[0] o parts[1] o ...`` (rightmost applied first)."""
    return OperatorSpec("chain", parts=list(parts), name=" o ".join(p.name for p in parts))


def identity_operator(dim: int = 1) -> OperatorSpec:
    one = FormulaHandle(lambda x, xi: 1.0, 2, dim, "one")
    return fio1(identity_phase(dim), one, "Id")


def scaled(op: OperatorSpec, c: complex) -> OperatorSpec:
    """``c * op`` by scaling the symbol (of the first factor for chains)."""
    if op.kind == "chain":
        return chain(scaled(op.parts[0], c), *op.parts[1:])
    if op.kind == "fio_type2":
        c = np.conj(c)  # the type II amplitude enters conjugated
    s = FormulaHandle(lambda *g: c * op.symbol(*g), op.symbol.groups, op.symbol.dim,
                      f"{c}*{op.symbol.name}")
    return OperatorSpec(op.kind, s, op.phase, op.t, name=f"{c}*{op.name}")


def adjoint(op: OperatorSpec) -> OperatorSpec:
    """Formal L^2 adjoint, again as a spec."""
    if op.kind == "fio_type1":
        return fio2(op.phase, op.symbol, f"({op.name})*")
    if op.kind == "fio_type2":
        return fio1(op.phase, op.symbol, f"({op.name})*")
    if op.kind == "pdo_t":
        a = op.symbol
        return pdo(FormulaHandle(lambda x, xi: J.conj(a(x, xi)), 2, a.dim, f"conj[{a.name}]"),
                   1.0 - op.t, f"({op.name})*")
    if op.kind == "pdo_amplitude":
        c = op.symbol
        return pdo_amplitude(FormulaHandle(lambda x, y, xi: J.conj(c(y, x, xi)), 3, c.dim,
                                           f"*[{c.name}]"), f"({op.name})*")
    return chain(*[adjoint(p) for p in reversed(op.parts)])


# ---------------------------------------------------------------------------
# quadrature cores

def _rows(n: int) -> list[slice]:
    return [slice(s, min(s + ROW_CHUNK, n)) for s in range(0, n, ROW_CHUNK)]


def _run(chunks, fn, threads: int):
    if threads <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, chunks))


def _boundary_mask(grid: Grid) -> np.ndarray:
    """Grid points on a face of the index box."""
    N = grid.points_per_axis
    idx = np.unravel_index(np.arange(grid.size), grid.shape)
    m = np.zeros(grid.size, dtype=bool)
    for ax in idx:
        m |= (ax == 0) | (ax == N - 1)
    return m


def _type1_matrix_rows(phase, a, P_out, P_in, rows):
    """``exp(i phi(out, in)) a(out, in)`` for a block of output rows."""
    X = P_out[:, rows, None]
    Y = P_in[:, None, :]
    ph = np.real(phase.evaluate(X, Y))
    amp = np.broadcast_to(a.evaluate(X, Y), ph.shape)
    return np.exp(1j * ph) * amp


_local = threading.local()


@contextmanager
def recording_tail_warnings():
    """Collect the tail-mass messages raised in the current thread.

    Unlike ``warnings.catch_warnings`` this is safe when several experiments
    run concurrently; the warnings themselves are still emitted.

    Yields
    ------
    list of str
    """
    prev = getattr(_local, "log", None)
    _local.log = log = []
    try:
        yield log
    finally:
        _local.log = prev


def _check_tail(mag: np.ndarray, grid: Grid, tol: float, what: str, error: bool = False):
    """``mag`` has shape ``(rows, N^d)`` over the integration grid."""
    top = float(np.max(mag)) if mag.size else 0.0
    if top == 0.0:
        return 0.0
    edge = float(np.max(mag[:, _boundary_mask(grid)]))
    ratio = edge / top
    if ratio > tol:
        msg = (f"{what}: integrand at the grid boundary is {ratio:.3g} of its maximum "
               f"(tolerance {tol:g})")
        if error:
            raise TailMassError(msg)
        log = getattr(_local, "log", None)
        if log is not None:
            log.append(msg)
        warnings.warn(msg, TailMassWarning, stacklevel=3)
    return ratio


def _type1_core(phase, a, grid: Grid, P_out, P_in, vals, in_weight, threads, tail_tol,
                what, cache=None, cache_key=None):
    """``sum_in exp(i phi(out, in)) a(out, in) vals(in) * in_weight`` per output row."""
    n_out = P_out.shape[1]
    chunks = _rows(n_out)
    mat = None if cache is None else cache.get(cache_key)

    def block(rows):
        E = mat[rows] if mat is not None else _type1_matrix_rows(phase, a, P_out, P_in, rows)
        prod = E * vals[None, :]
        return (prod.sum(axis=1) * in_weight, np.abs(prod))

    parts = _run(chunks, block, threads)
    out = np.concatenate([p[0] for p in parts])
    mag = np.concatenate([p[1] for p in parts])
    _check_tail(mag, grid, tail_tol, what)
    return out


def _core_view(op: OperatorSpec):
    """``('I' | 'II', phase, amplitude)`` for specs served by the type I core, else None.

    ``Op_0(a)`` is the type I operator of the identity phase and ``Op_1(a)``
    the type II operator of the identity phase with amplitude ``conj(a)``.
    """
    if op.kind == "fio_type1":
        return "I", op.phase, op.symbol
    if op.kind == "fio_type2":
        return "II", op.phase, op.symbol
    if op.kind == "pdo_t" and op.symbol.groups == 2 and op.t in (0.0, 1.0):
        if op.t == 0.0:
            return "I", identity_phase(op.dim), op.symbol
        a = op.symbol
        return "II", identity_phase(op.dim), FormulaHandle(lambda y, xi: J.conj(a(y, xi)), 2,
                                                           op.dim, f"conj({a.name})")
    return None


def _core_inputs(view, grid: Grid):
    kind, phase, a = view
    if kind == "I":
        return grid.coords(), grid.freqs(), phase, a
    neg = FormulaHandle(lambda xi, y: -phase(y, xi), 2, grid.dim)
    bstar = FormulaHandle(lambda xi, y: J.conj(a(y, xi)), 2, grid.dim)
    return grid.freqs(), grid.coords(), neg, bstar


def assemble(op: OperatorSpec, grid: Grid, threads: int = 1) -> np.ndarray:
    """Kernel matrix ``E`` of a spec served by the type I core, cached per grid."""
    key = ("E", grid)
    if key not in op._cache:
        view = _core_view(op)
        if view is None:
            raise ValueError("assemble supports type I, type II and Op_0 / Op_1 specs")
        P_out, P_in, phase, a = _core_inputs(view, grid)
        blocks = _run(_rows(P_out.shape[1]),
                      lambda rows: _type1_matrix_rows(phase, a, P_out, P_in, rows), threads)
        op._cache[key] = np.concatenate(blocks)
    return op._cache[key]


def _pdo_double(op: OperatorSpec, u: GridFunction, threads: int, tail_tol: float):
    """Double quadrature over ``(y, xi)`` for Op_t and amplitude operators."""
    g = u.grid
    X, XI = g.coords(), g.freqs()
    d = g.dim
    w = g.weight("space") * g.weight("frequency") / (2 * math.pi) ** d
    uv = u.values
    sym = op.symbol

    def block(rows):
        x = X[:, rows, None, None]
        y = X[:, None, :, None]
        xi = XI[:, None, None, :]
        if op.kind == "pdo_t":
            amp = sym.evaluate((1 - op.t) * x + op.t * y, xi)
        else:
            amp = sym.evaluate(x, y, xi)
        ph = np.sum((x - y) * xi, axis=0)
        K = np.exp(1j * ph) * amp
        # the xi sum is oscillatory for symbols; decay is required in y only
        mag = np.abs(K * uv[None, :, None]).max(axis=2)
        return np.sum(K.sum(axis=2) * uv[None, :], axis=1) * w, mag

    parts = _run(_rows(g.size), block, threads)
    out = np.concatenate([p[0] for p in parts])
    mag = np.concatenate([p[1] for p in parts])
    _check_tail(mag, g, tail_tol, f"apply({op.name})")
    return out


def apply(op: OperatorSpec, u: GridFunction, threads: int = 1, tail_tol: float = TAIL_TOL,
          route: str = "transform", cache: bool = True) -> GridFunction:
    """Apply an operator to a space-domain grid function.

    Parameters
    ----------
    route : {'transform', 'direct'}
        For type II and ``pdo_t`` operators: the route through the type I
        core (default), or the direct double sum kept as a cross-check.
    cache : bool
        Reuse the assembled kernel matrix of a type I/II spec on this grid.

    Warns
    -----
    TailMassWarning
        When the input or the integrand at the boundary of the integration
        grid exceeds ``tail_tol`` of its maximum.
    """
    if u.domain != "space":
        raise GridError("apply expects a space-domain function")
    g = u.grid
    if op.dim != g.dim:
        raise GridError(f"operator dimension {op.dim} does not match grid dimension {g.dim}")
    d = g.dim
    c = (2 * math.pi) ** (-d / 2)
    store = op._cache if cache else None
    if op.kind == "chain":
        v = u
        for part in reversed(op.parts):
            v = apply(part, v, threads, tail_tol, route, cache)
        return v
    # mass at the box edge breaks the periodic model of every route
    _check_tail(np.abs(u.values)[None, :], g, tail_tol, f"apply({op.name}) input")
    view = _core_view(op)
    if view is None or (route == "direct" and op.kind == "pdo_t"):
        return GridFunction(g, _pdo_double(op, u, threads, tail_tol))
    if cache:
        assemble(op, g, threads)
    P_out, P_in, phase, a = _core_inputs(view, g)
    if view[0] == "I":
        out = _type1_core(phase, a, g, P_out, P_in, fourier(u).values, c * g.weight("frequency"),
                          threads, tail_tol, f"apply({op.name})", store, ("E", g))
        return GridFunction(g, out)
    if route == "direct":
        return GridFunction(g, type2_direct(op if op.kind == "fio_type2"
                                            else fio2(view[1], view[2]), u))
    v = _type1_core(phase, a, g, P_out, P_in, u.values, c * g.weight("space"), threads,
                    tail_tol, f"apply({op.name})", store, ("E", g))
    return fourier(GridFunction(g, v, "frequency"), "inverse")


def type2_direct(op: OperatorSpec, u: GridFunction) -> np.ndarray:
    """Direct double sum ``(2 pi)^-d sum_xi sum_y exp(i(x xi - phi(y, xi))) conj(b) u``."""
    g = u.grid
    X, XI = g.coords(), g.freqs()
    d = g.dim
    ph = np.real(op.phase.evaluate(X[:, :, None], XI[:, None, :]))       # (y, xi)
    b = np.broadcast_to(op.symbol.evaluate(X[:, :, None], XI[:, None, :]), ph.shape)
    inner = np.sum(np.exp(-1j * ph) * np.conj(b) * u.values[:, None], axis=0)  # (xi,)
    outer = np.exp(1j * np.einsum("dx,dk->xk", X, XI))
    w = g.weight("space") * g.weight("frequency") / (2 * math.pi) ** d
    return (outer * inner[None, :]).sum(axis=1) * w


def adjoint_pair_check(phase: PhaseHandle, amp: Handle, u: GridFunction, v: GridFunction,
                       threads: int = 1) -> float:
    """``|<Op(a) u, v> - <u, Op*(a) v>| / (|u| |v|)``.

    The left side uses the type I core, the right side the type II transform
    route; they share no intermediate arrays.
    """
    lhs = inner_product(apply(fio1(phase, amp), u, threads, cache=False), v)
    rhs = inner_product(u, apply(fio2(phase, amp), v, threads, cache=False))
    return abs(lhs - rhs) / (u.norm() * v.norm())


# ---------------------------------------------------------------------------
# kernels

def default_kernel_grid(dim: int) -> Grid:
    return make_grid(dim, 256 if dim == 1 else 64, 10.0 if dim == 1 else 6.0)


def _kernel_parts(op: OperatorSpec):
    if op.kind in ("fio_type1", "fio_type2"):
        return op.phase, op.symbol
    if op.kind == "pdo_t" and op.t == 0.0:
        return identity_phase(op.dim), op.symbol
    raise ValueError(f"kernel evaluation supports type I/II and Op_0 specs, not {op.kind}")


def kernel_eval(op: OperatorSpec, x, y, grid: Grid | None = None,
                tail_tol: float = TAIL_TOL) -> complex:
    """Quadrature value of the distribution kernel at ``(x, y)``.

    Type I: ``(2 pi)^-d int exp(i(phi(x, xi) - y.xi)) a(x, xi) dxi``; type II
    kernels are ``conj(K_I(y, x))``.  The frequency quadrature uses the dual
    grid of ``grid``.

    Raises
    ------
    TailMassError
        If the amplitude does not decay to ``tail_tol`` at the frequency
        boundary.
    """
    if op.kind == "fio_type2":
        return complex(np.conj(kernel_eval(fio1(op.phase, op.symbol), y, x, grid, tail_tol)))
    phase, a = _kernel_parts(op)
    d = op.dim
    grid = grid or default_kernel_grid(d)
    xi = grid.freqs()
    x = np.asarray(x, dtype=float).reshape(d, 1)
    y = np.asarray(y, dtype=float).reshape(d, 1)
    amp = np.broadcast_to(a.evaluate(x, xi), (grid.size,))
    _check_tail(np.abs(amp)[None, :], grid, tail_tol, f"kernel_eval({op.name})", error=True)
    ph = np.real(phase.evaluate(x, xi)) - np.sum(y * xi, axis=0)
    return complex(np.sum(np.exp(1j * ph) * amp) * grid.weight("frequency") / (2 * math.pi) ** d)


def kernel_matrix(op: OperatorSpec, grid: Grid, tail_tol: float = TAIL_TOL,
                  threads: int = 1) -> np.ndarray:
    """``K[x_i, y_j]`` on the grid; the discrete operator is ``h^d K``."""
    d = grid.dim
    if op.kind == "fio_type2":
        return np.conj(kernel_matrix(fio1(op.phase, op.symbol), grid, tail_tol, threads)).T
    phase, a = _kernel_parts(op)
    P, XI = grid.coords(), grid.freqs()
    E = _run(_rows(grid.size), lambda rows: _type1_matrix_rows(phase, a, P, XI, rows), threads)
    E = np.concatenate(E)
    amp = np.abs(np.broadcast_to(a.evaluate(P[:, :, None], XI[:, None, :]), E.shape))
    _check_tail(amp, grid, tail_tol, f"kernel_matrix({op.name})", error=True)
    F = np.exp(-1j * np.einsum("dy,dk->ky", P, XI))
    return E @ F * (grid.weight("frequency") / (2 * math.pi) ** d)


def dense_matrix(op: OperatorSpec, grid: Grid) -> np.ndarray:
    """Matrix of the discrete operator, assembled column by column from ``apply``."""
    n = grid.size
    cols = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TailMassWarning)
        for j in range(n):
            e = np.zeros(n, dtype=complex)
            e[j] = 1.0
            cols.append(apply(op, GridFunction(grid, e)).values)
    return np.stack(cols, axis=1)


# ---------------------------------------------------------------------------
# regularization

def laplacian_xi_phase(phase: PhaseHandle) -> Handle:
    d = phase.dim
    parts = [DerivativeHandle(phase.grad_xi_handles[k], zero(d) + unit(d, k)) for k in range(d)]
    return FormulaHandle(lambda x, xi: sum(p(x, xi) for p in parts), 2, d,
                         f"lap_xi[{phase.name}]")


def d_multiplier(phase: PhaseHandle) -> Handle:
    """``1 / (<phi'_xi>^2 - i lap_xi phi)``."""
    lap = laplacian_xi_phase(phase)

    def fn(x, xi):
        g = phase.grad_xi(x, xi)
        return 1 / (1 + J.dot(g, g) - 1j * lap(x, xi))

    return FormulaHandle(fn, 2, phase.dim, f"D[{phase.name}]")


def _one_minus_lap_xi(h: Handle) -> Handle:
    d = h.dim
    parts = [DerivativeHandle(h, zero(d) + tuple(2 * u for u in unit(d, k))) for k in range(d)]
    return FormulaHandle(lambda x, xi: h(x, xi) - sum(p(x, xi) for p in parts), 2, d,
                         f"(1-lap)[{h.name}]")


def regularize(phase: PhaseHandle, a: Handle, l: int) -> tuple[Handle, Handle]:
    """Integration-by-parts regularization.

    Returns ``(D^l a, Q_l a)`` where ``D`` multiplies by
    ``1 / (<phi'_xi>^2 - i lap_xi phi)`` and
    ``Q_l = ((1 - lap_xi) D)^l - D^l``, so that
    ``int e^{i phi} a dxi = int e^{i phi} (D^l a + Q_l a) dxi``.
    """
    if l < 1:
        raise ValueError("l must be a positive integer")
    check_cap(2 * l + 2, DERIVATIVE_CAP, "regularization jet order 2l+2")
    m = d_multiplier(phase)
    d = a.dim
    principal = FormulaHandle(lambda x, xi: a(x, xi) * m(x, xi) ** l, 2, d,
                              f"D^{l}[{a.name}]")
    full = a
    for _ in range(l):
        cur = full
        full = _one_minus_lap_xi(FormulaHandle(lambda x, xi, c=cur: m(x, xi) * c(x, xi), 2, d))
    correction = FormulaHandle(lambda x, xi: full(x, xi) - principal(x, xi), 2, d,
                               f"Q_{l}[{a.name}]")
    return principal, correction


def oscillatory_integral(phase: PhaseHandle, f: Handle, x, grid: Grid) -> complex:
    """``int e^{i phi(x, xi)} f(x, xi) dxi`` by quadrature on the dual grid."""
    d = phase.dim
    x = np.asarray(x, dtype=float).reshape(d, 1)
    xi = grid.freqs()
    vals = np.exp(1j * np.real(phase.evaluate(x, xi))) * f.evaluate(x, xi)
    return complex(np.sum(vals) * grid.weight("frequency"))


def ibp_identity_check(phase: PhaseHandle, a: Handle, x, l: int, grid: Grid,
                       test: Handle | None = None) -> tuple[complex, complex]:
    """Both sides of the regularization identity at a point.

    ``test`` multiplies ``a`` (default ``exp(-|xi|^2 / 2)``) so that both
    integrals converge absolutely on the grid.  The multiplier of the
    regularization has complex poles near the real axis, so the frequency
    spacing must be fine (``pi / L <= 0.1`` reaches 1e-12).
    """
    d = phase.dim
    if test is None:
        test = FormulaHandle(lambda x_, xi: J.exp(-0.5 * J.dot(xi, xi)), 2, d, "gauss_xi")
    f = FormulaHandle(lambda x_, xi: a(x_, xi) * test(x_, xi), 2, d, f"{a.name}*test")
    principal, correction = regularize(phase, f, l)
    lhs = oscillatory_integral(phase, f, x, grid)
    rhs = oscillatory_integral(phase, FormulaHandle(
        lambda x_, xi: principal(x_, xi) + correction(x_, xi), 2, d), x, grid)
    return lhs, rhs


__all__ = ["OperatorSpec", "pdo", "pdo_amplitude", "fio1", "fio2", "chain", "identity_operator",
           "scaled", "adjoint", "apply", "type2_direct", "adjoint_pair_check", "kernel_eval",
           "kernel_matrix", "dense_matrix", "regularize", "d_multiplier", "assemble",
           "oscillatory_integral", "ibp_identity_check", "TailMassWarning", "TailMassError",
           "default_kernel_grid"]

