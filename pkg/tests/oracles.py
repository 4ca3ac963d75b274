"""Independent reference computations for the test suite.

Nothing here calls the numerical core of the package: derivatives come from
sympy, integrals from closed forms or scipy quadrature, and operators from
dense sums written out directly.
"""

from __future__ import annotations

import math

import numpy as np
import sympy as sp


def sympy_partials(expr, variables, point, order):
    """All partials of ``expr`` up to ``order`` at ``point``, keyed by multi-index."""
    from itertools import product

    subs = dict(zip(variables, point))
    out = {}
    n = len(variables)
    for m in product(range(order + 1), repeat=n):
        if sum(m) > order:
            continue
        e = expr
        for v, k in zip(variables, m):
            if k:
                e = sp.diff(e, v, k)
        out[m] = complex(sp.N(e.subs(subs), 30))
    return out


def japanese(v):
    return np.sqrt(1 + np.asarray(v, dtype=float) ** 2)


def gaussian_l2_peak(width: float = 1.0, dim: int = 1) -> float:
    """Peak of the L2-normalized ``exp(-|x|^2 / (2 width^2))``."""
    return (math.pi * width ** 2) ** (-dim / 4)


def dense_type1(phase_fn, amp_fn, x, xi, hxi):
    """Dense matrix of ``u_hat -> (2 pi)^(-1/2) sum_xi e^{i phi} a u_hat(xi) h`` in d=1."""
    X, XI = np.meshgrid(x, xi, indexing="ij")
    return np.exp(1j * phase_fn(X, XI)) * amp_fn(X, XI) * hxi / math.sqrt(2 * math.pi)


def dft_matrix(x, xi, hx):
    """Dense unitary forward transform ``u -> u_hat`` by direct summation (d=1)."""
    return np.exp(-1j * np.outer(xi, x)) * hx / math.sqrt(2 * math.pi)


def kn_product_terms(p_expr, a_expr, x, xi, M):
    """Classical left-quantization composition terms ``(-i)^k/k! d_xi^k p d_x^k a``."""
    return [sp.simplify((-sp.I) ** k / sp.factorial(k) * sp.diff(p_expr, xi, k)
                        * sp.diff(a_expr, x, k)) for k in range(M)]
