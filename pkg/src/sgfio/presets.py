"""Named symbols, phases and weights used by the CLI and the test suites."""

from __future__ import annotations

import difflib
import math

from . import jets as J
from .handles import FormulaHandle, Handle
from .phases import (PhaseHandle, cubic_phase, degenerate_phase, identity_phase, perturbed_phase,
                     transport_phase)
from .weights import constant_weight, theta_weight


class PresetError(KeyError):
    """Unknown preset name; carries close matches."""

    def __init__(self, kind: str, name: str, choices):
        self.suggestions = difflib.get_close_matches(name, list(choices), n=3)
        hint = f"; did you mean {', '.join(self.suggestions)}?" if self.suggestions else ""
        super().__init__(f"unknown {kind} preset {name!r}{hint}")

    def __str__(self):
        return self.args[0]


def _jx(v):
    return J.japanese(v)


def _first(v):
    return v[0]


def _sym(fn, d, name, m=0.0, mu=0.0):
    """Symbol handle tagged with its class ``theta_{m, mu}``."""
    return FormulaHandle(fn, 2, d, name, {"kind": "symbol", "order": (m, mu)})


def _one(d, **_):
    return _sym(lambda x, xi: 1.0, d, "one")


def _theta(d, m=0.0, mu=0.0, **_):
    w = theta_weight(m, mu, d)
    return _sym(lambda x, xi: w(x, xi), d, f"theta[{m:g},{mu:g}]", m, mu)


def _x(d, **_):
    return _sym(lambda x, xi: x[0] + 0 * xi[0], d, "x", 1, 0)


def _xi(d, **_):
    return _sym(lambda x, xi: xi[0] + 0 * x[0], d, "xi", 0, 1)


def _x_xi(d, **_):
    return _sym(lambda x, xi: J.dot(x, xi), d, "x.xi", 1, 1)


def _japanese_xi(d, **_):
    return _sym(lambda x, xi: _jx(xi) + 0 * x[0], d, "<xi>", 0, 1)


def _gaussian(d, **_):
    return _sym(lambda x, xi: J.exp(-J.dot(x, x) - J.dot(xi, xi)), d, "gaussian")


def _gaussian_xi(d, **_):
    return _sym(lambda x, xi: J.exp(-J.dot(xi, xi)) + 0 * x[0], d, "gaussian_xi", 0, 0)


def _rank_one(d, **_):
    """Amplitude whose type I kernel with the identity phase is ``exp(-|x|^2 - |y|^2)``."""
    c = math.pi ** (d / 2)

    def fn(x, xi):
        return c * J.exp(-J.dot(x, x) - 0.25 * J.dot(xi, xi) - 1j * J.dot(x, xi))

    return _sym(fn, d, "rank_one_gaussian")


def _elliptic(d, **_):
    return _sym(lambda x, xi: 2 + J.dot(x, xi) / (_jx(x) * _jx(xi)), d, "elliptic")


def _sg00(d, **_):
    def fn(x, xi):
        return (1 + 0.5 * _first(x) / _jx(x)) * (1 + 0.25j * _first(xi) / _jx(xi))

    return _sym(fn, d, "sg00")


def _sg00_real(d, **_):
    return _sym(lambda x, xi: 1 + 0.5 * J.dot(x, xi) / (_jx(x) * _jx(xi)), d, "sg00_real")


def _bump_modulated(d, **_):
    def fn(x, xi):
        return J.exp(-J.dot(x, x) / 8) * (1 + 0.5j * _first(xi) / _jx(xi))

    return _sym(fn, d, "bump_modulated")


def _oscillating(d, **_):
    return _sym(lambda x, xi: J.exp(1j * J.dot(x, xi)), d, "oscillating")


def _xi_decay(d, **_):
    """``(1 + 0.5 x/<x>) exp(-|xi|^2 / 2)``: smooth, bounded, integrable in ``xi``."""
    def fn(x, xi):
        return (1 + 0.5 * _first(x) / _jx(x)) * J.exp(-0.5 * J.dot(xi, xi))

    return _sym(fn, d, "xi_decay")


def _x_japanese_xi(d, **_):
    def fn(x, xi):
        return (1 + 0.5 * _first(x) / _jx(x)) * _jx(xi)

    return _sym(fn, d, "amp*<xi>", 0, 1)


SYMBOLS = {
    "one": (_one, "constant 1, class theta_{0,0}"),
    "theta": (_theta, "theta_{m,mu}(x, xi) = <x>^m <xi>^mu (params m, mu)"),
    "x": (_x, "first space coordinate, theta_{1,0}"),
    "xi": (_xi, "first frequency coordinate, theta_{0,1}"),
    "x_xi": (_x_xi, "x . xi, theta_{1,1}"),
    "japanese_xi": (_japanese_xi, "<xi>, theta_{0,1}"),
    "amp_japanese_xi": (_x_japanese_xi, "(1 + x1/(2<x>)) <xi>, theta_{0,1}"),
    "gaussian": (_gaussian, "exp(-|x|^2 - |xi|^2)"),
    "gaussian_xi": (_gaussian_xi, "exp(-|xi|^2)"),
    "rank_one_gaussian": (_rank_one, "kernel exp(-|x|^2-|y|^2) under the identity phase"),
    "elliptic": (_elliptic, "2 + x.xi/(<x><xi>), elliptic in theta_{0,0}"),
    "sg00": (_sg00, "(1 + x1/(2<x>))(1 + i xi1/(4<xi>)), theta_{0,0}"),
    "sg00_real": (_sg00_real, "1 + x.xi/(2<x><xi>), theta_{0,0}"),
    "bump_modulated": (_bump_modulated, "exp(-|x|^2/8)(1 + i xi1/(2<xi>))"),
    "oscillating": (_oscillating, "exp(i x.xi), not in any SG class"),
    "xi_decay": (_xi_decay, "(1 + x1/(2<x>)) exp(-|xi|^2/2)"),
}

PHASES = {
    "identity": (lambda d, **p: identity_phase(d), "x . xi"),
    "transport": (lambda d, t=0.5, **p: transport_phase(t, d), "x . xi + t <xi> (param t)"),
    "perturbed": (lambda d, eps=0.5, **p: perturbed_phase(eps, d),
                  "x . xi + eps <x><xi> (param eps)"),
    "cubic": (lambda d, **p: cubic_phase(d), "not of the admissible class"),
    "degenerate": (lambda d, **p: degenerate_phase(d), "x . xi / <xi>, degenerate"),
}

WEIGHTS = {
    "theta": (lambda d, m=0.0, mu=0.0, **p: theta_weight(m, mu, d), "<x>^m <xi>^mu"),
    "one": (lambda d, **p: constant_weight(1.0, d), "constant 1"),
}


def _lookup(table, kind, name):
    if name not in table:
        raise PresetError(kind, name, table)
    return table[name][0]


def make_symbol(name: str, dim: int = 1, **params) -> Handle:
    return _lookup(SYMBOLS, "symbol", name)(dim, **params)


def make_phase(name: str, dim: int = 1, **params) -> PhaseHandle:
    return _lookup(PHASES, "phase", name)(dim, **params)


def make_weight(name: str, dim: int = 1, **params) -> Handle:
    return _lookup(WEIGHTS, "weight", name)(dim, **params)


def listing() -> dict:
    return {kind: {k: v[1] for k, v in table.items()}
            for kind, table in (("symbols", SYMBOLS), ("phases", PHASES), ("weights", WEIGHTS))}


__all__ = ["PresetError", "SYMBOLS", "PHASES", "WEIGHTS", "make_symbol", "make_phase",
           "make_weight", "listing"]
