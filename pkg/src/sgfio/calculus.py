"""Composition calculus: expansion terms, mixed and FIO-FIO compositions,
parametrices and Egorov symbols.

Convention: ``D = -i d``.  With it the mixed expansion term
``i^|a| (D^a_xi p)(x, phi'_x) D^a_y[e^{i psi} a]_{y=x}`` equals
``(-i)^|a| (d^a_xi p)(x, phi'_x) d^a_y[e^{i psi} a]_{y=x}``, and the FIO pair
term ``i^|a| D^a D^a (S c0)`` equals ``(-i)^|a| d^a d^a (S c0)``.  Every
generator below works with ``d`` and applies the single factor ``(-i)^|a|``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import jets as J
from .handles import (DERIVATIVE_CAP, DerivativeHandle, DerivedHandle, FormulaHandle, Handle,
                      check_cap, transpose)
from .jets import Jet, factorial, multi_indices
from .operators import OperatorSpec, fio1, fio2, pdo
from .phases import (PhaseHandle, inverse_gradient_handles, phase_probe, s_phi_transform)
from .symbols import SymbolError, cutoff_diagonal, ellipticity_probe, seminorm_probe
from .weights import (ProbeSet, constant_weight, default_probes, theta_transform, theta_weight,
                      weight_product)

MODES = ("pdo_fio1", "fio1_pdo", "fio2_pdo", "pdo_fio2")
MODE_ALIASES = {"pdo∘fio1": "pdo_fio1", "fio1∘pdo": "fio1_pdo", "fio2∘pdo": "fio2_pdo",
                "pdo∘fio2": "pdo_fio2"}
PAIR_ORDERS = ("I_II", "II_I")
DEFAULT_M = 4


class CompositionError(ValueError):
    """A hypothesis probe failed or the composition request is invalid."""


def _flat(d: int, groups: dict, n_groups: int) -> tuple:
    """Flat multi-index over ``n_groups`` blocks from ``{block: alpha}``."""
    out = []
    for g in range(n_groups):
        out.extend(groups.get(g, (0,) * d))
    return tuple(out)


def _mi(alpha) -> tuple:
    return tuple(int(a) for a in alpha)


# ---------------------------------------------------------------------------
# psi and the mixed expansion terms

def psi_amplitude(phase: PhaseHandle, a: Handle) -> Handle:
    """``F(x, y, xi) = exp(i psi(x, y, xi)) a(y, xi)``."""
    d = phase.dim

    def fn(x, y, xi):
        gx = phase.grad_x(x, xi)
        lin = sum((y[k] - x[k]) * gx[k] for k in range(d))
        psi = phase(y, xi) - phase(x, xi) - lin
        return J.exp(1j * psi) * a(y, xi)

    return FormulaHandle(fn, 3, d, f"e^(i psi)[{phase.name}]{a.name}")


def psi_derivative(phase: PhaseHandle, a: Handle, alpha, x, xi) -> np.ndarray:
    """``D^alpha_y [exp(i psi(x, y, xi)) a(y, xi)]`` at ``y = x``."""
    alpha = _mi(alpha)
    n = sum(alpha)
    check_cap(n, DERIVATIVE_CAP, "psi derivative order")
    d = phase.dim
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    F = psi_amplitude(phase, a)
    jet = F.jet(x, x, xi, order=n)
    return (-1j) ** n * jet.partial(_flat(d, {1: alpha}, 3))


def _diag_y(h: Handle) -> Handle:
    """``g(x, xi) = h(x, x, xi)``."""
    return FormulaHandle(lambda x, xi: h(x, x, xi), 2, h.dim, f"diag[{h.name}]")


@dataclass
class ExpansionTerm:
    """One expansion term (already divided by ``alpha!``).

    ``class_tag`` records the predicted class: ``weight`` (a handle),
    ``drop`` ``(m, mu)`` relative to the leading term, and ``(r, rho)``.
    """

    alpha: tuple
    term: Handle
    class_tag: dict
    probe_constant: float | None = None

    def to_dict(self) -> dict:
        tag = {k: v for k, v in self.class_tag.items() if k != "weight"}
        if "weight" in self.class_tag and self.class_tag["weight"] is not None:
            tag["weight"] = self.class_tag["weight"].name
        return {"alpha": list(self.alpha), "class_tag": tag,
                "probe_constant": self.probe_constant}


def _weight_of(h: Handle, d: int) -> tuple[Handle, tuple]:
    m, mu = h.meta.get("order", (0.0, 0.0))
    return theta_weight(m, mu, d), (m, mu)


def expansion_term(p: Handle, a: Handle, phase: PhaseHandle, alpha, r1: float = 1.0,
                   divide: bool = True) -> ExpansionTerm:
    """``c_alpha = i^|a| (D^a_xi p)(x, phi'_x(x, xi)) D^a_y[e^{i psi} a]_{y=x}``.

    With ``divide`` the returned handle is ``c_alpha / alpha!``, the summand
    of the truncated symbol.
    """
    alpha = _mi(alpha)
    d = phase.dim
    n = sum(alpha)
    check_cap(n, DERIVATIVE_CAP, "expansion term order")
    coef = (-1j) ** n / (factorial(alpha) if divide else 1)
    dp = DerivativeHandle(p, _flat(d, {1: alpha}, 2)) if n else p
    F = psi_amplitude(phase, a)
    dF = DerivativeHandle(F, _flat(d, {1: alpha}, 3)) if n else F
    g = _diag_y(dF)

    def fn(x, xi):
        return coef * dp(x, phase.grad_x(x, xi)) * g(x, xi)

    term = FormulaHandle(fn, 2, d, f"c{list(alpha)}[{p.name},{a.name},{phase.name}]")
    wp, _ = _weight_of(p, d)
    wa, _ = _weight_of(a, d)
    drop = (-min(r1, 0.5) * n, -0.5 * n)
    w = weight_product(theta_transform(wp, phase, 2), wa, theta_weight(*drop, d),
                       name=f"w_c{list(alpha)}")
    return ExpansionTerm(alpha, term, {"weight": w, "drop": drop, "r": 1.0, "rho": 1.0})


def _sum_handle(terms: list, d: int, name: str) -> Handle:
    handles = [t.term for t in terms]

    def fn(x, xi):
        acc = 0
        for h in handles:
            acc = acc + h(x, xi)
        return acc

    return FormulaHandle(fn, 2, d, name)


def base_expansion(p: Handle, a: Handle, phase: PhaseHandle, M: int) -> list:
    """Terms ``c_alpha / alpha!`` for ``|alpha| < M`` in graded-lex order."""
    d = phase.dim
    if M < 0:
        raise CompositionError("truncation order M must be non-negative")
    if M:
        check_cap(M - 1, DERIVATIVE_CAP, "truncation order M - 1")
    return [expansion_term(p, a, phase, al) for al in multi_indices(d, M - 1)] if M else []


def kn_adjoint_symbol(p: Handle, M: int) -> Handle:
    """Truncated adjoint symbol ``sum_{|a|<M} (i^|a| / a!) D^a_x D^a_xi conj(p)``."""
    d = p.dim
    if M < 1:
        raise CompositionError("kn_adjoint_symbol needs M >= 1")
    check_cap(2 * (M - 1), DERIVATIVE_CAP, "adjoint symbol order 2(M-1)")
    pc = FormulaHandle(lambda x, xi: J.conj(p(x, xi)), 2, d, f"conj[{p.name}]")
    parts = []
    for al in multi_indices(d, M - 1):
        n = sum(al)
        c = (-1j) ** n / factorial(al)
        h = DerivativeHandle(pc, _flat(d, {0: al, 1: al}, 2)) if n else pc
        parts.append((c, h))

    def fn(x, xi):
        acc = 0
        for c, h in parts:
            acc = acc + c * h(x, xi)
        return acc

    return FormulaHandle(fn, 2, d, f"adj{M}[{p.name}]", {"kind": "symbol",
                                                         "order": p.meta.get("order", (0, 0))})


# ---------------------------------------------------------------------------
# results

@dataclass
class CompositionResult:
    """Truncated composition symbol with its terms.

    ``output`` names the operator kind the symbol quantizes:
    ``fio_type1``, ``fio_type2`` or ``pdo_t``.
    """

    mode: str
    M: int
    symbol: Handle
    terms: list
    output: str
    phase: PhaseHandle | None = None
    reading: str | None = None
    remainder: dict = field(default_factory=dict)
    hypotheses: dict = field(default_factory=dict)

    def operator(self) -> OperatorSpec:
        """Quantization of ``symbol``; cached so assembled matrices are reused."""
        op = self.__dict__.get("_op")
        if op is None:
            if self.output == "fio_type1":
                op = fio1(self.phase, self.symbol)
            elif self.output == "fio_type2":
                op = fio2(self.phase, self.symbol)
            else:
                op = pdo(self.symbol)
            self.__dict__["_op"] = op
        return op

    def probe_terms(self, probes: ProbeSet, K: int = 2) -> list:
        """Seminorm constants of each term in its tagged class."""
        out = []
        for t in self.terms:
            w = t.class_tag.get("weight") or constant_weight(1.0, self.symbol.dim)
            rep = seminorm_probe(t.term, w, t.class_tag.get("r", 1.0),
                                 t.class_tag.get("rho", 1.0), K, probes, threshold=np.inf)
            t.probe_constant = rep.max_constant
            out.append(rep)
        return out

    def to_dict(self) -> dict:
        return {"mode": self.mode, "M": self.M, "output": self.output, "reading": self.reading,
                "terms": [t.to_dict() for t in self.terms], "remainder": self.remainder,
                "hypotheses": self.hypotheses}


def _check_phase(phase: PhaseHandle, need_regular: bool, probes: ProbeSet | None) -> dict:
    rep = phase_probe(phase, probes or default_probes(phase.dim))
    ok = rep.regular if need_regular else rep.simple
    if not ok:
        fails = rep.failures() or ["phase is not simple"]
        raise CompositionError(f"hypothesis probe phase_probe({phase.name}) failed: "
                               + "; ".join(fails))
    return {"phase_probe": {"simple": rep.simple, "regular": rep.regular}}


def _transposed_terms(terms: list, d: int) -> list:
    out = []
    for t in terms:
        tag = dict(t.class_tag)
        if tag.get("weight") is not None:
            tag["weight"] = transpose(tag["weight"])
        out.append(ExpansionTerm(t.alpha, transpose(t.term), tag))
    return out


def compose_mixed(mode: str, p: Handle, amp: Handle, phase: PhaseHandle, M: int = DEFAULT_M,
                  reading: str = "type2", check_hypotheses: bool = True,
                  probes: ProbeSet | None = None) -> CompositionResult:
    """Composition of a pseudo-differential operator with a type I or II FIO.

    Modes
    -----
    ``pdo_fio1``: ``Op(p) Op_phi(a) = Op_phi(c)``, ``c ~ sum c_alpha / alpha!``.
    ``fio1_pdo``: ``Op_phi(a) Op(p) = Op_phi(c)``; ``c`` is the transpose of
    the base expansion of ``(tp, ta, tphi)``.
    ``fio2_pdo``: ``Op*_phi(b) Op(p)``; base expansion of ``(q, b, phi)`` with
    ``q`` the truncated adjoint symbol of ``p``.
    ``pdo_fio2``: ``Op(p) Op*_phi(b)``; transpose of the base expansion of
    ``(tq, tb, tphi)``.

    ``reading`` applies to the type II modes: ``'type2'`` quantizes ``c`` as
    ``Op*_phi(c)``, ``'type1'`` takes the literal ``Op_phi(c)``.  The
    verify module measures which of the two matches direct composition.
    """
    mode = MODE_ALIASES.get(mode, mode)
    if mode not in MODES:
        raise CompositionError(f"unknown composition mode {mode!r}; expected one of {MODES}")
    if reading not in ("type1", "type2"):
        raise CompositionError("reading must be 'type1' or 'type2'")
    if p.dim != phase.dim or amp.dim != phase.dim:
        raise CompositionError("symbol, amplitude and phase dimensions differ")
    d = phase.dim
    hyp = _check_phase(phase, False, probes) if check_hypotheses else {}
    if mode in ("fio2_pdo", "pdo_fio2"):
        p_eff = kn_adjoint_symbol(p, max(M, 1))
        out = "fio_type2" if reading == "type2" else "fio_type1"
    else:
        p_eff = p
        out = "fio_type1"
    if mode in ("pdo_fio1", "fio2_pdo"):
        terms = base_expansion(p_eff, amp, phase, M)
    else:
        tterms = base_expansion(transpose(p_eff), transpose(amp), phase.transpose(), M)
        terms = _transposed_terms(tterms, d)
    sym = _sum_handle(terms, d, f"{mode}[{p.name},{amp.name},{phase.name}]M{M}")
    return CompositionResult(mode, M, sym, terms, out, phase,
                             reading if mode in ("fio2_pdo", "pdo_fio2") else None,
                             hypotheses=hyp)


# ---------------------------------------------------------------------------
# FIO pairs

class DiagonalExpansion(DerivedHandle):
    """``sum_alpha (-i)^|a| / a! d^a_u d^a_v S(...)`` restricted to the diagonal.

    ``order='I_II'``: ``S(x, y, xi)``, derivatives in ``(y, xi)``, ``y = x``.
    ``order='II_I'``: ``S(x, xi, eta)``, derivatives in ``(x, eta)``, ``eta = xi``.
    The jet of ``S`` is computed once per call and shared by all terms.
    """

    def __init__(self, S: Handle, order: str, alphas: list, name: str = ""):
        super().__init__(2, S.dim, name or f"diag[{S.name}]")
        self.S = S
        self.order = order
        self.alphas = [_mi(a) for a in alphas]
        self.extra = 2 * max((sum(a) for a in self.alphas), default=0)

    def _flat(self, alpha):
        d = self.dim
        if self.order == "I_II":
            return _flat(d, {1: alpha, 2: alpha}, 3)
        return _flat(d, {0: alpha, 2: alpha}, 3)

    def taylor(self, base, order):
        d = self.dim
        x = np.array(base[:d], dtype=float)
        xi = np.array(base[d:], dtype=float)
        shape = np.broadcast_shapes(x.shape, xi.shape)
        x, xi = np.broadcast_to(x, shape), np.broadcast_to(xi, shape)
        if self.order == "I_II":
            b3 = list(x) + list(x) + list(xi)
        else:
            b3 = list(x) + list(xi) + list(xi)
        check_cap(order + self.extra, 2 * DERIVATIVE_CAP, "diagonal expansion jet order")
        JS = self.S.taylor(b3, order + self.extra)
        X, XI = J.seed_groups([list(x), list(xi)], order)
        inner = X + X + XI if self.order == "I_II" else X + XI + XI
        acc = None
        for al in self.alphas:
            n = sum(al)
            t = JS.derivative(self._flat(al)).truncate(order) if n else JS.truncate(order)
            t = t.compose(inner) * ((-1j) ** n / factorial(al))
            acc = t if acc is None else acc + t
        return acc


def _pair_amplitude(a: Handle, b: Handle, order: str, k: float) -> Handle:
    d = a.dim
    chi = cutoff_diagonal(k, d)
    if order == "I_II":
        fn = lambda x, y, xi: a(x, xi) * J.conj(b(y, xi)) * chi(x, y)  # noqa: E731
    else:
        fn = lambda x, xi, eta: a(x, xi) * J.conj(b(x, eta)) * chi(xi, eta)  # noqa: E731
    return FormulaHandle(fn, 3, d, f"c0[{a.name},{b.name}]")


def compose_fio_pair(order: str, a: Handle, b: Handle, phase: PhaseHandle, M: int = DEFAULT_M,
                     k_cutoff: float = 0.5, check_hypotheses: bool = True,
                     probes: ProbeSet | None = None) -> CompositionResult:
    """``Op_phi(a) Op*_phi(b)`` (``'I_II'``) or ``Op*_phi(b) Op_phi(a)`` (``'II_I'``).

    The result quantizes as a pseudo-differential operator ``Op(c)`` with
    ``c ~ sum_{|a|<M} (i^|a| / a!) D^a D^a (S_phi c0)`` on the diagonal, where
    ``c0 = a(x, xi) conj(b(y, xi)) chi(x, y)`` (``I_II``) or
    ``c0 = a(x, xi) conj(b(x, eta)) chi(xi, eta)`` (``II_I``).
    """
    order = {"I∘II": "I_II", "II∘I": "II_I"}.get(order, order)
    if order not in PAIR_ORDERS:
        raise CompositionError(f"unknown pair order {order!r}; expected I_II or II_I")
    if M < 1:
        raise CompositionError("compose_fio_pair needs M >= 1")
    d = phase.dim
    hyp = _check_phase(phase, True, probes) if check_hypotheses else {}
    c0 = _pair_amplitude(a, b, order, k_cutoff)
    S = s_phi_transform(c0, phase, "xy" if order == "I_II" else "xieta", k_cutoff)
    alphas = list(multi_indices(d, M - 1))
    (ma, mua), (mb, mub) = a.meta.get("order", (0, 0)), b.meta.get("order", (0, 0))
    terms = []
    for al in alphas:
        n = sum(al)
        w = theta_weight(ma + mb - n, mua + mub - n, d)
        terms.append(ExpansionTerm(al, DiagonalExpansion(S, order, [al], f"c{list(al)}"),
                                   {"weight": w, "drop": (-n, -n), "r": 1.0, "rho": 1.0}))
    sym = DiagonalExpansion(S, order, alphas, f"{order}[{a.name},{b.name},{phase.name}]M{M}")
    sym.meta = {"kind": "symbol", "order": (ma + mb, mua + mub)}
    return CompositionResult(order, M, sym, terms, "pdo_t", phase, hypotheses=hyp)


# ---------------------------------------------------------------------------
# parametrix

def _abs_det_mixed(phase: PhaseHandle) -> Handle:
    """``|det phi''_{x xi}|`` as a generic handle (sign taken at the base point)."""
    d = phase.dim
    gx = phase.grad_x_handles
    ent = [[DerivativeHandle(gx[j], _flat(d, {1: tuple(int(i == k) for i in range(d))}, 2))
            for k in range(d)] for j in range(d)]

    def fn(x, xi):
        det = J.det([[ent[j][k](x, xi) for k in range(d)] for j in range(d)])
        s = np.sign(np.real(J.value_of(det)))
        return det * s

    return FormulaHandle(fn, 2, d, f"|det phi''|[{phase.name}]")


@dataclass
class ParametrixResult:
    spec: OperatorSpec
    symbol: Handle
    steps: list                      # symbols b after each step
    defects: list                    # r_k = c(b_k) - 1 per step
    reports: list                    # seminorm reports of r_k at theta_{-k,-k}
    ellipticity: object = None

    def to_dict(self) -> dict:
        return {"steps": len(self.steps),
                "defect_reports": [r.to_dict() for r in self.reports],
                "ellipticity": None if self.ellipticity is None else self.ellipticity.to_dict()}


def parametrix(a: Handle, phase: PhaseHandle, w: Handle | None = None, M: int = 2,
               expansion_M: int | None = None, R: float = 10.0, K: int = 2,
               probes: ProbeSet | None = None, threshold: float = 100.0,
               check_hypotheses: bool = True) -> ParametrixResult:
    """Type II parametrix of an elliptic ``Op_phi(a)``.

    Step 1 inverts the leading symbol, ``b_1 = |det phi''_{x xi}| / conj(a)``.
    Step ``k + 1`` adds ``-conj(r_k(phi'_xi(y, xi), xi)) b_1(y, xi)`` where
    ``r_k`` is the defect of the ``II_I`` composition, so that the new defect
    drops one order in both variables.  After step ``k`` the defect is probed
    in ``theta_{-k,-k}``.
    """
    d = phase.dim
    probes = probes or default_probes(d)
    w = w or constant_weight(1.0, d)
    ell = ellipticity_probe(a, w, R, probes)
    if not ell.passed:
        raise CompositionError(f"hypothesis probe ellipticity_probe({a.name}) failed: "
                               f"inf |a|/w = {ell.inf_ratio:.3g} at {ell.witness}")
    if check_hypotheses:
        _check_phase(phase, True, probes)
    Me = expansion_M or max(M, 2)
    det = _abs_det_mixed(phase)
    b1 = FormulaHandle(lambda y, xi: det(y, xi) / J.conj(a(y, xi)), 2, d,
                       f"b1[{a.name}]")
    gxi = phase.grad_xi_handles
    steps, defects, reports = [], [], []
    b = b1
    for k in range(1, M + 1):
        if k > 1:
            r_prev = defects[-1]

            def delta(y, xi, r_prev=r_prev):
                x = [h(y, xi) for h in gxi]
                return -J.conj(r_prev(x, xi)) * b1(y, xi)

            prev = b
            b = FormulaHandle(lambda y, xi, prev=prev, dl=delta: prev(y, xi) + dl(y, xi), 2, d,
                              f"b{k}[{a.name}]")
        steps.append(b)
        comp = compose_fio_pair("II_I", a, b, phase, Me, check_hypotheses=False)
        c = comp.symbol
        r = FormulaHandle(lambda x, xi, c=c: c(x, xi) - 1, 2, d, f"r{k}[{a.name}]")
        defects.append(r)
        reports.append(seminorm_probe(r, theta_weight(-k, -k, d), 1.0, 1.0, K, probes,
                                      threshold))
    return ParametrixResult(fio2(phase, b, f"parametrix[{a.name}]"), b, steps, defects,
                            reports, ell)


# ---------------------------------------------------------------------------
# Egorov

def egorov_symbol(p: Handle, a: Handle, phase: PhaseHandle, variant: str = "sandwich_adjoint",
                  w: Handle | None = None, R: float = 10.0,
                  probes: ProbeSet | None = None) -> Handle:
    """Leading symbol of ``A P A*`` or ``A P A^{-1}`` with ``A = Op_phi(a)``.

    With ``eta = (phi'_x)^{-1}(x, xi)`` and ``y = phi'_xi(x, eta)``:
    ``sandwich_adjoint`` gives ``p(y, eta) |a(x, eta)|^2 / |det phi''_{x xi}(x, eta)|``
    and ``conjugation`` gives ``p(y, eta)``.
    """
    if variant not in ("sandwich_adjoint", "conjugation"):
        raise CompositionError("variant must be 'sandwich_adjoint' or 'conjugation'")
    d = phase.dim
    if variant == "conjugation":
        probes = probes or default_probes(d)
        ell = ellipticity_probe(a, w or constant_weight(1.0, d), R, probes)
        if not ell.passed:
            raise CompositionError(f"hypothesis probe ellipticity_probe({a.name}) failed: "
                                   f"inf |a|/w = {ell.inf_ratio:.3g}")
    inv = inverse_gradient_handles(phase, "x")
    gxi = phase.grad_xi_handles
    det = _abs_det_mixed(phase)

    def fn(x, xi):
        eta = [h(x, xi) for h in inv]
        y = [h(x, eta) for h in gxi]
        out = p(y, eta)
        if variant == "sandwich_adjoint":
            av = a(x, eta)
            out = out * av * J.conj(av) / det(x, eta)
        return out

    return FormulaHandle(fn, 2, d, f"egorov[{variant}]({p.name},{a.name},{phase.name})")


def sandwich_chain(p: Handle, a: Handle, phase: PhaseHandle, M1: int = 2, M2: int = 2,
                   k_cutoff: float = 0.5) -> CompositionResult:
    """Symbol of ``Op_phi(a) Op(p) Op*_phi(a)`` via the two composition theorems."""
    first = compose_mixed("fio1_pdo", p, a, phase, M1, check_hypotheses=False)
    return compose_fio_pair("I_II", first.symbol, a, phase, M2, k_cutoff,
                            check_hypotheses=False)


__all__ = ["CompositionError", "psi_amplitude", "psi_derivative", "ExpansionTerm",
           "expansion_term", "base_expansion", "kn_adjoint_symbol", "CompositionResult",
           "compose_mixed", "DiagonalExpansion", "compose_fio_pair", "ParametrixResult",
           "parametrix", "egorov_symbol", "sandwich_chain", "MODES", "PAIR_ORDERS", "Jet",
           "SymbolError"]
