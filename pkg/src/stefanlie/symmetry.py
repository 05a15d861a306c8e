"""Lie generators, prolongation and the admission check for Stefan problems.

Candidate generators come from the group classification of the uncoupled
nonlinear heat system ``u_t = (d1(u) u_x)_x``, ``v_t = (d2(v) v_x)_x``
(:func:`classify_mai`).  :func:`check_invariance` then tests every item of the
invariance definition for boundary value problems with free boundaries and a
condition at ``x = +inf``; :func:`admitted_symmetries` runs the whole
candidate family against one :class:`~stefanlie.problem.CanonicalProblem`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .expr import (ONE, ZERO, Add, Const, DiffusivityClass, DiffusivityTag, Expr, ExprError,
                   Sym, as_expr, classify_diffusivity, coefficient_of, diff,
                   evaluate_lenient, simplify, substitute)
from .problem import CanonicalProblem

RESIDUAL_TOL = 1e-10
T_SAMPLE = (0.1, 10.0)
N_GRID = 16

t, x, u, v = Sym("t"), Sym("x"), Sym("u"), Sym("v")


class UnsupportedCaseError(ValueError):
    pass


# ---------------------------------------------------------------------------
# operators

@dataclass(frozen=True)
class LieOperator:
    """X = xi0 d_t + xi1 d_x + eta_u d_u + eta_v d_v.

    The free surfaces are not transformed (their coefficient is zero).
    """

    xi0: Expr = ZERO
    xi1: Expr = ZERO
    eta_u: Expr = ZERO
    eta_v: Expr = ZERO
    label: str = ""

    def __post_init__(self):
        for name, allowed in (("xi0", {"t", "x"}), ("xi1", {"t", "x"}),
                              ("eta_u", {"t", "x", "u", "v"}), ("eta_v", {"t", "x", "u", "v"})):
            e = simplify(as_expr(getattr(self, name)))
            if not e.free_symbols <= allowed:
                raise ExprError(f"{name} may only depend on {sorted(allowed)}")
            object.__setattr__(self, name, e)
        if not self.label:
            object.__setattr__(self, "label", self.describe())

    def describe(self) -> str:
        parts = []
        for coeff, dvar in ((self.xi0, "d_t"), (self.xi1, "d_x"), (self.eta_u, "d_u"),
                            (self.eta_v, "d_v")):
            if coeff == ZERO:
                continue
            parts.append(dvar if coeff == ONE else f"({coeff})*{dvar}")
        return " + ".join(parts) or "0"

    def __add__(self, other: "LieOperator") -> "LieOperator":
        return LieOperator(self.xi0 + other.xi0, self.xi1 + other.xi1,
                           self.eta_u + other.eta_u, self.eta_v + other.eta_v)

    def scaled(self, c) -> "LieOperator":
        return LieOperator(c * self.xi0, c * self.xi1, c * self.eta_u, c * self.eta_v)

    def equals(self, other: "LieOperator", samples: int = 12, seed: int = 0) -> bool:
        """Coefficient-wise equality checked at random points."""
        rng = np.random.default_rng(seed)
        pts = {s: rng.uniform(0.3, 2.0, samples) for s in ("t", "x", "u", "v")}
        for a, b in ((self.xi0, other.xi0), (self.xi1, other.xi1),
                     (self.eta_u, other.eta_u), (self.eta_v, other.eta_v)):
            va = np.asarray(evaluate_lenient(a, pts), dtype=float)
            vb = np.asarray(evaluate_lenient(b, pts), dtype=float)
            if not np.allclose(va, vb, rtol=1e-10, atol=1e-12):
                return False
        return True


D_T = LieOperator(xi0=ONE, label="d_t")
D_X = LieOperator(xi1=ONE, label="d_x")
SCALING = LieOperator(xi0=2 * t, xi1=x, label="2t d_t + x d_x")


def x1_operator(mu) -> LieOperator:
    return LieOperator(xi0=ONE, xi1=Const(mu), label=f"d_t + {mu} d_x")


PRINCIPAL = (D_T, D_X, SCALING)


@dataclass(frozen=True)
class OperatorFamily:
    """Maximal invariance algebra of the heat system for one diffusivity pair."""

    table_case: int
    basis: tuple
    infinite_family: Optional[str] = None
    mirrored: bool = False
    classes: tuple = ()

    @property
    def dimension(self) -> int:
        return len(self.basis)

    @property
    def extensions(self) -> tuple:
        return self.basis[len(PRINCIPAL):]


def _power_eta(c: DiffusivityClass, symbol: Sym, factor) -> Expr:
    """(2/n) (w - shift) with an extra factor."""
    n = c.exponent
    k = Fraction(2) / n if isinstance(n, Fraction) else 2.0 / float(n)
    return simplify(factor * Const(k) * (symbol - c.shift))


def _exp_eta(c: DiffusivityClass, factor) -> Expr:
    return simplify(factor * Const(2.0 / c.rate if not float(c.rate).is_integer()
                                   else Fraction(2) / int(c.rate)))


def classify_mai(c1: DiffusivityClass, c2: DiffusivityClass) -> OperatorFamily:
    """Table lookup of the maximal algebra of invariance for (d1, d2).

    Operators are written in the original dependent variables, i.e. with the
    shifts and rates recorded by :func:`classify_diffusivity` undone.  The
    mirrored patterns (special d1 with a generic d2 role swapped) are
    relabelled through the discrete exchange u <-> v.
    """
    T = DiffusivityTag
    if c1.tag == T.CONSTANT and c2.tag == T.CONSTANT:
        raise UnsupportedCaseError("both diffusivities are constant: the linear system is "
                                   "excluded from the classification")
    classes = (c1, c2)
    # case 2: one linear equation
    if c2.tag == T.CONSTANT or c1.tag == T.CONSTANT:
        mirrored = c1.tag == T.CONSTANT
        w = "u" if mirrored else "v"
        ext = LieOperator(eta_u=u if mirrored else ZERO, eta_v=ZERO if mirrored else v,
                          label=f"{w} d_{w}")
        return OperatorFamily(2, PRINCIPAL + (ext,), infinite_family=f"beta(t,x) d_{w}",
                              mirrored=mirrored, classes=classes)
    if c1.tag == T.EXPONENTIAL and c2.tag == T.EXPONENTIAL:
        ext = LieOperator(xi1=x, eta_u=_exp_eta(c1, 1), eta_v=_exp_eta(c2, 1),
                          label="x d_x + 2 d_u + 2 d_v")
        return OperatorFamily(3, PRINCIPAL + (ext,), classes=classes)
    if c1.tag == T.EXPONENTIAL and c2.is_power:
        ext = LieOperator(xi1=x, eta_u=_exp_eta(c1, 1), eta_v=_power_eta(c2, v, 1),
                          label="x d_x + 2 d_u + (2/m) v d_v")
        return OperatorFamily(4, PRINCIPAL + (ext,), classes=classes)
    if c1.is_power and c2.tag == T.EXPONENTIAL:
        ext = LieOperator(xi1=x, eta_u=_power_eta(c1, u, 1), eta_v=_exp_eta(c2, 1),
                          label="x d_x + (2/n) u d_u + 2 d_v")
        return OperatorFamily(4, PRINCIPAL + (ext,), mirrored=True, classes=classes)
    if c1.tag == T.POWER_MINUS_4_3 and c2.tag == T.POWER_MINUS_4_3:
        ext1 = LieOperator(xi1=x, eta_u=_power_eta(c1, u, 1), eta_v=_power_eta(c2, v, 1),
                           label="x d_x - 3/2 u d_u - 3/2 v d_v")
        ext2 = LieOperator(xi1=x * x, eta_u=simplify(-3 * x * (u - c1.shift)),
                           eta_v=simplify(-3 * x * (v - c2.shift)),
                           label="x^2 d_x - 3xu d_u - 3xv d_v")
        return OperatorFamily(6, PRINCIPAL + (ext1, ext2), classes=classes)
    if c1.is_power and c2.is_power:
        ext = LieOperator(xi1=x, eta_u=_power_eta(c1, u, 1), eta_v=_power_eta(c2, v, 1),
                          label="x d_x + (2/n) u d_u + (2/m) v d_v")
        return OperatorFamily(5, PRINCIPAL + (ext,), classes=classes)
    return OperatorFamily(1, PRINCIPAL, classes=classes)


@dataclass(frozen=True)
class NormalizedOperator:
    form: str                  # "X1", "X2", "PureSpaceTranslation" or "Other"
    mu: Optional[float] = None
    t0: float = 0.0
    x0: float = 0.0
    scale: float = 1.0
    physical: bool = True


def normalize_operator(X: LieOperator) -> NormalizedOperator:
    """Reduce an element of the principal algebra by shifts of t and x.

    ``(l1 + 2 l3 t) d_t + (l2 + l3 x) d_x`` becomes ``X1 = d_t + mu d_x`` when
    ``l3 = 0, l1 != 0`` and ``X2 = 2t d_t + x d_x`` when ``l3 != 0``.
    """
    if not (X.eta_u.is_zero() and X.eta_v.is_zero()):
        return NormalizedOperator("Other", physical=False)
    try:
        a0, l1 = coefficient_of(X.xi0, "t")
        a1, l2 = coefficient_of(X.xi1, "x")
    except ExprError:
        return NormalizedOperator("Other", physical=False)
    if not all(isinstance(e, Const) for e in (a0, l1, a1, l2)) or \
            X.xi0.free_symbols - {"t"} or X.xi1.free_symbols - {"x"}:
        return NormalizedOperator("Other", physical=False)
    l3 = float(a1.value)
    l1, l2 = float(l1.value), float(l2.value)
    if abs(float(a0.value) - 2 * l3) > 1e-12 * max(1.0, abs(l3)):
        return NormalizedOperator("Other", physical=False)
    if l3 != 0:
        return NormalizedOperator("X2", t0=l1 / (2 * l3), x0=l2 / l3, scale=l3)
    if l1 != 0:
        return NormalizedOperator("X1", mu=l2 / l1, scale=l1)
    if l2 != 0:
        return NormalizedOperator("PureSpaceTranslation", scale=l2, physical=False)
    return NormalizedOperator("Other", physical=False)


# ---------------------------------------------------------------------------
# prolongation

_DX_MAP = {"u": "u_x", "v": "v_x", "u_x": "u_xx", "v_x": "v_xx", "u_t": "u_xt", "v_t": "v_xt"}
_DT_MAP = {"u": "u_t", "v": "v_t", "u_x": "u_xt", "v_x": "v_xt"}


def total_derivative(e: Expr, wrt: str) -> Expr:
    """Total derivative D_t or D_x on the jet space."""
    table = _DX_MAP if wrt == "x" else _DT_MAP
    out = diff(e, wrt)
    for w in e.free_symbols:
        if w in table:
            out = out + Sym(table[w]) * diff(e, w)
        elif w in ("u_xx", "v_xx", "u_xt", "v_xt") or (wrt == "t" and w in ("u_t", "v_t")):
            raise ExprError(f"total derivative of {w} is outside the prolongation order")
    return simplify(out)


def prolong1(X: LieOperator) -> dict:
    """First prolongation coefficients, including the free-surface slopes."""
    xi0, xi1 = X.xi0, X.xi1
    out = {}
    for w, eta in (("u", X.eta_u), ("v", X.eta_v)):
        wt, wx = Sym(f"{w}_t"), Sym(f"{w}_x")
        out[f"{w}_t"] = simplify(total_derivative(eta, "t") - wt * total_derivative(xi0, "t")
                                 - wx * total_derivative(xi1, "t"))
        out[f"{w}_x"] = simplify(total_derivative(eta, "x") - wt * total_derivative(xi0, "x")
                                 - wx * total_derivative(xi1, "x"))
    St, Sx = Sym("S_t"), Sym("S_x")
    out["S_t"] = simplify(-St * diff(xi0, "t") - Sx * diff(xi1, "t"))
    out["S_x"] = simplify(-St * diff(xi0, "x") - Sx * diff(xi1, "x"))
    return out


def prolong2_xx(X: LieOperator, first: Optional[dict] = None) -> dict:
    """Second-order coefficients for u_xx and v_xx (requires xi0 = xi0(t))."""
    first = first or prolong1(X)
    if "x" in X.xi0.free_symbols:
        raise ExprError("second prolongation implemented for xi0 = xi0(t) only")
    dxi1 = total_derivative(X.xi1, "x")
    return {f"{w}_xx": simplify(total_derivative(first[f"{w}_x"], "x") - Sym(f"{w}_xx") * dxi1)
            for w in ("u", "v")}


def velocity_coefficient(X: LieOperator, first: Optional[dict] = None) -> Expr:
    """Induced coefficient on the front velocity V = -S_t / S_x."""
    first = first or prolong1(X)
    St, Sx = Sym("S_t"), Sym("S_x")
    quotient = (-first["S_t"] * Sx + St * first["S_x"]) / (Sx * Sx)
    return simplify(substitute(quotient, {"S_t": -Sym("V") * Sx}))


# ---------------------------------------------------------------------------
# invariance check

@dataclass
class ConditionVerdict:
    item: str
    condition: str
    passed: bool
    residual: float = 0.0
    expression: str = "0"
    symbolic: bool = True
    flagged: bool = False
    note: str = ""

    def as_row(self) -> dict:
        return {"item": self.item, "condition": self.condition,
                "verdict": ("pass" if self.passed else "fail") + ("*" if self.flagged else ""),
                "residual": self.residual, "expression": self.expression, "note": self.note}


@dataclass
class InvarianceReport:
    operator: LieOperator
    verdicts: list

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    @property
    def failures(self) -> list:
        return [v for v in self.verdicts if not v.passed]

    def verdict(self, condition: str) -> ConditionVerdict:
        for v in self.verdicts:
            if v.condition == condition:
                return v
        raise KeyError(condition)


_SAMPLE_SETS = {
    "x": (0.37, 1.9), "V": (-1.3, 0.6, 2.2), "u_x": (-0.8, 1.7), "v_x": (-0.6, 1.4),
    "u_xx": (-0.4, 1.1), "v_xx": (-0.7, 0.9), "S_x": (0.8, -1.6), "u_t": (0.3,), "v_t": (0.5,),
}


def _interior(lo, hi, n):
    return np.linspace(lo, hi, n + 2)[1:-1]


def _sample_points(symbols, P: CanonicalProblem):
    axes = {}
    for s in sorted(symbols):
        if s == "t":
            axes[s] = np.linspace(*T_SAMPLE, N_GRID)
        elif s == "u":
            axes[s] = _interior(*P.u_range, N_GRID)
        elif s == "v":
            axes[s] = _interior(*P.v_range, 3)
        elif s in _SAMPLE_SETS:
            axes[s] = np.array(_SAMPLE_SETS[s], dtype=float)
        else:
            axes[s] = np.array([0.7, 1.3])
    names = list(axes)
    if not names:
        return {}
    mesh = np.meshgrid(*[axes[n] for n in names], indexing="ij")
    return {n: m.ravel() for n, m in zip(names, mesh)}


def _terms_scale(e: Expr, pts) -> np.ndarray:
    terms = e.terms if isinstance(e, Add) else (e,)
    scale = 0.0
    for term in terms:
        val = np.asarray(evaluate_lenient(term, pts), dtype=float)
        scale = scale + np.abs(val)
    return scale


def judge_residual(expr: Expr, P: CanonicalProblem, item: str, condition: str,
                   tol: float = RESIDUAL_TOL) -> ConditionVerdict:
    """Symbolic zero test with a sampled fallback on the (t, u, ...) grid."""
    expr = simplify(expr)
    text = str(expr)
    if isinstance(expr, Const):
        r = abs(float(expr.value))
        if r == 0:
            return ConditionVerdict(item, condition, True, 0.0, text, True)
        passed = r <= tol
        return ConditionVerdict(item, condition, passed, r, text, True, passed,
                                "numerically zero, not symbolically" if passed else "")
    pts = _sample_points(expr.free_symbols, P)
    vals = np.asarray(evaluate_lenient(expr, pts), dtype=float)
    vals = vals * np.ones(len(next(iter(pts.values()))))
    scale = _terms_scale(expr, pts) * np.ones_like(vals)
    ok = np.isfinite(vals) & np.isfinite(scale)
    if not np.any(ok):
        return ConditionVerdict(item, condition, False, math.nan, text, False, True,
                                "residual not finite on the sample grid")
    r = float(np.max(np.abs(vals[ok])))
    bound = tol * np.maximum(1.0, scale[ok])
    passed = bool(np.all(np.abs(vals[ok]) <= bound))
    note = "numerically zero, not symbolically" if passed else ""
    if ok.sum() < ok.size:
        note = (note + "; " if note else "") + f"{ok.size - ok.sum()} non-finite samples dropped"
    return ConditionVerdict(item, condition, passed, r, text, False, passed, note)


def _apply(X: LieOperator, jets: dict, B: Expr) -> Expr:
    """X^(k) applied to B (all coordinates present in B)."""
    out = X.xi0 * diff(B, "t") + X.xi1 * diff(B, "x") + X.eta_u * diff(B, "u") \
        + X.eta_v * diff(B, "v")
    for name, coeff in jets.items():
        if name in B.free_symbols:
            out = out + coeff * diff(B, name)
    return simplify(out)


def _on_manifold(expr: Expr, B: Expr, var: str) -> Expr:
    """Restrict expr to B = 0 by solving the (affine) condition for var."""
    a, b = coefficient_of(B, var)
    return simplify(substitute(expr, {var: -b / a}))


def boundary_conditions(P: CanonicalProblem) -> list:
    """(item, name, B, variable solved on the manifold) for the free boundaries."""
    ux, vx, V = Sym("u_x"), Sym("v_x"), Sym("V")
    d1m = simplify(substitute(P.d1, {"u": P.u_m}))
    d2m = simplify(substitute(P.d2, {"v": P.v_m}))
    r2m = simplify(substitute(P.rhohat2, {"v": P.v_m}))
    return [
        ("d", "S1_flux", P.d1 * ux - P.rhohat1 * P.L_v * V + P.qhat, "u_x"),
        ("d", "S1_velocity", V - P.hhat, "V"),
        ("d", "S2_stefan", d2m * vx - d1m * ux - r2m * P.L_m * V, "v_x"),
        ("d", "S2_u_melt", u - P.u_m, "u"),
        ("d", "S2_v_melt", v - P.v_m, "v"),
    ]


def _limit_at_zero(e: Expr) -> float:
    """Value of e(y) as y -> 0+, sampled in the other variables."""
    e = simplify(e)
    y0 = simplify(substitute(e, {"y": 0})) if "y" in e.free_symbols else e
    try:
        if y0.free_symbols:
            pts = {s: np.array([0.4, 1.7, 3.1]) for s in y0.free_symbols}
            vals = np.asarray(evaluate_lenient(y0, pts), dtype=float)
        else:
            vals = np.asarray(evaluate_lenient(y0, {}), dtype=float)
        if np.all(np.isfinite(vals)):
            return float(np.max(np.abs(vals)))
    except ExprError:
        pass
    worst = 0.0
    for y in (1e-6, 1e-9):
        pts = {s: np.array([0.4, 1.7, 3.1]) for s in e.free_symbols - {"y"}}
        pts["y"] = y
        vals = np.asarray(evaluate_lenient(e, pts), dtype=float)
        worst = float(np.max(np.abs(vals))) if np.all(np.isfinite(vals)) else math.inf
    return worst


def check_invariance(X: LieOperator, P: CanonicalProblem) -> InvarianceReport:
    """Test every item of the invariance definition for ``X`` and ``P``.

    (a) the heat equations, via the second prolongation on their solution
    manifolds; (b), (c) are vacuous (no fixed boundaries); (d) the five
    conditions on the free surfaces S1, S2; (e), (f) the far-field
    condition after the change of variable y = 1/x.
    """
    first = prolong1(X)
    verdicts = []

    # (a) basic equations
    try:
        second = prolong2_xx(X, first)
        jets = {**first, **second}
        for w, d in (("u", P.d1), ("v", P.d2)):
            wt, wx, wxx = Sym(f"{w}_t"), Sym(f"{w}_x"), Sym(f"{w}_xx")
            dd = diff(d, w)
            E = wt - d * wxx - dd * wx * wx
            R = _apply(X, {k: val for k, val in jets.items() if k != "S_t" and k != "S_x"}, E)
            R = simplify(substitute(R, {"u_t": P.d1 * Sym("u_xx") + diff(P.d1, "u") * Sym("u_x") ** 2,
                                        "v_t": P.d2 * Sym("v_xx") + diff(P.d2, "v") * Sym("v_x") ** 2}))
            verdicts.append(judge_residual(R, P, "a", f"equation_{w}", tol=1e-8))
    except ExprError as exc:
        verdicts.append(ConditionVerdict("a", "equations", True, 0.0, "", False, True,
                                         f"not re-verified: {exc}"))

    verdicts.append(ConditionVerdict("b", "fixed_boundaries", True, note="vacuous: no fixed boundaries"))
    verdicts.append(ConditionVerdict("c", "fixed_boundary_conditions", True,
                                     note="vacuous: no fixed boundaries"))

    # (d) free-boundary conditions
    jets = {"u_x": first["u_x"], "v_x": first["v_x"], "u_t": first["u_t"], "v_t": first["v_t"],
            "V": velocity_coefficient(X, first)}
    for item, name, B, var in boundary_conditions(P):
        B = simplify(B)
        R = _on_manifold(_apply(X, jets, B), B, var)
        verdicts.append(judge_residual(R, P, item, name))

    # (e), (f) far field x = +inf expressed through y = 1/x
    y = Sym("y")
    xi1_star = simplify(-y * y * substitute(X.xi1, {"x": 1 / y}))
    r = _limit_at_zero(xi1_star)
    verdicts.append(ConditionVerdict("e", "far_field_manifold", r < RESIDUAL_TOL, r,
                                     str(xi1_star)))
    eta_star = simplify(substitute(X.eta_v, {"x": 1 / y, "v": P.v_inf}))
    r = _limit_at_zero(eta_star)
    verdicts.append(ConditionVerdict("f", "far_field_value", r < RESIDUAL_TOL, r, str(eta_star)))
    return InvarianceReport(X, verdicts)


# ---------------------------------------------------------------------------
# admission

RESTRICTIONS = {"X1": "qhat = q(u), hhat = h(u)",
                "X2": "qhat = q(u)/sqrt(t), hhat = h(u)/sqrt(t)"}


@dataclass
class AdmittedForm:
    form: str
    restriction: str
    operator: LieOperator


@dataclass
class RejectedOperator:
    operator_label: str
    item: Optional[str]
    condition: str
    residual: float
    reason: str = ""
    failed_conditions: tuple = ()


@dataclass
class AdmissionResult:
    table_case: Optional[int]
    classes: tuple
    admitted: list = field(default_factory=list)
    rejected: list = field(default_factory=list)
    reports: dict = field(default_factory=dict)
    linear: bool = False
    notes: list = field(default_factory=list)

    def forms(self) -> set:
        return {a.form for a in self.admitted}

    def candidate_labels(self) -> list:
        return [a.form for a in self.admitted] + [r.operator_label for r in self.rejected]

    def rows(self) -> list:
        rows = []
        for label, rep in self.reports.items():
            for v in rep.verdicts:
                rows.append({"operator": label, **v.as_row()})
        return rows

    def to_dict(self) -> dict:
        return {
            "table_case": self.table_case,
            "classes": [str(c) for c in self.classes],
            "linear": self.linear,
            "admitted": [{"form": a.form, "restriction": a.restriction,
                          "operator": a.operator.label} for a in self.admitted],
            "rejected": [{"operator": r.operator_label, "item": r.item, "condition": r.condition,
                          "residual": _finite(r.residual), "reason": r.reason,
                          "failed_conditions": list(r.failed_conditions)}
                         for r in self.rejected],
            "notes": list(self.notes),
        }


def _finite(x):
    return x if isinstance(x, float) and math.isfinite(x) else (None if isinstance(x, float) else x)


def classify_problem(P: CanonicalProblem) -> tuple:
    c1 = classify_diffusivity(P.d1, "u", domain=P.u_range)
    c2 = classify_diffusivity(P.d2, "v", domain=P.v_range)
    return c1, c2


def _reject(label, report: InvarianceReport) -> RejectedOperator:
    fails = report.failures
    f = fails[0]
    return RejectedOperator(label, f.item, f.condition, f.residual, f.expression,
                            tuple(v.condition for v in fails))


def admitted_symmetries(P: CanonicalProblem, betas: Sequence = ()) -> AdmissionResult:
    """Decide which candidate generators the boundary value problem admits.

    ``betas`` are optional user-supplied coefficients beta(t, x) to test
    from the infinite family of the linear-phase case.
    """
    c1, c2 = classify_problem(P)
    try:
        family = classify_mai(c1, c2)
        result = AdmissionResult(family.table_case, (c1, c2))
    except UnsupportedCaseError as exc:
        family = OperatorFamily(0, PRINCIPAL, classes=(c1, c2))
        result = AdmissionResult(None, (c1, c2), linear=True,
                                 notes=[f"{exc}; only the principal algebra is examined"])

    rep_t = check_invariance(D_T, P)
    rep_x = check_invariance(D_X, P)
    result.reports["d_t"] = rep_t
    result.reports["d_x"] = rep_x
    if rep_t.passed and rep_x.passed:
        result.admitted.append(AdmittedForm("X1", RESTRICTIONS["X1"],
                                            LieOperator(ONE, ONE, label="d_t + mu d_x")))
    else:
        result.rejected.append(_reject("X1", rep_t if not rep_t.passed else rep_x))
    result.rejected.append(RejectedOperator("d_x", None, "non-physical", 0.0,
                                            "pure space translation admits no moving fronts"))

    rep2 = check_invariance(SCALING, P)
    result.reports["X2"] = rep2
    if rep2.passed:
        result.admitted.append(AdmittedForm("X2", RESTRICTIONS["X2"], SCALING))
    else:
        result.rejected.append(_reject("X2", rep2))

    for op in family.extensions:
        rep = check_invariance(op, P)
        result.reports[op.label] = rep
        if rep.passed:
            result.admitted.append(AdmittedForm(op.label, "", op))
        else:
            result.rejected.append(_reject(op.label, rep))

    if family.infinite_family:
        w = "u" if family.mirrored else "v"
        if not betas:
            wm, winf = (P.u_m, None) if family.mirrored else (P.v_m, P.v_inf)
            reason = (f"eta^{w} = beta(t,x) must vanish on {w} = {wm}"
                      + (f" and at x = +inf where v = {winf}" if winf is not None else "")
                      + "; only beta = 0 survives")
            result.rejected.append(RejectedOperator(family.infinite_family, "d",
                                                    f"S2_{w}_melt", math.nan, reason))
        for i, beta in enumerate(betas):
            beta = as_expr(beta)
            op = LieOperator(eta_u=beta if w == "u" else ZERO, eta_v=beta if w == "v" else ZERO,
                             label=f"({beta}) d_{w}")
            rep = check_invariance(op, P)
            result.reports[op.label] = rep
            if rep.passed and not beta.is_zero():
                result.admitted.append(AdmittedForm(op.label, "", op))
            elif not rep.passed:
                result.rejected.append(_reject(op.label, rep))
    return result


def table_basis(case: int, n=Fraction(2), m=Fraction(3)) -> list:
    """Reference operator lists of the classification table (unshifted patterns)."""
    two_n = Fraction(2) / n if isinstance(n, Fraction) else 2.0 / n
    two_m = Fraction(2) / m if isinstance(m, Fraction) else 2.0 / m
    ext = {
        1: [],
        2: [LieOperator(eta_v=v)],
        3: [LieOperator(xi1=x, eta_u=Const(2), eta_v=Const(2))],
        4: [LieOperator(xi1=x, eta_u=Const(2), eta_v=simplify(Const(two_m) * v))],
        5: [LieOperator(xi1=x, eta_u=simplify(Const(two_n) * u), eta_v=simplify(Const(two_m) * v))],
        6: [LieOperator(xi1=x, eta_u=simplify(Const(Fraction(-3, 2)) * u),
                        eta_v=simplify(Const(Fraction(-3, 2)) * v)),
            LieOperator(xi1=x * x, eta_u=simplify(-3 * x * u), eta_v=simplify(-3 * x * v))],
    }[case]
    return list(PRINCIPAL) + ext


def candidate_combinations(family: OperatorFamily, coefficients=(1.0, -0.5)) -> list:
    """A few linear combinations of extension operators with the principal ones."""
    out = []
    for ext in family.extensions:
        for a, b in itertools.product(coefficients, repeat=2):
            out.append(ext + D_T.scaled(a) + SCALING.scaled(b))
    return out
