"""Reduced ODE problems for traveling-wave and self-similar solutions.

Under ``X1 = d_t + mu d_x`` the ansatz ``u = u(xi), xi = x - mu t`` turns the
heat equations into ``(d(w) w')' + mu w' = 0``; under ``X2 = 2t d_t + x d_x``
the ansatz ``u = u(omega), omega = x / sqrt(t)`` gives
``(d(w) w')' + (omega/2) w' = 0``.  Both are kept in conserved form with
state ``(w, d(w) w')``.

The first front sits at ``xi = 0`` for traveling waves (translation gauge)
and at ``omega = omega1`` for self-similar solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .expr import Expr, diff, simplify, substitute, to_callable
from .problem import CanonicalProblem
from .symmetry import AdmissionResult, AdmittedForm, admitted_symmetries

TRAVELING_WAVE = "TravelingWave"
SELF_SIMILAR = "SelfSimilar"


class ContractError(ValueError):
    pass


class ReconstructionDomainError(ValueError):
    pass


def _fn(e: Expr, s: str) -> Callable[[float], float]:
    return to_callable(simplify(e), [s])


@dataclass
class ReducedBVP:
    kind: str
    problem: CanonicalProblem
    d1: Callable
    d2: Callable
    d1p: Callable
    d2p: Callable
    rho1: Callable
    rho2: Callable
    q: Callable
    h: Callable
    q_expr: Expr
    h_expr: Expr
    parameters: tuple
    variable: str
    residuals: list = field(default_factory=list)

    @property
    def u_m(self) -> float:
        return self.problem.u_m

    @property
    def v_m(self) -> float:
        return self.problem.v_m

    @property
    def v_inf(self) -> float:
        return self.problem.v_inf

    @property
    def L_v(self) -> float:
        return self.problem.L_v

    @property
    def L_m(self) -> float:
        return self.problem.L_m

    def advection(self, param: Optional[float] = None) -> Callable[[float], float]:
        """Coefficient c(s) in (d w')' + c(s) w' = 0."""
        if self.kind == TRAVELING_WAVE:
            mu = float(param)
            return lambda s: mu
        return lambda s: 0.5 * s

    def rhs(self, phase: int, param: Optional[float] = None) -> Callable:
        """Right-hand side for the state (w, flux = d(w) w')."""
        d = self.d1 if phase == 1 else self.d2
        if self.kind == TRAVELING_WAVE:
            mu = float(param)

            def f(s, y):
                wp = y[1] / d(y[0])
                return (wp, -mu * wp)
        else:
            def f(s, y):
                wp = y[1] / d(y[0])
                return (wp, -0.5 * s * wp)
        return f

    def front_velocity(self, param: float) -> float:
        """Velocity factor appearing in the front conditions (mu or omega/2)."""
        return float(param) if self.kind == TRAVELING_WAVE else 0.5 * float(param)

    def describe(self) -> str:
        P = self.problem
        s = self.variable
        c = "mu" if self.kind == TRAVELING_WAVE else f"({s}/2)"
        lines = [
            f"{self.kind} reduction in {s}; unknowns {', '.join(self.parameters)}",
            f"  phase 1: (d1(u) u')' + {c} u' = 0,  d1(u) = {P.d1}",
            f"  phase 2: (d2(v) v')' + {c} v' = 0,  d2(v) = {P.d2}",
            f"  q(u) = {self.q_expr},  h(u) = {self.h_expr}",
        ]
        lines += [f"  {r['location']}: {r['name']}: {r['equation']}" for r in self.residuals]
        return "\n".join(lines)

    def to_dict(self) -> dict:
        P = self.problem
        return {
            "kind": self.kind,
            "variable": self.variable,
            "parameters": list(self.parameters),
            "ode_phase1": f"(d1(u)*u')' + c*u' = 0, d1 = {P.d1}",
            "ode_phase2": f"(d2(v)*v')' + c*v' = 0, d2 = {P.d2}",
            "advection": "mu" if self.kind == TRAVELING_WAVE else f"{self.variable}/2",
            "q": str(self.q_expr),
            "h": str(self.h_expr),
            "constants": {"u_m": P.u_m, "v_m": P.v_m, "v_inf": P.v_inf,
                          "L_v": P.L_v, "L_m": P.L_m},
            "residuals": list(self.residuals),
        }


def _residual_table(kind: str) -> list:
    if kind == TRAVELING_WAVE:
        a, b, vel = "xi = 0", "xi = delta", "mu"
        far = "xi = +inf"
    else:
        a, b, vel = "omega = omega1", "omega = omega2", "omega2/2"
        far = "omega = +inf"
    vel1 = "mu" if kind == TRAVELING_WAVE else "omega1/2"
    return [
        {"name": "surface_flux", "location": a,
         "equation": f"d1(u) u' - (rho1(u) L_v {vel1} - q(u)) = 0"},
        {"name": "surface_velocity", "location": a, "equation": f"{vel1} - h(u) = 0"},
        {"name": "stefan", "location": b,
         "equation": f"d2(v_m) v' - d1(u_m) u' - rho2(v_m) L_m {vel} = 0"},
        {"name": "u_melt", "location": b, "equation": "u - u_m = 0"},
        {"name": "v_melt", "location": b, "equation": "v - v_m = 0"},
        {"name": "far_field", "location": far, "equation": "v - v_inf = 0"},
    ]


def _form_name(form) -> str:
    if isinstance(form, AdmittedForm):
        return form.form
    return str(form)


def reduce(P: CanonicalProblem, form: Union[str, AdmittedForm],
           admission: Optional[AdmissionResult] = None) -> ReducedBVP:
    """Build the reduced BVP for an admitted operator form ("X1" or "X2")."""
    name = _form_name(form)
    if name not in ("X1", "X2"):
        raise ContractError(f"no reduction is defined for operator {name!r}")
    admission = admission if admission is not None else admitted_symmetries(P)
    if name not in admission.forms():
        raise ContractError(f"operator {name} is not admitted by this problem")
    kind = TRAVELING_WAVE if name == "X1" else SELF_SIMILAR
    q_expr = simplify(substitute(P.qhat, {"t": 1}))
    h_expr = simplify(substitute(P.hhat, {"t": 1}))
    return ReducedBVP(
        kind=kind, problem=P,
        d1=_fn(P.d1, "u"), d2=_fn(P.d2, "v"),
        d1p=_fn(diff(P.d1, "u"), "u"), d2p=_fn(diff(P.d2, "v"), "v"),
        rho1=_fn(P.rhohat1, "u"), rho2=_fn(P.rhohat2, "v"),
        q=_fn(q_expr, "u"), h=_fn(h_expr, "u"),
        q_expr=q_expr, h_expr=h_expr,
        parameters=("delta", "mu") if kind == TRAVELING_WAVE else ("omega1", "omega2"),
        variable="xi" if kind == TRAVELING_WAVE else "omega",
        residuals=_residual_table(kind),
    )


# ---------------------------------------------------------------------------
# reconstruction

def fronts(R: ReducedBVP, sol, t):
    """Positions (S1, S2) of the fronts at time t."""
    t = np.asarray(t, dtype=float)
    if R.kind == TRAVELING_WAVE:
        mu, delta = sol.params["mu"], sol.params["delta"]
        return mu * t, mu * t + delta
    if np.any(t <= 0):
        raise ReconstructionDomainError("self-similar reconstruction needs t > 0")
    r = np.sqrt(t)
    return sol.params["omega1"] * r, sol.params["omega2"] * r


def invariant(R: ReducedBVP, sol, t, x):
    if R.kind == TRAVELING_WAVE:
        return np.asarray(x, dtype=float) - sol.params["mu"] * np.asarray(t, dtype=float)
    return np.asarray(x, dtype=float) / np.sqrt(np.asarray(t, dtype=float))


def reconstruct(R: ReducedBVP, sol, t: float, x: float):
    """(u, v, S1, S2) at one point; the absent phase is reported as nan.

    Beyond the end of the computed phase-2 profile v is taken as v_inf.
    """
    S1, S2 = (float(a) for a in fronts(R, sol, t))
    s = float(invariant(R, sol, t, x))
    s1 = float(invariant(R, sol, t, S1))
    if s < s1 - 1e-14 * max(1.0, abs(s1)):
        raise ReconstructionDomainError(f"x = {x} lies left of the surface S1 = {S1}")
    if x <= S2:
        return float(sol.u(s)), math.nan, S1, S2
    return math.nan, float(sol.v(s)), S1, S2


def reconstruct_field(R: ReducedBVP, sol, phase: int, t, x):
    """Vectorized phase field (no domain checks)."""
    s = invariant(R, sol, t, x)
    f = sol.u if phase == 1 else sol.v
    return f(s)
