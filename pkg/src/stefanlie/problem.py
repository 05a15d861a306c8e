"""Physical and canonical two-phase Stefan problems and the Goodman transform.

The physical problem is written for temperatures ``T_1`` (liquid) and
``T_2`` (solid) with temperature dependent conductivities, heat capacities
and densities.  The substitution ``u = phi_1(T_1)``, ``v = phi_2(T_2)`` with
``phi_k(T) = int_0^T c_k rho_k`` turns both heat equations into standard
nonlinear diffusion equations ``w_t = (d(w) w_x)_x``; the result is a
:class:`CanonicalProblem`.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, Union

import numpy as np
from scipy import integrate, optimize

from .expr import (Expr, Func, Sym, ValidationError, as_expr, evaluate_lenient, parse,
                   simplify, substitute, to_callable)

QUAD_TOL = 1e-12
INVERSE_TOL = 1e-10


class QuadratureError(RuntimeError):
    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class RangeError(ValueError):
    pass


def _check_positive(e: Expr, symbol: str, lo: float, hi: float, name: str, n: int = 101):
    grid = np.linspace(lo, hi, n + 2)[1:-1]
    vals = np.asarray(evaluate_lenient(e, {symbol: grid, "t": 1.0}), dtype=float)
    vals = vals * np.ones_like(grid)
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        raise ValidationError(f"{name} = {e} is not strictly positive on [{lo}, {hi}]")


def _check_symbols(e: Expr, allowed: set, name: str):
    extra = e.free_symbols - allowed
    if extra:
        raise ValidationError(f"{name} may only depend on {sorted(allowed)}, got {sorted(extra)}")


@dataclass(frozen=True)
class PhysicalProblem:
    """Melting/evaporation problem in temperature variables.

    Material laws are expressions in ``T``; the surface energy flux ``Q`` and
    the surface velocity law ``H`` are expressions in ``t`` and ``T``.
    Positivity is checked by sampling ``[T_min, T_max]``.
    """

    lambda1: Expr
    c1: Expr
    rho1: Expr
    lambda2: Expr
    c2: Expr
    rho2: Expr
    L_v: float
    L_m: float
    T_m: float
    T_0: float
    Q: Expr
    H: Expr
    T_max: Optional[float] = None
    T_min: Optional[float] = None

    def __post_init__(self):
        for name in ("lambda1", "c1", "rho1", "lambda2", "c2", "rho2", "Q", "H"):
            object.__setattr__(self, name, simplify(as_expr(getattr(self, name))))
        if self.T_max is None:
            object.__setattr__(self, "T_max", self.T_m + 2.0 * max(1.0, abs(self.T_m - self.T_0)))
        if self.T_min is None:
            object.__setattr__(self, "T_min", min(0.0, self.T_0))
        if not self.T_0 < self.T_m:
            raise ValidationError(f"T_0 < T_m required, got T_0={self.T_0}, T_m={self.T_m}")
        if not self.T_max > self.T_m:
            raise ValidationError("T_max must exceed T_m")
        if self.L_v <= 0 or self.L_m <= 0:
            raise ValidationError("latent heats must be positive")
        for name in ("lambda1", "c1", "rho1", "lambda2", "c2", "rho2"):
            e = getattr(self, name)
            _check_symbols(e, {"T"}, name)
            _check_positive(e, "T", self.T_min, self.T_max, name)
        _check_symbols(self.Q, {"t", "T"}, "Q")
        _check_symbols(self.H, {"t", "T"}, "H")

    def heat_capacity(self, phase: int) -> Expr:
        """Volumetric heat capacity c_k * rho_k."""
        if phase == 1:
            return simplify(self.c1 * self.rho1)
        if phase == 2:
            return simplify(self.c2 * self.rho2)
        raise ValueError("phase must be 1 or 2")

    @property
    def T_range(self):
        return self.T_min, self.T_max


@lru_cache(maxsize=None)
def _capacity_fn(p: PhysicalProblem, phase: int):
    return to_callable(p.heat_capacity(phase), ("T",))


def phi(phase: int, T: float, p: PhysicalProblem) -> float:
    """Enthalpy-like variable ``int_0^T c_k rho_k`` by adaptive Gauss-Kronrod quadrature."""
    if T == 0:
        return 0.0
    f = _capacity_fn(p, phase)
    value, err, info = integrate.quad(f, 0.0, float(T), epsabs=QUAD_TOL, epsrel=1e-13,
                                      limit=200, full_output=True)[:3]
    if err > max(QUAD_TOL, 1e-13 * abs(value)) * 10:
        raise QuadratureError(f"quadrature did not converge (achieved {err:.3e})", err)
    return float(value)


def phi_inverse(phase: int, w: float, p: PhysicalProblem) -> float:
    """Temperature T with ``phi(phase, T) = w`` (bracketed root-find plus Newton polish)."""
    lo, hi = p.T_range
    f_lo, f_hi = phi(phase, lo, p), phi(phase, hi, p)
    if not f_lo <= w <= f_hi:
        raise RangeError(f"value {w} outside the range [{f_lo}, {f_hi}] of phi_{phase}")
    cap = _capacity_fn(p, phase)
    T = optimize.brentq(lambda z: phi(phase, z, p) - w, lo, hi, xtol=1e-14, rtol=1e-15,
                        maxiter=200)
    for _ in range(3):
        r = phi(phase, T, p) - w
        if abs(r) < 0.1 * INVERSE_TOL:
            break
        T_new = T - r / cap(T)
        if lo <= T_new <= hi:
            T = T_new
    return float(T)


@dataclass(frozen=True)
class CanonicalProblem:
    """Two-phase problem in Goodman variables.

    ``d1(u)``, ``rhohat1(u)``, ``qhat(t,u)``, ``hhat(t,u)`` describe the
    liquid phase and its evaporating surface, ``d2(v)`` and ``rhohat2(v)``
    the solid.  ``u_m``/``v_m`` are the melting values and ``v_inf`` the
    far-field value of ``v``.
    """

    d1: Expr
    d2: Expr
    rhohat1: Expr
    rhohat2: Expr
    qhat: Expr
    hhat: Expr
    u_m: float
    v_m: float
    v_inf: float
    L_v: float = 1.0
    L_m: float = 1.0
    u_range: Optional[tuple] = None
    v_range: Optional[tuple] = None
    label: str = field(default="", compare=False)

    def __post_init__(self):
        for name in ("d1", "d2", "rhohat1", "rhohat2", "qhat", "hhat"):
            object.__setattr__(self, name, simplify(as_expr(getattr(self, name))))
        for name in ("u_m", "v_m", "v_inf", "L_v", "L_m"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.u_range is None:
            object.__setattr__(self, "u_range", default_u_range(self.u_m))
        if self.v_range is None:
            lo, hi = sorted((self.v_inf, self.v_m))
            object.__setattr__(self, "v_range", (lo, hi))
        object.__setattr__(self, "u_range", tuple(float(a) for a in self.u_range))
        object.__setattr__(self, "v_range", tuple(float(a) for a in self.v_range))
        if self.L_v <= 0 or self.L_m <= 0:
            raise ValidationError("latent heats must be positive")
        if self.v_m == self.v_inf:
            raise ValidationError("v_m must differ from v_inf")
        _check_symbols(self.d1, {"u"}, "d1")
        _check_symbols(self.rhohat1, {"u"}, "rhohat1")
        _check_symbols(self.d2, {"v"}, "d2")
        _check_symbols(self.rhohat2, {"v"}, "rhohat2")
        _check_symbols(self.qhat, {"t", "u"}, "qhat")
        _check_symbols(self.hhat, {"t", "u"}, "hhat")
        _check_positive(self.d1, "u", *self.u_range, "d1")
        _check_positive(self.d2, "v", *self.v_range, "d2")

    def q(self) -> Expr:
        """Surface flux law with the time factor stripped (value at t = 1)."""
        return simplify(substitute(self.qhat, {"t": 1}))

    def h(self) -> Expr:
        return simplify(substitute(self.hhat, {"t": 1}))

    def with_(self, **changes) -> "CanonicalProblem":
        return replace(self, **changes)


def default_u_range(u_m: float) -> tuple:
    if u_m == 0:
        return (-1.0, 1.0)
    return (min(0.0, 2 * u_m), max(0.0, 2 * u_m))


def _inverse_node(phase: int, p: PhysicalProblem, symbol: str) -> Func:
    cap = p.heat_capacity(phase)
    name = f"phi{phase}_inv"

    def fn(w):
        return phi_inverse(phase, float(w), p)

    def derivative(arg: Expr) -> Expr:
        return 1 / substitute(cap, {"T": Func(name, fn, arg, derivative)})

    return Func(name, fn, Sym(symbol), derivative)


def goodman_transform(p: PhysicalProblem, u_range=None, v_range=None) -> CanonicalProblem:
    """Map a physical problem to canonical form.

    When ``c_k rho_k`` is constant the inverse substitution is linear and
    every coefficient stays an ordinary expression; otherwise the inverse is
    an opaque :class:`~stefanlie.expr.Func` node evaluated by root-finding.
    """
    inv = {}
    for phase, symbol in ((1, "u"), (2, "v")):
        cap = p.heat_capacity(phase)
        if not cap.free_symbols:
            inv[phase] = simplify(Sym(symbol) / cap)
        else:
            inv[phase] = _inverse_node(phase, p, symbol)

    def on1(e):
        return simplify(substitute(e, {"T": inv[1]}))

    def on2(e):
        return simplify(substitute(e, {"T": inv[2]}))

    u_m = phi(1, p.T_m, p)
    v_m = phi(2, p.T_m, p)
    v_inf = phi(2, p.T_0, p)
    if u_range is None:
        u_range = (phi(1, p.T_min, p), phi(1, p.T_max, p))
    if v_range is None:
        v_range = (phi(2, p.T_min, p), phi(2, p.T_max, p))
    return CanonicalProblem(
        d1=on1(p.lambda1 / (p.c1 * p.rho1)),
        d2=on2(p.lambda2 / (p.c2 * p.rho2)),
        rhohat1=on1(p.rho1),
        rhohat2=on2(p.rho2),
        qhat=on1(p.Q),
        hhat=on1(p.H),
        u_m=u_m, v_m=v_m, v_inf=v_inf, L_v=p.L_v, L_m=p.L_m,
        u_range=u_range, v_range=v_range,
    )


def transform_problem(P: CanonicalProblem, e0=1.0, e1=1.0, e2=1.0, u0=0.0, v0=0.0
                      ) -> CanonicalProblem:
    """Apply t -> e0 t, x -> e1 x, u -> e2 u + u0, v -> e2 v + v0 to ``P``.

    The same scale ``e2`` is used for both phases: the Stefan condition
    couples the fluxes of ``u`` and ``v`` with unit weight, so unequal scales
    leave the problem class.  Positive scales keep the liquid strip on the
    left.  A solution with front speed ``mu`` and strip width ``delta``
    maps to ``(e1/e0) mu`` and ``e1 delta``.
    """
    if min(e0, e1, e2) <= 0:
        raise ValueError("scale factors must be positive")
    u_back = {"u": (Sym("u") - u0) / e2}
    v_back = {"v": (Sym("v") - v0) / e2}
    t_back = {"t": Sym("t") / e0}
    k = e1 * e1 / e0

    def tr(e, back):
        return simplify(substitute(e, {**back, **t_back}))

    return CanonicalProblem(
        d1=simplify(k * tr(P.d1, u_back)),
        d2=simplify(k * tr(P.d2, v_back)),
        rhohat1=simplify(e2 * tr(P.rhohat1, u_back)),
        rhohat2=simplify(e2 * tr(P.rhohat2, v_back)),
        qhat=simplify(e1 * e2 / e0 * tr(P.qhat, u_back)),
        hhat=simplify(e1 / e0 * tr(P.hhat, u_back)),
        u_m=e2 * P.u_m + u0, v_m=e2 * P.v_m + v0, v_inf=e2 * P.v_inf + v0,
        L_v=P.L_v, L_m=P.L_m,
        u_range=tuple(e2 * a + u0 for a in P.u_range),
        v_range=tuple(e2 * a + v0 for a in P.v_range),
        label=P.label,
    )


# ---------------------------------------------------------------------------
# problem files

TIME_FACTORS = {"none": "1", "inv_sqrt_t": "t^(-1/2)"}


def canonical_from_dict(data: dict, label: str = "") -> CanonicalProblem:
    td = data.get("time_dependence", "none")
    if td not in TIME_FACTORS:
        raise ValidationError(f"time_dependence must be one of {sorted(TIME_FACTORS)}")
    factor = parse(TIME_FACTORS[td])
    try:
        return CanonicalProblem(
            d1=parse(data["d1"]), d2=parse(data["d2"]),
            rhohat1=parse(str(data.get("rho1", "1"))), rhohat2=parse(str(data.get("rho2", "1"))),
            qhat=parse(str(data["q"])) * factor, hhat=parse(str(data["h"])) * factor,
            u_m=data["u_m"], v_m=data["v_m"], v_inf=data["v_inf"],
            L_v=data.get("L_v", 1.0), L_m=data.get("L_m", 1.0),
            u_range=data.get("u_range"), v_range=data.get("v_range"), label=label,
        )
    except KeyError as exc:
        raise ValidationError(f"missing field {exc.args[0]!r} in canonical problem") from None


def physical_from_dict(data: dict) -> PhysicalProblem:
    try:
        return PhysicalProblem(
            lambda1=parse(str(data["lambda1"])), c1=parse(str(data["c1"])),
            rho1=parse(str(data["rho1"])), lambda2=parse(str(data["lambda2"])),
            c2=parse(str(data["c2"])), rho2=parse(str(data["rho2"])),
            L_v=data["L_v"], L_m=data["L_m"], T_m=data["T_m"], T_0=data["T_0"],
            Q=parse(str(data["Q"])), H=parse(str(data["H"])),
            T_max=data.get("T_max"), T_min=data.get("T_min"),
        )
    except KeyError as exc:
        raise ValidationError(f"missing field {exc.args[0]!r} in physical problem") from None


def load_problem(source: Union[str, os.PathLike, dict]):
    """Read a problem file (or already-decoded dict).

    Returns ``(physical, canonical)``; ``physical`` is None for canonical
    input.
    """
    if isinstance(source, dict):
        data, label = source, ""
    else:
        with open(source) as fh:
            data = json.load(fh)
        label = os.path.splitext(os.path.basename(str(source)))[0]
    if "canonical" in data:
        return None, canonical_from_dict(data["canonical"], label)
    if "physical" in data:
        p = physical_from_dict(data["physical"])
        c = goodman_transform(p)
        return p, replace(c, label=label)
    raise ValidationError("problem file needs a 'canonical' or 'physical' object")


def describe_problem(P: CanonicalProblem) -> dict:
    return {
        "d1": str(P.d1), "d2": str(P.d2), "rho1": str(P.rhohat1), "rho2": str(P.rhohat2),
        "qhat": str(P.qhat), "hhat": str(P.hhat), "u_m": P.u_m, "v_m": P.v_m,
        "v_inf": P.v_inf, "L_v": P.L_v, "L_m": P.L_m,
    }


def is_finite_number(x) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x)
