"""Independent checks of reduced solutions.

* closed-form constant-diffusivity profiles (erf/erfc and exponentials),
* finite-difference residuals of the heat equations on reconstructed fields,
* a front-tracking simulation of the full free-boundary problem with both
  phases mapped onto fixed reference intervals (Landau transform).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special

from .expr import Const, Pow, Sym, substitute, to_callable
from .problem import CanonicalProblem
from .reduction import SELF_SIMILAR, TRAVELING_WAVE, ReducedBVP, fronts, reconstruct_field
from .solver import HInverse, ShootingConfig, SolutionResult


class ContractError(ValueError):
    pass


class GridError(ValueError):
    pass


class SimulationError(RuntimeError):
    def __init__(self, message: str, state: Optional[dict] = None):
        super().__init__(message)
        self.state = state or {}


# ---------------------------------------------------------------------------
# closed forms

@dataclass
class AnalyticProfiles:
    kind: str
    params: dict
    coefficients: dict
    u: Callable
    v: Callable


def analytic_constant_case(P: CanonicalProblem, kind: str, params: dict,
                           u_surface: Optional[float] = None) -> AnalyticProfiles:
    """Closed-form profiles for constant d1, d2 at given front coordinates.

    Self-similar: ``u = a1 + b1 erf(w / (2 sqrt d1))`` through u(omega1) and
    u(omega2) = u_m, ``v = v_inf + (v_m - v_inf) erfc(w/(2 sqrt d2)) /
    erfc(omega2/(2 sqrt d2))``.  Traveling wave: ``u = A + B exp(-mu xi/d1)``
    through u(0) and u(delta) = u_m, ``v = v_inf + (v_m - v_inf)
    exp(-mu (xi - delta)/d2)``.  The surface value defaults to h^{-1} of
    the surface velocity.
    """
    if not (isinstance(P.d1, Const) and isinstance(P.d2, Const)):
        raise ContractError("analytic profiles need constant d1 and d2")
    d1, d2 = float(P.d1.value), float(P.d2.value)
    dv = P.v_m - P.v_inf
    if u_surface is None:
        h = to_callable(substitute(P.hhat, {"t": 1}), ["u"])
        fake = type("R", (), {"h": h, "problem": P})
        hinv = HInverse(fake, ShootingConfig())
        vel = params["mu"] if kind == TRAVELING_WAVE else 0.5 * params["omega1"]
        u_surface = hinv(vel)
    if kind == SELF_SIMILAR:
        w1, w2 = params["omega1"], params["omega2"]
        k1, k2 = 2 * math.sqrt(d1), 2 * math.sqrt(d2)
        e1, e2 = math.erf(w1 / k1), math.erf(w2 / k1)
        b1 = (P.u_m - u_surface) / (e2 - e1)
        a1 = P.u_m - b1 * e2
        c2 = dv / special.erfc(w2 / k2)

        def u(s):
            return a1 + b1 * special.erf(np.asarray(s, dtype=float) / k1)

        def v(s):
            return P.v_inf + c2 * special.erfc(np.asarray(s, dtype=float) / k2)

        coeff = {"a1": a1, "b1": b1, "a2": P.v_inf, "b2": c2}
    elif kind == TRAVELING_WAVE:
        mu, delta = params["mu"], params["delta"]
        r1, r2 = mu / d1, mu / d2
        B = (P.u_m - u_surface) / (math.exp(-r1 * delta) - 1.0)
        A = u_surface - B

        def u(s):
            return A + B * np.exp(-r1 * np.asarray(s, dtype=float))

        def v(s):
            return P.v_inf + dv * np.exp(-r2 * (np.asarray(s, dtype=float) - delta))

        coeff = {"A": A, "B": B, "a2": P.v_inf, "b2": dv}
    else:
        raise ContractError(f"unknown kind {kind!r}")
    return AnalyticProfiles(kind, dict(params), coeff, u, v)


# ---------------------------------------------------------------------------
# samplers

class SolutionSampler:
    """Fields and fronts of a reduced solution in (t, x)."""

    def __init__(self, R: ReducedBVP, sol):
        self.R, self.sol, self.kind = R, sol, R.kind

    def fronts(self, t):
        return fronts(self.R, self.sol, t)

    def field(self, phase: int, t, x):
        return reconstruct_field(self.R, self.sol, phase, t, x)

    def velocity(self, k: int, t):
        p = self.sol.params
        if self.kind == TRAVELING_WAVE:
            return p["mu"] + 0 * np.asarray(t, dtype=float)
        w = p["omega1"] if k == 1 else p["omega2"]
        return w / (2 * np.sqrt(t))


class AnalyticSampler(SolutionSampler):
    def __init__(self, R: ReducedBVP, profiles: AnalyticProfiles):
        sol = type("S", (), {})()
        sol.params = profiles.params
        sol.u, sol.v = profiles.u, profiles.v
        super().__init__(R, sol)


# ---------------------------------------------------------------------------
# PDE residual

@dataclass
class GridSpec:
    t_range: tuple = (1.0, 2.0)
    n_t: int = 50
    n_x: int = 50
    h: float = 1e-3
    ht: Optional[float] = None
    band: float = 3.0
    far_length: float = 3.0


def _conserved_residual(d: Callable, f: Callable, t, x, h, ht):
    """u_t - (d(u) u_x)_x by central, flux-difference stencils."""
    u0 = f(t, x)
    up, um = f(t, x + h), f(t, x - h)
    Fp = d(0.5 * (up + u0)) * (up - u0) / h
    Fm = d(0.5 * (u0 + um)) * (u0 - um) / h
    ut = (f(t + ht, x) - f(t - ht, x)) / (2 * ht)
    return ut - (Fp - Fm) / h


def pde_residual(P: CanonicalProblem, sampler, grid: Optional[GridSpec] = None) -> dict:
    """Max |u_t - (d1 u_x)_x| and |v_t - (d2 v_x)_x| away from the fronts."""
    grid = grid or GridSpec()
    h = grid.h
    band = grid.band * h
    d1 = to_callable(P.d1, ["u"], vectorized=True)
    d2 = to_callable(P.d2, ["v"], vectorized=True)
    ts = np.linspace(*grid.t_range, grid.n_t)
    ht = grid.ht
    if ht is None:
        # fast fronts: shrink the time step so they stay inside the band
        f0 = np.array(sampler.fronts(ts), dtype=float)
        f1 = np.array(sampler.fronts(ts + h), dtype=float)
        vmax = float(np.max(np.abs(f1 - f0))) / h
        ht = h / max(1.0, 2.0 * vmax)
    if np.any(ts - ht <= 0) and sampler.kind == SELF_SIMILAR:
        raise GridError("time stencil reaches t <= 0")
    out = {}
    for phase, d in ((1, d1), (2, d2)):
        worst = 0.0
        for t in ts:
            S1, S2 = (float(a) for a in sampler.fronts(t))
            # fronts move during the time stencil; keep the band clear of them
            drift = max(abs(float(sampler.fronts(t + ht)[k]) - (S1, S2)[k]) +
                        abs(float(sampler.fronts(t - ht)[k]) - (S1, S2)[k]) for k in (0, 1))
            if drift + h >= band:
                raise GridError("fronts move across the exclusion band within one time stencil")
            if phase == 1:
                lo, hi = S1 + band, S2 - band
            else:
                lo, hi = S2 + band, S2 + band + grid.far_length
            if hi <= lo:
                raise GridError(f"phase {phase} strip narrower than the exclusion band at t = {t}")
            x = np.linspace(lo, hi, grid.n_x)
            f = (lambda tt, xx, ph=phase: sampler.field(ph, tt, xx))
            r = _conserved_residual(d, f, t, x, h, ht)
            if not np.all(np.isfinite(r)):
                raise GridError(f"sampler undefined on the phase-{phase} stencil at t = {t}")
            worst = max(worst, float(np.max(np.abs(r))))
        out[f"phase{phase}"] = worst
    return out


# ---------------------------------------------------------------------------
# front tracking

@dataclass
class InitialState:
    t0: float
    s1: float
    s2: float
    u: Callable
    v: Callable


def initial_from_sampler(sampler, t0: float) -> InitialState:
    s1, s2 = (float(a) for a in sampler.fronts(t0))
    return InitialState(t0, s1, s2, lambda x: sampler.field(1, t0, x),
                        lambda x: sampler.field(2, t0, x))


@dataclass
class FrontTrackResult:
    times: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    x_far: float
    n1: int
    n2: int
    steps: int
    u: np.ndarray
    v: np.ndarray
    flux_residual: float
    far_field_gap: float

    def grid(self, phase: int):
        n = self.n1 if phase == 1 else self.n2
        xi = np.linspace(0.0, 1.0, n + 1)
        if phase == 1:
            return self.s1[-1] + xi * (self.s2[-1] - self.s1[-1])
        return self.s2[-1] + xi * (self.x_far - self.s2[-1])


def _split(n_points: int, len1: float, len2: float, split: str):
    if split == "even":
        n1 = n_points // 2
    elif split == "uniform":
        n1 = int(round(n_points * len1 / (len1 + len2)))
    else:
        raise ValueError(f"unknown split rule {split!r}")
    n1 = min(max(n1, 8), n_points - 8)
    return n1, n_points - n1


def front_track(P: CanonicalProblem, init: InitialState, t_end: float, n_points: int = 400,
                x_far: Optional[float] = None, out_times: Optional[Sequence[float]] = None,
                v_far: Optional[float] = None, cfl: float = 0.4, split: str = "uniform",
                max_steps: int = 5_000_000) -> FrontTrackResult:
    """Simulate the free-boundary problem from ``init`` to ``t_end``.

    Both phases are mapped to [0, 1]: phase 1 between s1(t) and s2(t),
    phase 2 between s2(t) and the truncation point ``x_far`` where
    v = ``v_far`` (default v_inf).  The surface moves with ds1/dt = h(t, u)
    and carries the flux condition as a half-cell boundary flux; the melt
    front carries u = u_m, v = v_m and moves by the Stefan condition with
    one-sided second-order gradients.  Forward Euler in time with
    dt <= cfl * dx^2 / max d in each phase.
    """
    t0 = float(init.t0)
    if not t0 > 0 and any("t" in e.free_symbols for e in (P.qhat, P.hhat)):
        raise SimulationError("time-dependent surface laws need t0 > 0")
    if not t_end > t0:
        raise ValueError("t_end must exceed t0")
    if x_far is None:
        raise ValueError("x_far is required (see far_field_point)")
    vf = P.v_inf if v_far is None else float(v_far)
    s1, s2 = float(init.s1), float(init.s2)
    if not (s1 < s2 < x_far):
        raise SimulationError("need s1 < s2 < x_far", {"s1": s1, "s2": s2, "x_far": x_far})
    n1, n2 = _split(n_points, s2 - s1, x_far - s2, split)
    xi = np.linspace(0.0, 1.0, n1 + 1)
    eta = np.linspace(0.0, 1.0, n2 + 1)
    dxi, deta = 1.0 / n1, 1.0 / n2
    u = np.asarray(init.u(s1 + xi * (s2 - s1)), dtype=float).copy()
    v = np.asarray(init.v(s2 + eta * (x_far - s2)), dtype=float).copy()
    u[-1], v[0], v[-1] = P.u_m, P.v_m, vf
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise SimulationError("initial fields are not finite on the grid")

    d1 = to_callable(P.d1, ["u"], vectorized=True)
    d2 = to_callable(P.d2, ["v"], vectorized=True)
    d1s = to_callable(P.d1, ["u"])
    r1 = to_callable(P.rhohat1, ["u"])
    qh = to_callable(P.qhat, ["t", "u"])
    hh = to_callable(P.hhat, ["t", "u"])
    d1m, d2m = float(d1s(P.u_m)), float(to_callable(P.d2, ["v"])(P.v_m))
    rho2m = float(to_callable(P.rhohat2, ["v"])(P.v_m))
    if out_times is None:
        out_times = np.linspace(t0, t_end, 31)
    out_times = np.unique(np.clip(np.asarray(out_times, dtype=float), t0, t_end))
    T, S1, S2 = [], [], []
    t = t0
    steps = 0
    flux_res = 0.0
    xi_in = xi[1:-1]
    eta_in = eta[1:-1]
    # explicit steps shrink like a^2 as the liquid strip closes; treat a strip
    # thinner than one initial cell as crossed fronts
    a_min = dxi * (s2 - s1)

    def rates(t, u, v, s1, s2):
        a, b = s2 - s1, x_far - s2
        u0 = u[0]
        V1 = hh(t, u0)
        F0 = r1(u0) * P.L_v * V1 - qh(t, u0)
        ux2 = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * dxi * a)
        vx2 = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * deta * b)
        V2 = (d2m * vx2 - d1m * ux2) / (rho2m * P.L_m)
        da = V2 - V1
        um = 0.5 * (u[1:] + u[:-1])
        F = d1(um) * np.diff(u) / (dxi * a)
        du = np.empty_like(u)
        du[1:-1] = (F[1:] - F[:-1]) / (dxi * a) \
            + (u[2:] - u[:-2]) / (2 * dxi) * (V1 + xi_in * da) / a
        du[0] = (F[0] - F0) / (0.5 * dxi * a) + F0 / d1s(u0) * V1
        du[-1] = 0.0
        vm = 0.5 * (v[1:] + v[:-1])
        G = d2(vm) * np.diff(v) / (deta * b)
        dv = np.zeros_like(v)
        dv[1:-1] = (G[1:] - G[:-1]) / (deta * b) \
            + (v[2:] - v[:-2]) / (2 * deta) * V2 * (1 - eta_in) / b
        return du, dv, V1, V2, F0, F

    for target in out_times:
        while t < target - 1e-14 * max(1.0, abs(target)):
            a, b = s2 - s1, x_far - s2
            if a <= a_min:
                raise SimulationError("fronts crossed (s1 >= s2)",
                                      {"t": t, "s1": s1, "s2": s2, "u": u.copy(), "v": v.copy()})
            if b <= 0:
                raise SimulationError("melt front reached the truncation point",
                                      {"t": t, "s2": s2, "x_far": x_far})
            dmax1 = float(np.max(np.abs(d1(u))))
            dmax2 = float(np.max(np.abs(d2(v))))
            dt = cfl * min((dxi * a) ** 2 / dmax1, (deta * b) ** 2 / dmax2)
            dt = min(dt, target - t)
            if dt < 1e-15 * max(1.0, t):
                raise SimulationError("time step underflow", {"t": t})
            du, dv, V1, V2, F0, F = rates(t, u, v, s1, s2)
            u = u + dt * du
            v = v + dt * dv
            s1 += dt * V1
            s2 += dt * V2
            t += dt
            steps += 1
            if steps > max_steps:
                raise SimulationError("step budget exhausted", {"t": t})
        # monitors: one-sided surface flux vs the imposed value
        a = s2 - s1
        ux0 = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * dxi * a)
        F0 = r1(u[0]) * P.L_v * hh(t, u[0]) - qh(t, u[0])
        flux_res = max(flux_res, abs(d1s(u[0]) * ux0 - F0))
        T.append(t)
        S1.append(s1)
        S2.append(s2)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise SimulationError("non-finite field values", {"t": t})
    gap = abs(float(v[-2]) - vf)
    return FrontTrackResult(np.array(T), np.array(S1), np.array(S2), float(x_far), n1, n2, steps,
                            u, v, flux_res, gap)


def far_field_point(sampler, t0: float, t_end: float, tol: float = 1e-9,
                    v_inf: Optional[float] = None) -> float:
    """Truncation point with |v - v_inf| < tol at t0, carried to t_end by the ansatz."""
    s1, s2 = (float(a) for a in sampler.fronts(t0))
    v_inf = sampler.R.v_inf if v_inf is None else v_inf
    L = max(1.0, s2 - s1)
    x = s2 + L
    while abs(float(sampler.field(2, t0, x)) - v_inf) >= tol:
        x = s2 + 2 * (x - s2)
        if x - s2 > 1e5:
            raise GridError("far field never reaches v_inf")
    if sampler.kind == SELF_SIMILAR:
        return x * math.sqrt(t_end / t0)
    mu = sampler.sol.params["mu"]
    return x + mu * (t_end - t0)


# ---------------------------------------------------------------------------
# reports

@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)
    pde: dict = field(default_factory=dict)
    boundary: dict = field(default_factory=dict)
    fronts: dict = field(default_factory=dict)

    def add(self, name: str, value: float, tolerance: float, note: str = ""):
        ok = bool(math.isfinite(value) and value <= tolerance)
        self.checks.append({"name": name, "value": value, "tolerance": tolerance,
                            "passed": ok, "note": note})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def to_dict(self) -> dict:
        def clean(x):
            if isinstance(x, dict):
                return {k: clean(v) for k, v in x.items()}
            if isinstance(x, (list, tuple, np.ndarray)):
                return [clean(v) for v in x]
            if isinstance(x, (float, np.floating)):
                x = float(x)
                return x if math.isfinite(x) else None
            if isinstance(x, np.bool_):
                return bool(x)
            return x
        return clean({"passed": self.passed, "checks": self.checks, "pde_residual": self.pde,
                      "boundary": self.boundary, "fronts": self.fronts})


@dataclass
class ValidationConfig:
    pde_tol: float = 1e-6
    front_tol: float = 0.01
    boundary_tol: float = 1e-8
    t0: float = 1.0
    t_end: float = 4.0
    n_points: int = 400
    n_out: int = 31
    grid: GridSpec = field(default_factory=GridSpec)
    simulate: bool = True

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["grid"] = dict(self.grid.__dict__)
        return d


def front_error(sampler, track: FrontTrackResult) -> dict:
    pred1, pred2 = (np.asarray(a, dtype=float) for a in sampler.fronts(track.times))
    if sampler.kind == SELF_SIMILAR:
        w2 = sampler.sol.params["omega2"]
        ratio = track.s2 / np.sqrt(track.times)
        rel = np.abs(ratio - w2) / abs(w2)
        derived = ratio
    else:
        mu = sampler.sol.params["mu"]
        derived = track.s2 - mu * track.times
        rel = np.abs(track.s2 - pred2) / np.maximum(1.0, np.abs(pred2))
    return {"times": track.times, "s1": track.s1, "s2": track.s2, "s2_pred": pred2,
            "derived": derived, "rel_error": rel, "max_rel_error": float(np.max(rel)),
            "abs_error": float(np.max(np.abs(track.s2 - pred2)))}


def validate_solution(R: ReducedBVP, sol: SolutionResult,
                      cfg: Optional[ValidationConfig] = None) -> tuple:
    """Run the PDE residual, boundary and front-tracking checks.

    Returns ``(report, track)`` where ``track`` is the simulation result or
    None when simulation is disabled.
    """
    cfg = cfg or ValidationConfig()
    rep = ValidationReport()
    sampler = SolutionSampler(R, sol)
    grid = cfg.grid
    if R.kind == TRAVELING_WAVE and grid.t_range[0] <= 0:
        grid = GridSpec(**{**grid.__dict__, "t_range": (1.0, 2.0)})
    rep.pde = pde_residual(R.problem, sampler, grid)
    rep.add("pde_residual_phase1", rep.pde["phase1"], cfg.pde_tol)
    rep.add("pde_residual_phase2", rep.pde["phase2"], cfg.pde_tol)
    rep.boundary = {k: float(abs(v)) for k, v in sol.residuals.items()}
    rep.add("boundary_residual", max(rep.boundary.values()), cfg.boundary_tol)
    track = None
    if cfg.simulate:
        x_far = far_field_point(sampler, cfg.t0, cfg.t_end)
        init = initial_from_sampler(sampler, cfg.t0)
        track = front_track(R.problem, init, cfg.t_end, cfg.n_points, x_far,
                            out_times=np.linspace(cfg.t0, cfg.t_end, cfg.n_out))
        err = front_error(sampler, track)
        rep.fronts = {"max_rel_error": err["max_rel_error"], "abs_error": err["abs_error"],
                      "x_far": x_far, "steps": track.steps, "n_points": cfg.n_points,
                      "surface_flux_monitor": track.flux_residual,
                      "far_field_gap": track.far_field_gap}
        rep.add("front_trajectory", err["max_rel_error"], cfg.front_tol)
    return rep, track


def manufactured_self_similar(omega1: float = 0.5, omega2: float = 1.5, u_m: float = 1.0,
                              b: float = -5.0, v_m: float = 1.0, v_inf: float = 0.0,
                              d1: float = 1.0, d2: float = 1.0) -> CanonicalProblem:
    """Constant-diffusivity problem whose self-similar solution is known.

    ``u = u_m + b (erf(w/k1) - erf(omega2/k1))`` and the erfc profile for v,
    with ``q``, ``h`` (linear, through the origin) and ``L_m`` chosen so
    that (omega1, omega2) solve the reduced problem with rho = L_v = 1.
    """
    k1, k2 = 2 * math.sqrt(d1), 2 * math.sqrt(d2)
    u1 = u_m + b * (math.erf(omega1 / k1) - math.erf(omega2 / k1))
    du = lambda w: b * 2 / (k1 * math.sqrt(math.pi)) * math.exp(-(w / k1) ** 2)  # noqa: E731
    dv2 = -(v_m - v_inf) * 2 / (k2 * math.sqrt(math.pi)) / special.erfcx(omega2 / k2)
    L_m = (d2 * dv2 - d1 * du(omega2)) / (0.5 * omega2)
    if not L_m > 0:
        raise ValueError("chosen profile gives a non-positive melting heat")
    c = 0.5 * omega1 / u1
    q0 = 0.5 * omega1 - d1 * du(omega1)
    tf = Pow(Sym("t"), -0.5)
    lo, hi = sorted((u1, u_m))
    span = hi - lo
    return CanonicalProblem(Const(d1), Const(d2), Const(1), Const(1), Const(q0) * tf,
                            Const(c) * Sym("u") * tf,
                            u_m, v_m, v_inf, 1.0, L_m,
                            u_range=(min(0.0, lo - span), hi + span), label="manufactured")
