"""Solvers for the reduced traveling-wave and self-similar problems.

Traveling waves are solved twice: through the first integrals of both
phases (a scalar equation for the speed plus a quadrature for the strip
width) and by forward shooting with a sub-shoot for the far field.
Self-similar problems use a two-parameter residual map solved by damped
Newton, seeded from the constant-diffusivity erf surrogate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, optimize, special

from .expr import Const
from .reduction import SELF_SIMILAR, TRAVELING_WAVE, ReducedBVP


class SolverError(RuntimeError):
    """Base class for non-convergence of the reduced-problem solvers."""


class StiffnessError(SolverError):
    def __init__(self, s: float, h: float):
        super().__init__(f"step size underflow (h = {h:.3g}) at s = {s:.12g}")
        self.location = s


class InversionError(ValueError):
    pass


class NoSolutionError(SolverError):
    def __init__(self, message: str, samples=None):
        super().__init__(message)
        self.samples = samples or []


@dataclass
class ShootingConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    root_tol: float = 1e-10
    max_newton: int = 50
    far_tol: float = 1e-9
    doubling_tol: float = 1e-8
    s_max_cap: float = 1e4
    far_factor: float = 1.0
    profile_max_step: float = 0.02
    mu_cap: float = 100.0
    n_scan: int = 240
    guesses: Optional[tuple] = None
    h_range: Optional[tuple] = None

    def __post_init__(self):
        for name in ("rtol", "atol", "root_tol", "far_tol", "doubling_tol", "s_max_cap",
                     "far_factor", "profile_max_step", "mu_cap"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_newton < 1 or self.n_scan < 4:
            raise ValueError("max_newton >= 1 and n_scan >= 4 required")

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4)

_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = _A[6] + (0.0,)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)
# continuous extension of order 4 (coefficients of theta, theta^2, theta^3, theta^4)
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


@dataclass
class Event:
    """Root of g(s, y) that stops the integration."""

    g: Callable
    terminal: bool = True


@dataclass
class ODEProfile:
    s: np.ndarray
    y: np.ndarray
    f: np.ndarray
    stages: list
    event_s: Optional[float] = None
    n_rhs: int = 0

    def __call__(self, s):
        """Dense output (4th-order continuous extension)."""
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        nodes = self.s
        rising = nodes[-1] >= nodes[0]
        key = nodes if rising else -nodes
        q = s_arr if rising else -s_arr
        idx = np.clip(np.searchsorted(key, q, side="right") - 1, 0, len(nodes) - 2)
        out = np.empty((len(s_arr), self.y.shape[1]))
        for j, (i, sj) in enumerate(zip(idx, s_arr)):
            h = nodes[i + 1] - nodes[i]
            th = (sj - nodes[i]) / h if h != 0 else 0.0
            basis = _P @ np.array([th, th * th, th ** 3, th ** 4])
            out[j] = self.y[i] + h * basis @ self.stages[i]
        return out[0] if np.ndim(s) == 0 else out

    @property
    def end(self):
        return self.s[-1], self.y[-1]


def _rms(err, y0, y1, rtol, atol):
    acc = 0.0
    for e, a, b in zip(err, y0, y1):
        sc = atol + rtol * max(abs(a), abs(b))
        acc += (e / sc) ** 2
    return math.sqrt(acc / len(err))


def integrate_ode(rhs: Callable, span: Sequence[float], y0: Sequence[float],
                  cfg: Optional[ShootingConfig] = None, events: Sequence[Event] = (),
                  max_step: float = math.inf, rtol: Optional[float] = None,
                  atol: Optional[float] = None) -> ODEProfile:
    """Adaptive Dormand-Prince 5(4) integration with dense output and events.

    ``rhs(s, y)`` returns a sequence; the integration runs from ``span[0]``
    to ``span[1]`` (either direction).  A terminal event truncates the
    profile at its root.
    """
    cfg = cfg or ShootingConfig()
    rtol = cfg.rtol if rtol is None else rtol
    atol = cfg.atol if atol is None else atol
    s0, s1 = float(span[0]), float(span[1])
    direction = 1.0 if s1 >= s0 else -1.0
    n = len(y0)
    y = [float(a) for a in y0]
    s = s0
    k1 = list(rhs(s, y))
    nrhs = 1
    if not all(math.isfinite(a) for a in y + k1):
        raise SolverError(f"non-finite initial state at s = {s0}")
    # initial step from the usual derivative-scale heuristic
    d0 = math.sqrt(sum((a / (atol + rtol * abs(a))) ** 2 for a in y) / n)
    d1 = math.sqrt(sum((f / (atol + rtol * abs(a))) ** 2 for a, f in zip(y, k1)) / n)
    h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h = min(h, abs(s1 - s0), max_step)
    S, Y, F, K = [s], [tuple(y)], [tuple(k1)], []
    gvals = [ev.g(s, y) for ev in events]
    event_s = None
    while direction * (s1 - s) > 0:
        h = min(h, abs(s1 - s), max_step)
        if h < 1e-14 * max(1.0, abs(s)):
            raise StiffnessError(s, h)
        hs = direction * h
        ks = [k1]
        for i in range(1, 7):
            yi = [y[m] + hs * sum(_A[i][j] * ks[j][m] for j in range(i)) for m in range(n)]
            ks.append(list(rhs(s + _C[i] * hs, yi)))
        nrhs += 6
        y_new = yi  # stage 7 is evaluated at the 5th-order solution
        err = [hs * sum(_E[j] * ks[j][m] for j in range(7)) for m in range(n)]
        if not all(math.isfinite(a) for a in y_new + ks[6] + err):
            h *= 0.25
            continue
        en = _rms(err, y, y_new, rtol, atol)
        if en > 1.0:
            h *= max(0.2, 0.9 * en ** -0.2)
            continue
        stage = np.array(ks)
        s_new = s + hs
        if events:
            g_new = [ev.g(s_new, y_new) for ev in events]
            hit = None
            for i, (ga, gb) in enumerate(zip(gvals, g_new)):
                if events[i].terminal and ga != 0 and (ga < 0) != (gb < 0):
                    hit = i
                    break
            if hit is not None:
                yk = np.array(y)

                def local(sv, yk=yk, stage=stage, s=s, hs=hs):
                    th = (sv - s) / hs
                    return yk + hs * (_P @ np.array([th, th * th, th ** 3, th ** 4])) @ stage

                g = events[hit].g
                lo, hi = (s, s_new) if direction > 0 else (s_new, s)
                se = optimize.brentq(lambda sv: g(sv, local(sv)), lo, hi, xtol=1e-15,
                                     rtol=4 * np.finfo(float).eps)
                ye = local(se)
                fe = list(rhs(se, list(ye)))
                nrhs += 1
                # restart the last step from s to the event point for exact nodes
                S.append(se)
                Y.append(tuple(ye))
                F.append(tuple(fe))
                K.append(_rescaled_stages(rhs, s, y, se - s))
                nrhs += 6
                event_s = se
                break
            gvals = g_new
        S.append(s_new)
        Y.append(tuple(y_new))
        F.append(tuple(ks[6]))
        K.append(stage)
        s, y, k1 = s_new, y_new, ks[6]
        h *= min(5.0, max(0.2, 0.9 * en ** -0.2)) if en > 0 else 5.0
    return ODEProfile(np.array(S), np.array(Y), np.array(F), K, event_s, nrhs)


def _rescaled_stages(rhs, s, y, hs):
    """Stages of a single DOPRI step of size hs from (s, y)."""
    n = len(y)
    ks = [list(rhs(s, y))]
    for i in range(1, 7):
        yi = [y[m] + hs * sum(_A[i][j] * ks[j][m] for j in range(i)) for m in range(n)]
        ks.append(list(rhs(s + _C[i] * hs, yi)))
    return np.array(ks)


# ---------------------------------------------------------------------------
# phase profiles

class PhaseProfile:
    """Quintic Hermite interpolant of (w, w', w'') with cubic flux interpolation.

    The nodal second derivative comes from the ODE itself, so the
    interpolant is C2 and safe to difference twice.
    """

    def __init__(self, ode: ODEProfile, d: Callable, dp: Callable, c: Callable,
                 far_value: Optional[float] = None):
        order = np.argsort(ode.s)
        s = ode.s[order]
        keep = np.concatenate([[True], np.diff(s) > 0])
        self.s = s[keep]
        self.w = ode.y[order, 0][keep]
        self.flux = ode.y[order, 1][keep]
        dw = np.array([d(a) for a in self.w])
        self.wp = self.flux / dw
        cs = np.array([c(a) for a in self.s])
        self.fluxp = -cs * self.wp
        self.wpp = (self.fluxp - np.array([dp(a) for a in self.w]) * self.wp ** 2) / dw
        self.far_value = far_value

    @property
    def span(self):
        return float(self.s[0]), float(self.s[-1])

    def _locate(self, q):
        i = np.clip(np.searchsorted(self.s, q, side="right") - 1, 0, len(self.s) - 2)
        h = self.s[i + 1] - self.s[i]
        return i, h, (q - self.s[i]) / h

    def __call__(self, s):
        q = np.asarray(s, dtype=float)
        i, h, x = self._locate(q)
        x2, x3 = x * x, x * x * x
        h00 = 1 - 10 * x3 + 15 * x2 * x2 - 6 * x3 * x2
        h10 = x - 6 * x3 + 8 * x2 * x2 - 3 * x3 * x2
        h20 = 0.5 * (x2 - 3 * x3 + 3 * x2 * x2 - x3 * x2)
        h01 = 10 * x3 - 15 * x2 * x2 + 6 * x3 * x2
        h11 = -4 * x3 + 7 * x2 * x2 - 3 * x3 * x2
        h21 = 0.5 * (x3 - 2 * x2 * x2 + x3 * x2)
        out = (h00 * self.w[i] + h10 * h * self.wp[i] + h20 * h * h * self.wpp[i]
               + h01 * self.w[i + 1] + h11 * h * self.wp[i + 1] + h21 * h * h * self.wpp[i + 1])
        lo, hi = self.span
        out = np.where(q < lo - 1e-12 * max(1, abs(lo)), np.nan, out)
        if self.far_value is not None:
            out = np.where(q > hi, self.far_value, out)
        else:
            out = np.where(q > hi + 1e-12 * max(1, abs(hi)), np.nan, out)
        return float(out) if np.ndim(out) == 0 else out

    def flux_at(self, s):
        q = np.asarray(s, dtype=float)
        i, h, x = self._locate(q)
        x2, x3 = x * x, x * x * x
        out = ((2 * x3 - 3 * x2 + 1) * self.flux[i] + (x3 - 2 * x2 + x) * h * self.fluxp[i]
               + (-2 * x3 + 3 * x2) * self.flux[i + 1] + (x3 - x2) * h * self.fluxp[i + 1])
        if self.far_value is not None:
            out = np.where(q > self.span[1], 0.0, out)
        return float(out) if np.ndim(out) == 0 else out

    def table(self) -> np.ndarray:
        return np.column_stack([self.s, self.w, self.flux])

    def is_monotone(self) -> bool:
        dw = np.diff(self.w)
        return bool(np.all(dw >= -1e-14) or np.all(dw <= 1e-14))


@dataclass
class SolutionResult:
    kind: str
    params: dict
    u_profile: Optional[PhaseProfile]
    v_profile: Optional[PhaseProfile]
    residuals: dict
    converged: bool = True
    status: str = "ok"
    diagnostics: dict = field(default_factory=dict)
    roots: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    @property
    def residual_norm(self) -> float:
        vals = [abs(v) for v in self.residuals.values() if v is not None and math.isfinite(v)]
        return max(vals) if vals else 0.0

    @property
    def degenerate(self) -> bool:
        return "stationary front" in self.flags

    def u(self, s):
        return self.u_profile(s)

    def v(self, s):
        return self.v_profile(s)

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "status": self.status,
            "converged": self.converged,
            "parameters": {k: _num(v) for k, v in self.params.items()},
            "residuals": {k: _num(v) for k, v in self.residuals.items()},
            "residual_norm": _num(self.residual_norm),
            "flags": list(self.flags),
            "roots": [{k: _num(v) if isinstance(v, float) else v for k, v in r.items()}
                      for r in self.roots],
            "diagnostics": {k: _num(v) if isinstance(v, float) else v
                            for k, v in self.diagnostics.items()},
        }
        for name, prof in (("u_profile", self.u_profile), ("v_profile", self.v_profile)):
            if prof is not None:
                out[name] = {"span": [float(a) for a in prof.span], "nodes": len(prof.s),
                             "monotone": prof.is_monotone()}
        return out


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


# ---------------------------------------------------------------------------
# helpers shared by both solvers

class HInverse:
    """Monotone inverse of h on a search range."""

    def __init__(self, R: ReducedBVP, cfg: ShootingConfig, n: int = 801):
        if cfg.h_range is not None:
            lo, hi = map(float, cfg.h_range)
        else:
            a, b = R.problem.u_range
            lo, hi = a - (b - a), b + (b - a)
        grid = np.linspace(lo, hi, n)
        vals = np.array([_safe(R.h, g) for g in grid])
        ok = np.isfinite(vals)
        if not ok.any():
            raise InversionError("h is not finite on its search range")
        mid = int(np.argmin(np.abs(grid - 0.5 * sum(R.problem.u_range))))
        if not ok[mid]:
            mid = int(np.flatnonzero(ok)[0])
        i0 = mid
        while i0 > 0 and ok[i0 - 1]:
            i0 -= 1
        i1 = mid
        while i1 < n - 1 and ok[i1 + 1]:
            i1 += 1
        self.grid, self.vals = grid[i0:i1 + 1], vals[i0:i1 + 1]
        dv = np.diff(self.vals)
        if np.all(dv > 0):
            self.sign = 1
        elif np.all(dv < 0):
            self.sign = -1
        else:
            raise InversionError("h is not strictly monotone on its search range; "
                                 "no branch rule is applied")
        self.h = R.h
        self.range = (float(self.vals.min()), float(self.vals.max()))

    def __call__(self, target: float) -> float:
        lo, hi = self.range
        if not lo <= target <= hi:
            raise InversionError(f"h(u) = {target} has no solution on the search range")
        key = self.vals if self.sign > 0 else -self.vals
        tk = target if self.sign > 0 else -target
        i = int(np.clip(np.searchsorted(key, tk) - 1, 0, len(key) - 2))
        a, b = self.grid[i], self.grid[i + 1]
        fa, fb = self.vals[i] - target, self.vals[i + 1] - target
        if fa == 0:
            return float(a)
        if fb == 0:
            return float(b)
        return float(optimize.brentq(lambda u: self.h(u) - target, a, b, xtol=1e-15,
                                     rtol=4 * np.finfo(float).eps))


def _safe(f, *args):
    try:
        v = float(f(*args))
    except (ValueError, ZeroDivisionError, OverflowError, ArithmeticError, SolverError):
        return math.nan
    return v


def _is_constant(R: ReducedBVP, phase: int) -> Optional[float]:
    e = R.problem.d1 if phase == 1 else R.problem.d2
    return float(e.value) if isinstance(e, Const) else None


def _sample_max(f, lo, hi, n=33):
    vals = [_safe(f, a) for a in np.linspace(lo, hi, n)]
    vals = [v for v in vals if math.isfinite(v)]
    return max(vals) if vals else 1.0


class _FarField:
    """Phase-2 sub-shoot on v'(s2) for v(s_max) = v_inf with doubling check."""

    def __init__(self, R: ReducedBVP, cfg: ShootingConfig, closed_form: bool = True):
        self.R, self.cfg, self.closed_form = R, cfg, closed_form
        lo, hi = R.problem.v_range
        self.dmax = _sample_max(R.d2, lo, hi)

    def length(self, s2: float, param: float) -> float:
        R, cfg = self.R, self.cfg
        if R.kind == TRAVELING_WAVE:
            return cfg.far_factor * 30.0 * self.dmax / abs(param)
        # erfc(z) < 1e-16 for z > 6
        return cfg.far_factor * (abs(s2) + 14.0 * math.sqrt(self.dmax))

    def shoot(self, s2: float, param: float, L: float, guess: float):
        R, cfg = self.R, self.cfg
        rhs = R.rhs(2, param)
        s_end = s2 + L

        def miss(G):
            p = integrate_ode(rhs, (s2, s_end), (R.v_m, G), cfg)
            return p.y[-1, 0] - R.v_inf

        g0, g1 = guess, guess * (1 + 1e-3) + 1e-6
        m0, m1 = miss(g0), miss(g1)
        for _ in range(60):
            if m1 == m0:
                break
            g2 = g1 - m1 * (g1 - g0) / (m1 - m0)
            g0, m0 = g1, m1
            g1, m1 = g2, miss(g2)
            if abs(m1) < 0.1 * cfg.far_tol * max(1.0, abs(R.v_m - R.v_inf)) \
                    or abs(g1 - g0) < 1e-15 * max(1.0, abs(g1)):
                break
        if not abs(m1) < cfg.far_tol:
            raise SolverError(f"far-field sub-shoot missed v_inf by {m1:.3g}")
        return g1

    def flux(self, s2: float, param: float, guess: Optional[float] = None):
        """d2(v_m) v'(s2) and the truncation length used."""
        R, cfg = self.R, self.cfg
        d2c = _is_constant(R, 2)
        if d2c is not None and self.closed_form:
            return _closed_form_flux(R, s2, param, d2c), math.inf
        if guess is None:
            guess = _closed_form_flux(R, s2, param, _safe(R.d2, R.v_m))
        L = self.length(s2, param)
        G = self.shoot(s2, param, L, guess)
        while True:
            G2 = self.shoot(s2, param, 2 * L, G)
            if abs(G2 - G) < cfg.doubling_tol * max(1.0, abs(G)):
                return G2, 2 * L
            L *= 2
            G = G2
            if L > cfg.s_max_cap:
                raise SolverError("far-field truncation exceeded the hard cap")


def _closed_form_flux(R: ReducedBVP, s2: float, param: float, d2: float) -> float:
    dv = R.v_m - R.v_inf
    if R.kind == TRAVELING_WAVE:
        return -param * dv
    z = s2 / (2.0 * math.sqrt(d2))
    return -dv * math.sqrt(d2 / math.pi) / special.erfcx(z)


def _far_profile(R: ReducedBVP, cfg: ShootingConfig, s2: float, param: float, G: float,
                 L: Optional[float] = None) -> PhaseProfile:
    """Integrate phase 2 from the melt front until v is within far_tol of v_inf."""
    d2max = _sample_max(R.d2, *R.problem.v_range)
    if L is None or not math.isfinite(L):
        L = (30.0 * d2max / abs(param) if R.kind == TRAVELING_WAVE
             else abs(s2) + 14.0 * math.sqrt(d2max))
    rhs = R.rhs(2, param)
    while True:
        ode = integrate_ode(rhs, (s2, s2 + L), (R.v_m, G), cfg, max_step=cfg.profile_max_step * 5)
        if abs(ode.y[-1, 0] - R.v_inf) < cfg.far_tol or L > cfg.s_max_cap:
            break
        L *= 2
    if abs(ode.y[-1, 0] - R.v_inf) >= cfg.far_tol:
        raise SolverError(f"far field not reached: |v - v_inf| = {abs(ode.y[-1, 0] - R.v_inf):.3g}")
    # refine the near-front part for differencing
    return PhaseProfile(ode, R.d2, R.d2p, R.advection(param), far_value=R.v_inf)


# ---------------------------------------------------------------------------
# traveling waves

def first_integral_F(R: ReducedBVP, mu: float, hinv: HInverse) -> float:
    """Mismatch of the phase-1 first integral between the two fronts."""
    u0 = hinv(mu)
    left = R.rho1(u0) * R.L_v * mu - R.q(u0) + mu * u0
    right = mu * (R.v_inf - R.v_m - R.rho2(R.v_m) * R.L_m + R.u_m)
    return left - right


def _delta_quadrature(R: ReducedBVP, mu: float, u0: float, C1: float) -> float:
    """delta = int_{u0}^{u_m} d1(u) / (C1 - mu u) du."""
    a, b = sorted((u0, R.u_m))
    den = [C1 - mu * u for u in np.linspace(a, b, 65)]
    if min(den) * max(den) <= 0:
        return math.nan
    val, err = integrate.quad(lambda u: R.d1(u) / (C1 - mu * u), u0, R.u_m,
                              epsabs=1e-14, epsrel=1e-13, limit=200)
    return float(val)


def _tw_roots(R: ReducedBVP, cfg: ShootingConfig, hinv: HInverse):
    lo, hi = hinv.range
    top = min(cfg.mu_cap, hi)
    if top <= 0:
        raise NoSolutionError("h takes no positive values: no front can advance")
    grid = np.concatenate([[0.0] if lo <= 0 else [], np.geomspace(max(1e-6, lo if lo > 0 else 1e-6),
                                                                  top, cfg.n_scan)])
    vals = np.array([_safe(first_integral_F, R, m, hinv) for m in grid])
    scale = max(1.0, float(np.nanmax(np.abs(vals))) if np.isfinite(vals).any() else 1.0)
    roots = []
    for i, m in enumerate(grid):
        if math.isfinite(vals[i]) and abs(vals[i]) <= 1e-13 * scale:
            roots.append(float(m))
    for i in range(len(grid) - 1):
        a, b = vals[i], vals[i + 1]
        if math.isfinite(a) and math.isfinite(b) and a * b < 0:
            r = optimize.brentq(lambda m: first_integral_F(R, m, hinv), grid[i], grid[i + 1],
                                xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
            if all(abs(r - x) > 1e-12 * max(1, abs(r)) for x in roots):
                roots.append(float(r))
    samples = [(float(m), _num(v)) for m, v in zip(grid[:: max(1, len(grid) // 24)],
                                                   vals[:: max(1, len(grid) // 24)])]
    return sorted(roots), samples


def _tw_profiles(R, cfg, mu, delta, u0, flux0, G):
    u_ode = integrate_ode(R.rhs(1, mu), (0.0, delta), (u0, flux0), cfg,
                          max_step=cfg.profile_max_step)
    up = PhaseProfile(u_ode, R.d1, R.d1p, R.advection(mu))
    vp = _far_profile(R, cfg, delta, mu, G)
    return up, vp


def _tw_residuals(R, mu, delta, up: PhaseProfile, vp: PhaseProfile) -> dict:
    u0 = up.w[0]
    return {
        "surface_flux": up.flux[0] - (R.rho1(u0) * R.L_v * mu - R.q(u0)),
        "surface_velocity": mu - R.h(u0),
        "u_melt": up.w[-1] - R.u_m,
        "v_melt": vp.w[0] - R.v_m,
        "stefan": vp.flux[0] - up.flux[-1] - R.rho2(R.v_m) * R.L_m * mu,
        "far_field": vp.w[-1] - R.v_inf,
    }


def solve_traveling_wave(R: ReducedBVP, cfg: Optional[ShootingConfig] = None,
                         method: str = "first_integral") -> SolutionResult:
    """Speed mu and strip width delta of a traveling wave.

    ``method`` is ``"first_integral"`` (scalar equation plus quadrature),
    ``"shooting"`` (forward integration with a far-field sub-shoot) or
    ``"both"``, which solves with both and records their disagreement.
    """
    if R.kind != TRAVELING_WAVE:
        raise ValueError("solve_traveling_wave needs a TravelingWave reduction")
    cfg = cfg or ShootingConfig()
    hinv = HInverse(R, cfg)
    roots, samples = _tw_roots(R, cfg, hinv)
    if not roots:
        raise NoSolutionError("no sign change of the first-integral mismatch F(mu) on the scan",
                              samples)
    table = []
    for mu in roots:
        entry = {"mu": mu, "delta": math.nan, "status": "ok"}
        if mu == 0.0 or abs(mu) < 1e-12:
            entry["status"] = "degenerate"
        else:
            u0 = hinv(mu)
            C1 = R.rho1(u0) * R.L_v * mu - R.q(u0) + mu * u0
            delta = _delta_quadrature(R, mu, u0, C1)
            entry.update(delta=delta, u0=u0, C1=C1)
            if not math.isfinite(delta):
                entry["status"] = "invalid"
            elif delta <= 0:
                entry["status"] = "physically inconsistent"
        table.append(entry)
    valid = [e for e in table if e["status"] == "ok"]
    flags = ["multiple roots"] if len(valid) > 1 else []
    if not valid:
        deg = [e for e in table if e["status"] == "degenerate"]
        if deg:
            return SolutionResult(TRAVELING_WAVE, {"mu": 0.0, "delta": math.nan}, None, None, {},
                                  converged=True, status="degenerate", roots=table,
                                  flags=["stationary front"],
                                  diagnostics={"F_samples": len(samples)})
        raise NoSolutionError("roots of F(mu) give no positive strip width", samples)
    best = valid[0]
    mu, delta, u0, C1 = best["mu"], best["delta"], best["u0"], best["C1"]
    if any(e["status"] == "degenerate" for e in table):
        flags.append("stationary front root also present")
    diagnostics = {"method": method, "scan_points": cfg.n_scan, "C1": C1}
    if method in ("shooting", "both"):
        mu_s, delta_s, shoot_diag = _tw_shoot(R, cfg, hinv, mu)
        diagnostics.update(shoot_diag)
        if method == "shooting":
            mu, delta = mu_s, delta_s
            u0 = hinv(mu)
        else:
            diagnostics["mu_shooting"] = mu_s
            diagnostics["delta_shooting"] = delta_s
            diagnostics["cross_method_gap"] = max(abs(mu_s - mu), abs(delta_s - delta))
    flux0 = R.rho1(u0) * R.L_v * mu - R.q(u0)
    G = mu * (R.v_inf - R.v_m)  # phase-2 first integral d2 v' = mu (v_inf - v)
    up, vp = _tw_profiles(R, cfg, mu, delta, u0, flux0, G)
    res = _tw_residuals(R, mu, delta, up, vp)
    first = up.flux + mu * up.w
    diagnostics["first_integral_drift"] = float(np.max(np.abs(first - C1)))
    if not up.is_monotone():
        flags.append("u profile not monotone")
    return SolutionResult(TRAVELING_WAVE, {"mu": mu, "delta": delta}, up, vp, res,
                          converged=True, roots=table, flags=flags, diagnostics=diagnostics)


def _tw_shoot(R: ReducedBVP, cfg: ShootingConfig, hinv: HInverse, seed: float):
    """Solve the traveling-wave residuals by forward integration only."""
    far = _FarField(R, cfg, closed_form=False)
    info = {}

    def phase1(mu):
        u0 = hinv(mu)
        flux0 = R.rho1(u0) * R.L_v * mu - R.q(u0)
        ev = Event(lambda s, y: y[0] - R.u_m)
        L = 50.0 * _sample_max(R.d1, *R.problem.u_range) / mu + 10.0
        p = integrate_ode(R.rhs(1, mu), (0.0, L), (u0, flux0), cfg, events=[ev])
        if p.event_s is None:
            raise SolverError("phase-1 profile never reaches u_m")
        return p.event_s, p.y[-1, 1]

    def residual(mu):
        delta, flux_u = phase1(mu)
        G, L = far.flux(delta, mu, info.get("G"))
        info["G"], info["far_length"] = G, L
        return G - flux_u - R.rho2(R.v_m) * R.L_m * mu

    a, b = seed * (1 - 1e-3), seed * (1 + 1e-3)
    ra, rb = _safe(residual, a), _safe(residual, b)
    k = 0
    while not (ra * rb < 0) and k < 20:
        a, b = a - (seed - a), b + (b - seed)
        if a <= 0:
            a = 1e-8 * seed
        ra, rb = _safe(residual, a), _safe(residual, b)
        k += 1
    if not ra * rb < 0:
        raise NoSolutionError("shooting path found no bracket around the traveling-wave speed")
    mu = optimize.brentq(residual, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    delta, _ = phase1(mu)
    return mu, delta, {"shooting_bracket": [a, b], "far_length": info.get("far_length")}


# ---------------------------------------------------------------------------
# self-similar solutions

def _ss_surface(R: ReducedBVP, hinv: HInverse, w1: float):
    u1 = hinv(0.5 * w1)
    flux1 = R.rho1(u1) * R.L_v * 0.5 * w1 - R.q(u1)
    return u1, flux1


def residual_map(R: ReducedBVP, w1: float, w2: float, cfg: Optional[ShootingConfig] = None,
                 hinv: Optional[HInverse] = None, far: Optional["_FarField"] = None):
    """(r1, r2): melt-temperature and Stefan mismatches at omega2."""
    cfg = cfg or ShootingConfig()
    hinv = hinv or HInverse(R, cfg)
    far = far or _FarField(R, cfg)
    if not w2 > w1:
        raise SolverError("omega1 must lie left of omega2")
    u1, flux1 = _ss_surface(R, hinv, w1)
    p = integrate_ode(R.rhs(1), (w1, w2), (u1, flux1), cfg)
    u2, flux2 = p.y[-1]
    G, _ = far.flux(w2, w2)
    return np.array([u2 - R.u_m, G - flux2 - R.rho2(R.v_m) * R.L_m * 0.5 * w2])


def _surrogate_guess(R: ReducedBVP, hinv: HInverse, cfg: ShootingConfig):
    """(omega1, omega2) for the same data with d1, d2 frozen at the melt values."""
    d1 = _safe(R.d1, R.u_m)
    d2 = _safe(R.d2, R.v_m)
    s1 = math.sqrt(d1)

    def omega2_of(w1):
        u1, flux1 = _ss_surface(R, hinv, w1)
        # u = A + B erf(omega / (2 sqrt d1))
        B = flux1 / d1 * s1 * math.sqrt(math.pi) * math.exp((w1 / (2 * s1)) ** 2)
        A = u1 - B * math.erf(w1 / (2 * s1))
        target = (R.u_m - A) / B
        if not -1 < target < 1:
            return math.nan, math.nan
        w2 = 2 * s1 * float(special.erfinv(target))
        if not w2 > w1:
            return math.nan, math.nan
        up = B / (s1 * math.sqrt(math.pi)) * math.exp(-(w2 / (2 * s1)) ** 2)
        G = _closed_form_flux(R, w2, w2, d2)
        return w2, G - d1 * up - R.rho2(R.v_m) * R.L_m * 0.5 * w2

    lo, hi = hinv.range
    grid = np.linspace(2 * lo, 2 * hi, 400)
    vals = [(_safe(lambda w: omega2_of(w)[1], w)) for w in grid]
    for i in range(len(grid) - 1):
        a, b = vals[i], vals[i + 1]
        if math.isfinite(a) and math.isfinite(b) and a * b <= 0:
            w1 = optimize.brentq(lambda w: omega2_of(w)[1], grid[i], grid[i + 1], xtol=1e-14)
            return w1, omega2_of(w1)[0]
    return None


def _newton(F, x0, cfg: ShootingConfig):
    x = np.array(x0, dtype=float)
    r = F(x)
    history = [float(np.max(np.abs(r)))]
    for it in range(cfg.max_newton):
        if np.max(np.abs(r)) < cfg.root_tol:
            return x, r, it, history
        J = np.empty((2, 2))
        for j in range(2):
            hstep = 1e-7 * max(1.0, abs(x[j]))
            xp = x.copy()
            xp[j] += hstep
            J[:, j] = (F(xp) - r) / hstep
        try:
            dx = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        norm = np.max(np.abs(r))
        while lam > 1e-4:
            xn = x + lam * dx
            try:
                rn = F(xn)
            except (SolverError, InversionError, ValueError):
                rn = None
            if rn is not None and np.all(np.isfinite(rn)) and np.max(np.abs(rn)) < norm:
                break
            lam *= 0.5
        else:
            break
        x, r = xn, rn
        history.append(float(np.max(np.abs(r))))
    return x, r, cfg.max_newton, history


def _ss_bracket(R: ReducedBVP, hinv: HInverse, far: "_FarField", cfg: ShootingConfig):
    """1-D fallback: omega2 from the u = u_m event, bisection on the Stefan mismatch."""
    def stefan(w1):
        u1, flux1 = _ss_surface(R, hinv, w1)
        ev = Event(lambda s, y: y[0] - R.u_m)
        p = integrate_ode(R.rhs(1), (w1, w1 + 50.0), (u1, flux1), cfg, events=[ev])
        if p.event_s is None:
            raise SolverError("u never reaches u_m")
        w2 = p.event_s
        G, _ = far.flux(w2, w2)
        return G - p.y[-1, 1] - R.rho2(R.v_m) * R.L_m * 0.5 * w2, w2

    lo, hi = hinv.range
    grid = np.linspace(2 * lo, 2 * hi, 81)
    vals = [_safe(lambda w: stefan(w)[0], w) for w in grid]
    for i in range(len(grid) - 1):
        a, b = vals[i], vals[i + 1]
        if math.isfinite(a) and math.isfinite(b) and a * b <= 0:
            w1 = optimize.brentq(lambda w: stefan(w)[0], grid[i], grid[i + 1], xtol=1e-14)
            return w1, stefan(w1)[1]
    raise NoSolutionError("no bracket for the self-similar front coordinates",
                          [(float(g), _num(v)) for g, v in zip(grid, vals)])


def solve_self_similar(R: ReducedBVP, cfg: Optional[ShootingConfig] = None) -> SolutionResult:
    """Front coordinates (omega1, omega2) of a self-similar solution."""
    if R.kind != SELF_SIMILAR:
        raise ValueError("solve_self_similar needs a SelfSimilar reduction")
    cfg = cfg or ShootingConfig()
    hinv = HInverse(R, cfg)
    far = _FarField(R, cfg)
    flags = []
    F = lambda z: residual_map(R, z[0], z[1], cfg, hinv, far)  # noqa: E731
    guess = cfg.guesses or _surrogate_guess(R, hinv, cfg)
    diagnostics = {"initial_guess": list(guess) if guess else None}
    x, r, its = None, None, 0
    if guess is not None:
        try:
            x, r, its, hist = _newton(F, guess, cfg)
            diagnostics["newton_history"] = hist
        except (SolverError, InversionError) as exc:
            diagnostics["newton_error"] = str(exc)
    if x is None or not np.max(np.abs(r)) < cfg.root_tol:
        diagnostics["fallback"] = "bisection"
        x = np.array(_ss_bracket(R, hinv, far, cfg))
        x, r, its2, hist = _newton(F, x, cfg)
        its += its2
        if not np.max(np.abs(r)) < cfg.root_tol:
            raise NoSolutionError(f"self-similar residual stalled at {np.max(np.abs(r)):.3g}",
                                  [(list(map(float, x)), list(map(float, r)))])
    w1, w2 = float(x[0]), float(x[1])
    diagnostics["iterations"] = its
    if abs(w1) < 1e-12:
        flags.append("stationary front")
    u1, flux1 = _ss_surface(R, hinv, w1)
    u_ode = integrate_ode(R.rhs(1), (w1, w2), (u1, flux1), cfg, max_step=cfg.profile_max_step)
    up = PhaseProfile(u_ode, R.d1, R.d1p, R.advection())
    G, L = far.flux(w2, w2)
    vp = _far_profile(R, cfg, w2, w2, G, L)
    diagnostics["omega_max"] = float(vp.span[1])
    res = {
        "surface_flux": up.flux[0] - (R.rho1(u1) * R.L_v * 0.5 * w1 - R.q(u1)),
        "surface_velocity": 0.5 * w1 - R.h(u1),
        "u_melt": float(r[0]),
        "v_melt": vp.w[0] - R.v_m,
        "stefan": float(r[1]),
        "far_field": vp.w[-1] - R.v_inf,
    }
    if not up.is_monotone():
        flags.append("u profile not monotone")
    if not vp.is_monotone():
        flags.append("v profile not monotone")
    return SolutionResult(SELF_SIMILAR, {"omega1": w1, "omega2": w2}, up, vp, res,
                          roots=[{"omega1": w1, "omega2": w2, "status": "ok"}],
                          flags=flags, diagnostics=diagnostics)


def solve(R: ReducedBVP, cfg: Optional[ShootingConfig] = None, **kw) -> SolutionResult:
    if R.kind == TRAVELING_WAVE:
        return solve_traveling_wave(R, cfg, **kw)
    return solve_self_similar(R, cfg)
