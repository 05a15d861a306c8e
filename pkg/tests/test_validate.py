import math

import numpy as np
import pytest
from scipy.special import erf, erfc

from stefanlie.reduction import reduce
from stefanlie.validate import (AnalyticSampler, ContractError, GridError, GridSpec, InitialState,
                                SimulationError, SolutionSampler, ValidationConfig,
                                analytic_constant_case, far_field_point, front_error, front_track,
                                initial_from_sampler, pde_residual, validate_solution)

from conftest import canonical


def test_analytic_self_similar_v_is_erfc_interpolant(ss_solution):
    P, _, sol = ss_solution
    prof = analytic_constant_case(P, "SelfSimilar", sol.params)
    w2 = sol.params["omega2"]
    w = np.linspace(w2, 6, 9)
    expected = P.v_inf + (P.v_m - P.v_inf) * erfc(w / 2) / erfc(w2 / 2)
    np.testing.assert_allclose(prof.v(w), expected, rtol=1e-12)
    assert prof.u(w2) == pytest.approx(P.u_m, abs=1e-12)


def test_erf_solves_similarity_ode():
    h = 1e-4
    for w in (0.3, 1.0, 2.5):
        u = lambda s: erf(s / 2)  # noqa: E731
        up = (u(w + h) - u(w - h)) / (2 * h)
        upp = (u(w + h) - 2 * u(w) + u(w - h)) / h ** 2
        assert abs(upp + 0.5 * w * up) < 1e-7


def test_analytic_traveling_wave(tw_solution):
    P, _, sol = tw_solution
    prof = analytic_constant_case(P, "TravelingWave", sol.params)
    mu, delta = sol.params["mu"], sol.params["delta"]
    xi = np.linspace(delta, delta + 5, 11)
    np.testing.assert_allclose(prof.v(xi), P.v_inf + (P.v_m - P.v_inf) * np.exp(-mu * (xi - delta)),
                               rtol=1e-13)
    xi = np.linspace(0, delta, 11)
    assert np.max(np.abs(prof.u(xi) - sol.u(xi))) < 1e-10


def test_analytic_requires_constant_d():
    with pytest.raises(ContractError):
        analytic_constant_case(canonical(d1="1 + u"), "TravelingWave", {"mu": 1.0, "delta": 0.2})


def test_oracle_agreement(ss_solution):
    P, R, sol = ss_solution
    prof = analytic_constant_case(P, "SelfSimilar", sol.params)
    w = np.linspace(sol.params["omega1"], sol.params["omega2"], 101)
    assert np.max(np.abs(prof.u(w) - sol.u(w))) < 1e-6


# -- PDE residual -----------------------------------------------------------

def test_pde_residual_exact_solution(ss_solution):
    P, R, sol = ss_solution
    prof = analytic_constant_case(P, "SelfSimilar", sol.params)
    r = pde_residual(P, AnalyticSampler(R, prof))
    assert r["phase1"] < 1e-6 and r["phase2"] < 1e-6


def test_pde_residual_traveling_wave(tw_solution):
    P, R, sol = tw_solution
    r = pde_residual(P, SolutionSampler(R, sol))
    assert r["phase1"] < 1e-6 and r["phase2"] < 1e-6


class _Corrupted(SolutionSampler):
    def field(self, phase, t, x):
        base = super().field(phase, t, x)
        return base + 0.01 * np.asarray(x) ** 2 if phase == 1 else base


def test_pde_residual_detects_corruption(tw_solution):
    P, R, sol = tw_solution
    r = pde_residual(P, _Corrupted(R, sol))
    # u_t - u_xx picks up -0.02 d1 from the added quadratic
    assert r["phase1"] == pytest.approx(0.02, rel=1e-3)
    assert r["phase2"] < 1e-6


def test_pde_residual_grid_errors(tw_solution):
    P, R, sol = tw_solution
    with pytest.raises(GridError):
        pde_residual(P, SolutionSampler(R, sol), GridSpec(band=200.0))


# -- front tracking ---------------------------------------------------------

def test_front_track_self_similar(ss_solution):
    P, R, sol = ss_solution
    smp = SolutionSampler(R, sol)
    x_far = far_field_point(smp, 1.0, 4.0)
    tr = front_track(P, initial_from_sampler(smp, 1.0), 4.0, 400, x_far)
    err = front_error(smp, tr)
    assert err["max_rel_error"] < 0.01
    assert tr.far_field_gap < 1e-6


def test_front_track_traveling_wave(tw_solution):
    P, R, sol = tw_solution
    smp = SolutionSampler(R, sol)
    x_far = far_field_point(smp, 1.0, 2.0)
    tr = front_track(P, initial_from_sampler(smp, 1.0), 2.0, 400, x_far)
    advance = tr.s2[-1] - tr.s2[0]
    assert advance == pytest.approx(sol.params["mu"], rel=0.01)


def test_front_track_equilibrium_is_stationary():
    P = canonical(q="0", h="0", u_m=0.5, v_m=1.0, v_inf=0.0)
    init = InitialState(1.0, 0.0, 1.0, lambda x: 0.5 + 0 * x, lambda x: 1.0 + 0 * x)
    tr = front_track(P, init, 2.0, 100, x_far=3.0, v_far=1.0)
    assert np.all(tr.s1 == 0.0) and np.all(tr.s2 == 1.0)
    assert np.all(tr.u == 0.5) and np.all(tr.v == 1.0)


def test_front_crossing_aborts_with_state():
    P = canonical(q="60", h="50")
    init = InitialState(1.0, 0.0, 0.02, lambda x: 0.5 + 0 * x, lambda x: 1.0 - x / 3)
    with pytest.raises(SimulationError) as err:
        front_track(P, init, 2.0, 60, x_far=3.0)
    assert "s1" in err.value.state


def test_front_track_argument_errors(tw_solution):
    P, R, sol = tw_solution
    init = initial_from_sampler(SolutionSampler(R, sol), 1.0)
    with pytest.raises(ValueError):
        front_track(P, init, 0.5, 100, x_far=20.0)
    with pytest.raises(SimulationError):
        front_track(P, init, 2.0, 100, x_far=1.1)


def test_validate_solution_report(tw_solution):
    _, R, sol = tw_solution
    rep, track = validate_solution(R, sol, ValidationConfig(t_end=2.0))
    assert rep.passed
    names = {c["name"] for c in rep.checks}
    assert names == {"pde_residual_phase1", "pde_residual_phase2", "boundary_residual",
                     "front_trajectory"}
    d = rep.to_dict()
    assert d["passed"] is True and track.steps > 0
