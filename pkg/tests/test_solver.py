import math

import numpy as np
import pytest
from scipy.special import erf

from stefanlie.problem import transform_problem
from stefanlie.reduction import reduce
from stefanlie.solver import (InversionError, NoSolutionError, ShootingConfig, StiffnessError,
                              integrate_ode, residual_map, solve_self_similar,
                              solve_traveling_wave)
from stefanlie.validate import analytic_constant_case, manufactured_self_similar

from conftest import canonical


# -- integrator -------------------------------------------------------------

def test_exponential_decay():
    p = integrate_ode(lambda s, y: (-y[0],), (0.0, 1.0), (1.0,))
    assert abs(p.y[-1][0] - math.exp(-1)) < 1e-10


def test_similarity_ode_gives_erf():
    rhs = lambda w, y: (y[1], -0.5 * w * y[1])  # noqa: E731
    p = integrate_ode(rhs, (0.0, 2.0), (0.0, 1 / math.sqrt(math.pi)))
    assert abs(p.y[-1][0] - erf(1.0)) < 1e-9


def test_dense_output_and_backward_integration():
    p = integrate_ode(lambda s, y: (y[0],), (1.0, 0.0), (math.e,))
    for s in np.linspace(0, 1, 11):
        assert p(s)[0] == pytest.approx(math.exp(s), rel=1e-9)


def test_conserved_first_integral():
    R = reduce(canonical(d1="1 + 0.5*u + exp(-u)"), "X1")
    mu = 0.8
    p = integrate_ode(R.rhs(1, mu), (0.0, 3.0), (1.0, -1.2), max_step=0.05)
    first = np.array([y[1] + mu * y[0] for y in p.y])
    assert np.max(np.abs(first - first[0])) < 1e-10


def test_stiffness_error_reports_location():
    with pytest.raises(StiffnessError) as err:
        integrate_ode(lambda s, y: (y[0] ** 2,), (0.0, 2.0), (1.0,))
    assert err.value.location == pytest.approx(1.0, abs=1e-6)


def test_config_validation():
    with pytest.raises(ValueError):
        ShootingConfig(rtol=0)
    with pytest.raises(ValueError):
        ShootingConfig(max_newton=0)


# -- traveling waves --------------------------------------------------------

def test_traveling_wave_oracle(tw_solution):
    _, R, sol = tw_solution
    assert sol.params["mu"] == pytest.approx(1.0, abs=1e-10)
    assert sol.params["delta"] == pytest.approx(math.log(1.25), abs=1e-10)
    assert sol.diagnostics["C1"] == pytest.approx(-1.5, abs=1e-12)
    assert sol.roots[0]["u0"] == pytest.approx(1.0, abs=1e-12)
    assert sol.diagnostics["cross_method_gap"] < 1e-8
    assert sol.residual_norm < 1e-10


def test_traveling_wave_profiles(tw_solution):
    _, R, sol = tw_solution
    delta = sol.params["delta"]
    xi = np.linspace(delta, delta + 8, 40)
    np.testing.assert_allclose(sol.v(xi), np.exp(-(xi - delta)), atol=1e-9)
    # d1 u' = C1 - mu u with C1 = -1.5, u(0) = 1
    xi = np.linspace(0, delta, 20)
    np.testing.assert_allclose(sol.u(xi), -1.5 + 2.5 * np.exp(-xi), atol=1e-10)
    assert sol.diagnostics["first_integral_drift"] < 1e-9
    assert abs(sol.u_profile.w[-1] - R.u_m) < 1e-10
    assert abs(sol.v_profile.w[0] - R.v_m) < 1e-10


def test_far_field_monotone(tw_solution):
    _, R, sol = tw_solution
    assert sol.v_profile.is_monotone()
    assert abs(sol.v_profile.w[-1] - R.v_inf) < 1e-9


def test_shooting_only_path():
    R = reduce(canonical(d1="1 + 0.3*u", d2="exp(0.2*v)", q="3 + u"), "X1")
    a = solve_traveling_wave(R, method="first_integral")
    b = solve_traveling_wave(R, method="shooting")
    assert abs(a.params["mu"] - b.params["mu"]) < 1e-8
    assert abs(a.params["delta"] - b.params["delta"]) < 1e-8


def test_degenerate_stationary_front():
    sol = solve_traveling_wave(reduce(canonical(q="0"), "X1"))
    assert sol.status == "degenerate" and sol.degenerate
    assert sol.params["mu"] == 0.0


def test_traveling_wave_errors():
    with pytest.raises(InversionError):
        solve_traveling_wave(reduce(canonical(h="(u - 0.5)^2"), "X1"))
    with pytest.raises(NoSolutionError) as err:
        solve_traveling_wave(reduce(canonical(q="-5"), "X1"))
    assert err.value.samples


@pytest.mark.parametrize("e0, e1", [(2.0, 1.0), (1.0, 3.0), (0.5, 0.7)])
def test_traveling_wave_scaling_equivariance(tw_solution, e0, e1):
    P, _, sol = tw_solution
    Q = transform_problem(P, e0=e0, e1=e1)
    s2 = solve_traveling_wave(reduce(Q, "X1"))
    assert s2.params["mu"] == pytest.approx(e1 / e0 * sol.params["mu"], abs=1e-8)
    assert s2.params["delta"] == pytest.approx(e1 * sol.params["delta"], abs=1e-8)


# -- self-similar -----------------------------------------------------------

def test_manufactured_recovery(ss_solution):
    P, R, sol = ss_solution
    assert abs(sol.params["omega1"] - 0.5) < 1e-8
    assert abs(sol.params["omega2"] - 1.5) < 1e-8
    ref = analytic_constant_case(P, "SelfSimilar", sol.params)
    w = np.linspace(0.5, 1.5, 50)
    assert np.max(np.abs(sol.u(w) - ref.u(w))) < 1e-6
    w = np.linspace(1.5, 8, 50)
    assert np.max(np.abs(sol.v(w) - ref.v(w))) < 1e-6


def test_residual_map_at_manufactured_point(ss_solution):
    _, R, _ = ss_solution
    assert np.max(np.abs(residual_map(R, 0.5, 1.5))) < 1e-10


def test_far_field_doubling(ss_solution):
    _, R, sol = ss_solution
    sol2 = solve_self_similar(R, ShootingConfig(far_factor=2.0))
    for k in ("omega1", "omega2"):
        assert abs(sol.params[k] - sol2.params[k]) < 1e-8


def test_newton_from_offset_guess(ss_solution):
    _, R, _ = ss_solution
    sol = solve_self_similar(R, ShootingConfig(guesses=(0.3, 1.9)))
    assert abs(sol.params["omega2"] - 1.5) < 1e-8


def test_nonlinear_self_similar_satisfies_conditions():
    P = canonical(d1="1 + 0.2*u", d2="exp(0.3*v)", q="2.9", h="u", u_m=0.5,
                  time_dependence="inv_sqrt_t")
    sol = solve_self_similar(reduce(P, "X2"))
    assert sol.residual_norm < 1e-9
    assert sol.params["omega1"] < sol.params["omega2"]


def test_self_similar_without_solution_reports_landscape():
    P = canonical(d1="1 + 0.2*u", d2="exp(0.3*v)", q="2.9", h="u", u_m=1.0,
                  time_dependence="inv_sqrt_t", u_range=(0, 4))
    with pytest.raises(NoSolutionError) as err:
        solve_self_similar(reduce(P, "X2"))
    assert len(err.value.samples) > 10
