import os

import pytest

from stefanlie.problem import CanonicalProblem, PhysicalProblem, load_problem

DEMO_PROBLEMS = os.path.join(os.path.dirname(__file__), os.pardir, "demos", "problems")


def fixture_path(name: str) -> str:
    return os.path.abspath(os.path.join(DEMO_PROBLEMS, name))


def physical(**kw) -> PhysicalProblem:
    base = dict(lambda1="4", c1="2", rho1="1", lambda2="2", c2="1", rho2="1",
                L_v=2.0, L_m=1.0, T_m=1.0, T_0=0.0, Q="6", H="T", T_max=4.0)
    base.update(kw)
    from stefanlie.problem import physical_from_dict
    return physical_from_dict(base)


def canonical(**kw) -> CanonicalProblem:
    from stefanlie.problem import canonical_from_dict
    base = dict(d1="1", d2="1", q="3.5", h="u", u_m=0.5, v_m=1.0, v_inf=0.0, L_v=1.0, L_m=1.0)
    base.update(kw)
    return canonical_from_dict(base)


@pytest.fixture
def tw_problem():
    return canonical()


@pytest.fixture
def tw_fixture_path():
    return fixture_path("tw_constant.json")


@pytest.fixture(scope="session")
def tw_solution():
    from stefanlie.reduction import reduce
    from stefanlie.solver import solve_traveling_wave
    P = canonical()
    R = reduce(P, "X1")
    return P, R, solve_traveling_wave(R, method="both")


@pytest.fixture(scope="session")
def ss_solution():
    from stefanlie.reduction import reduce
    from stefanlie.solver import solve_self_similar
    from stefanlie.validate import manufactured_self_similar
    P = manufactured_self_similar()
    R = reduce(P, "X2")
    return P, R, solve_self_similar(R)


def load(name):
    return load_problem(fixture_path(name))[1]
