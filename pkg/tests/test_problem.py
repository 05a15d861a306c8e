import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stefanlie.expr import ValidationError, evaluate, to_callable
from stefanlie.problem import (RangeError, goodman_transform, load_problem, phi, phi_inverse,
                               transform_problem)

from conftest import canonical, fixture_path, physical


def test_phi_examples():
    p = physical()
    assert phi(1, 3.0, p) == pytest.approx(6.0, abs=1e-12)
    assert phi(1, 0.0, p) == 0.0
    assert phi(2, 0.0, p) == 0.0
    q = physical(c1="1 + T", lambda1="1 + T")
    assert phi(1, 2.0, q) == pytest.approx(4.0, abs=1e-12)


def test_phi_inverse_examples():
    assert phi_inverse(1, 6.0, physical()) == pytest.approx(3.0, abs=1e-10)
    q = physical(c1="1 + T", lambda1="1 + T")
    assert phi_inverse(1, 4.0, q) == pytest.approx(2.0, abs=1e-10)


def test_phi_inverse_out_of_range():
    with pytest.raises(RangeError):
        phi_inverse(1, 1e6, physical())


def test_phi_monotone():
    p = physical(c1="1 + T + exp(T/3)", lambda1="2")
    T = np.sort(np.random.default_rng(3).uniform(0, 4, 101))
    w = [phi(1, a, p) for a in T]
    assert np.all(np.diff(w) > 0)


def test_round_trip_random():
    p = physical(c1="1 + T^2", rho1="2 + erf(T)", lambda1="1")
    rng = np.random.default_rng(11)
    for T in rng.uniform(0, 4, 50):
        assert abs(phi_inverse(1, phi(1, T, p), p) - T) < 1e-10
        w = phi(1, T, p)
        assert abs(phi(1, phi_inverse(1, w, p), p) - w) < 1e-10


def test_goodman_constant_laws():
    P = goodman_transform(physical(Q="3"))
    for u in np.linspace(0, 6, 5):
        assert evaluate(P.d1, {"u": u}) == pytest.approx(2.0)
        assert evaluate(P.qhat, {"u": u, "t": 1.7}) == pytest.approx(3.0)
    assert P.u_m == pytest.approx(2.0 * 1.0)
    assert P.v_inf < P.v_m


def test_goodman_cancelling_ratio():
    P = goodman_transform(physical(c1="1 + T", lambda1="1 + T"))
    d1 = to_callable(P.d1, ["u"])
    for u in np.linspace(0.05, 10, 20):
        assert d1(u) == pytest.approx(1.0, abs=1e-9)


def test_goodman_positivity():
    P = goodman_transform(physical(c1="1 + T", lambda1="2 + T^2"))
    d1 = to_callable(P.d1, ["u"])
    lo, hi = P.u_range
    assert all(d1(u) > 0 for u in np.linspace(lo, hi, 100))


def test_physical_invariants():
    with pytest.raises(ValidationError):
        physical(T_0=2.0)
    with pytest.raises(ValidationError):
        physical(c1="T - 1")


def test_canonical_invariants():
    with pytest.raises(ValidationError):
        canonical(v_inf=1.0)
    with pytest.raises(ValidationError):
        canonical(d1="u - 0.5")
    with pytest.raises(ValidationError):
        canonical(d1="x + 1")


def test_loader(tmp_path):
    _, P = load_problem(fixture_path("tw_constant.json"))
    assert P.u_m == 0.5 and str(P.hhat) == "u"
    phys, P = load_problem(fixture_path("physical_linear_capacity.json"))
    assert phys is not None and P.u_m == pytest.approx(1.5)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"canonical": {"d1": "1"}}))
    with pytest.raises(ValidationError, match="missing field"):
        load_problem(bad)
    with pytest.raises(ValidationError):
        load_problem({"neither": {}})


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 5), st.floats(0.2, 5), st.floats(0.2, 5), st.floats(-1, 1))
def test_transform_round_trip(e0, e1, e2, u0):
    P = canonical(d1="1 + 0.5*u", q="3.5 + u")
    Q = transform_problem(transform_problem(P, e0, e1, e2, u0, u0), 1 / e0, 1 / e1, 1 / e2,
                          -u0 / e2, -u0 / e2)
    for u in (0.1, 0.4, 0.9):
        assert evaluate(Q.d1, {"u": u}) == pytest.approx(evaluate(P.d1, {"u": u}), rel=1e-12)
        assert evaluate(Q.qhat, {"u": u, "t": 1}) == pytest.approx(
            evaluate(P.qhat, {"u": u, "t": 1}), rel=1e-12)
    assert Q.u_m == pytest.approx(P.u_m, abs=1e-12)
