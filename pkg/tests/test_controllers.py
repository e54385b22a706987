import numpy as np
import pytest

from flatpwa.controllers import (ClfSpec, MpcSpec, clf_step, flmpc_step,
                                 mpc_step, verify_clf)
from flatpwa.miqpsolver import solve_by_cell_enumeration
from flatpwa.plants.aircraft import aircraft_phi
from flatpwa.simulate import ControllerInfeasible, locate_cell, rk4_discretize

PAPER_P = np.array([[0.1430, 0.1932], [0.1932, 0.6378]])
PAPER_GAIN = np.array([[3.16, 2.55]])


@pytest.fixture(scope="module")
def clf_spec():
    return ClfSpec(P=PAPER_P, gamma=0.05, gain=PAPER_GAIN)


@pytest.fixture(scope="module")
def mpc_spec(aircraft_plant):
    A_d, B_d = rk4_discretize(aircraft_plant.A, aircraft_plant.B, 0.1)
    return MpcSpec(Q=[[20.0, 1.0], [1.0, 0.5]], R=[[0.005]], N_p=5, T_s=0.1,
                   A_d=A_d, B_d=B_d, state_rows=aircraft_plant.state_rows,
                   input_map=aircraft_plant.input_map)


def test_verify_clf_trivial_pass():
    spec = ClfSpec(P=np.eye(2), gamma=0.1, gain=np.zeros((2, 2)))
    report = verify_clf(spec, np.zeros((2, 2)), np.eye(2))
    assert report["pass"]


def test_verify_clf_paper_values(clf_spec, aircraft_plant):
    report = verify_clf(clf_spec, aircraft_plant.A, aircraft_plant.B)
    assert report["pass"]
    assert report["pd_min_eig"] > 0
    assert report["lmi_max_eig"] <= 1e-8


def test_verify_clf_indefinite_p_fails(aircraft_plant):
    spec = ClfSpec(P=[[1.0, 0.0], [0.0, -0.5]], gamma=0.05, gain=PAPER_GAIN)
    report = verify_clf(spec, aircraft_plant.A, aircraft_plant.B)
    assert not report["pass"]
    assert report["pd_min_eig"] < 0


def test_clf_step_origin(clf_spec, aircraft_union, aircraft_bigm, aircraft_plant):
    out = clf_step(clf_spec, aircraft_union, np.zeros(2), aircraft_plant.A,
                   aircraft_plant.B, aircraft_bigm,
                   input_map=aircraft_plant.input_map)
    assert np.abs(out.v).max() <= 1e-7


def test_clf_step_interior_returns_desired(clf_spec, aircraft_union,
                                           aircraft_bigm, aircraft_plant):
    # states where v_d is strictly decreasing and strictly admissible: the
    # projection must return v_d itself
    rng = np.random.default_rng(1)
    A, B, P = aircraft_plant.A, aircraft_plant.B, clf_spec.P
    checked = 0
    for _ in range(200):
        z = rng.uniform([-0.2, -0.6], [0.2, 0.6])
        vd = clf_spec.v_d(z)
        decrease = 2 * z @ P @ (A @ z + B @ vd) \
            - (-clf_spec.gamma * z @ P @ z)
        y = aircraft_plant.input_map @ np.concatenate([z, vd])
        inside = min(c.polytope.residual(y) for c in aircraft_union.cells)
        if decrease < -1e-3 and inside < -1e-3:
            out = clf_step(clf_spec, aircraft_union, z, aircraft_plant.A,
                           aircraft_plant.B, aircraft_bigm,
                           input_map=aircraft_plant.input_map)
            assert out.v[0] == pytest.approx(vd[0], abs=1e-7)
            checked += 1
    assert checked >= 20


def test_clf_step_matches_oracle(clf_spec, aircraft_union, aircraft_bigm,
                                 aircraft_plant):
    out = clf_step(clf_spec, aircraft_union, np.array([0.2, 0.0]),
                   aircraft_plant.A, aircraft_plant.B, aircraft_bigm,
                   input_map=aircraft_plant.input_map)
    oracle = solve_by_cell_enumeration(out.model)
    assert out.result.objective == pytest.approx(oracle.objective, abs=1e-7)
    assert out.v[0] == pytest.approx(oracle.x[0], abs=1e-5)


def test_clf_argmin_invariance_under_cost_scaling(clf_spec, aircraft_union,
                                                  aircraft_bigm, aircraft_plant):
    rng = np.random.default_rng(23)
    checked = 0
    for _ in range(100):
        z = rng.uniform([-0.2, -0.8], [0.2, 0.8])
        try:
            base = clf_step(clf_spec, aircraft_union, z, aircraft_plant.A,
                            aircraft_plant.B, aircraft_bigm,
                            input_map=aircraft_plant.input_map)
        except ControllerInfeasible:
            continue
        for lam in (0.5, 3.0):
            scaled = clf_step(clf_spec, aircraft_union, z, aircraft_plant.A,
                              aircraft_plant.B, aircraft_bigm,
                              input_map=aircraft_plant.input_map,
                              cost_scale=lam)
            assert scaled.v[0] == pytest.approx(base.v[0], abs=1e-6)
        checked += 1
    assert checked >= 80


def test_mpc_step_origin(mpc_spec, aircraft_union, aircraft_bigm):
    out = mpc_step(mpc_spec, aircraft_union, np.zeros(2), aircraft_bigm)
    assert np.abs(out.v).max() <= 1e-6
    assert np.abs(out.z_forecast).max() <= 1e-6


def test_mpc_forecast_admissible(mpc_spec, aircraft_union, aircraft_bigm,
                                 aircraft_plant):
    out = mpc_step(mpc_spec, aircraft_union, np.array([0.25, 0.0]),
                   aircraft_bigm)
    for i in range(mpc_spec.N_p):
        y = aircraft_plant.input_map @ np.concatenate(
            [out.z_forecast[i], out.v_forecast[i]])
        assert locate_cell(aircraft_union, y) >= 0


def test_mpc_infeasible_surfaces(mpc_spec, aircraft_union, aircraft_bigm):
    with pytest.raises(ControllerInfeasible):
        mpc_step(mpc_spec, aircraft_union, np.array([0.5, 0.0]), aircraft_bigm)


def test_flmpc_origin(mpc_spec, aircraft_union, aircraft_plant):
    out = flmpc_step(mpc_spec, aircraft_union, aircraft_plant.phi, np.zeros(2))
    assert np.abs(out.v).max() <= 1e-6


def test_flmpc_first_input_admissible_forecast_not(mpc_spec, aircraft_union,
                                                   aircraft_plant):
    params = aircraft_plant.extras["params"]
    out = flmpc_step(mpc_spec, aircraft_union, aircraft_plant.phi,
                     np.array([0.1, 0.8]))
    assert np.abs(out.first_input_value).max() <= params.u_max_scaled + 1e-6
    forecast_vals = [abs(aircraft_phi(out.z_forecast[i][0],
                                      out.v_forecast[i][0], params))
                     for i in range(mpc_spec.N_p)]
    assert max(forecast_vals[1:]) > params.u_max_scaled


def test_flmpc_state_rows_hold_over_forecast(mpc_spec, aircraft_union,
                                             aircraft_plant):
    params = aircraft_plant.extras["params"]
    out = flmpc_step(mpc_spec, aircraft_union, aircraft_plant.phi,
                     np.array([0.2, 0.3]))
    assert out.z_forecast[:mpc_spec.N_p, 0].max() <= params.phi_stall + 1e-8
