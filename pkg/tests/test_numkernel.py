import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flatpwa.numkernel import (INFEASIBLE, OPTIMAL, UNBOUNDED, LpProblem,
                               QpProblem, eig_sym, solve_lp, solve_qp)


def duality_gap(p, res):
    gap = res.objective
    if p.G is not None:
        gap -= p.h @ res.ineq_dual
    if p.E is not None:
        gap -= p.d @ res.eq_dual
    return abs(gap)


def test_lp_single_active_constraint():
    p = LpProblem(c=[-1.0], G=[[1.0], [-1.0]], h=[3.0, 0.0])
    res = solve_lp(p)
    assert res.status == OPTIMAL
    assert res.x[0] == pytest.approx(3.0, abs=1e-8)
    assert res.objective == pytest.approx(-3.0, abs=1e-8)
    assert duality_gap(p, res) <= 1e-6


def test_lp_contradictory_bounds_infeasible():
    res = solve_lp(LpProblem(c=[1.0], G=[[1.0], [-1.0]], h=[1.0, -2.0]))
    assert res.status == INFEASIBLE


def test_lp_unbounded():
    res = solve_lp(LpProblem(c=[-1.0], G=[[-1.0]], h=[0.0]))
    assert res.status == UNBOUNDED


def test_lp_dimension_mismatch_is_error():
    with pytest.raises(ValueError):
        LpProblem(c=[1.0, 2.0], G=[[1.0]], h=[1.0])


def test_lp_aircraft_cells_feasibility(aircraft_net, aircraft_plant, aircraft_cells):
    # oracle: locate an interior point per surviving pattern by scanning a
    # coarse grid of the workspace and reading activation signs
    params = aircraft_plant.extras["params"]
    zs = np.linspace(-params.phi_bar * 0.99, params.phi_bar * 0.99, 41)
    vs = np.linspace(-params.v_bar * 0.99, params.v_bar * 0.99, 41)
    pts = np.array([[a, b] for a in zs for b in vs])
    pre = pts @ aircraft_net.W1.T + aircraft_net.b1
    interior = np.abs(pre).min(axis=1) > 1e-3
    patterns = {tuple(np.where(row >= 0, 1, -1)) for row in pre[interior]}
    assert patterns == set(aircraft_cells.patterns)
    # each cell's phase-one LP must come back feasible (Optimal)
    for piece in aircraft_cells.pieces:
        m, d = piece.polytope.A.shape
        c = np.zeros(d + 1)
        c[-1] = 1.0
        G = np.hstack([piece.polytope.A, -np.ones((m, 1))])
        res = solve_lp(LpProblem(c, G=G, h=piece.polytope.b,
                                 bounds=[(None, None)] * d + [(0.0, None)]))
        assert res.status == OPTIMAL and res.x[-1] <= 1e-8


def test_qp_halfline_projection():
    p = QpProblem(H=[[2.0]], g=[-2.0], G=[[1.0]], h=[0.0], c0=1.0)
    res = solve_qp(p)
    assert res.status == OPTIMAL
    assert res.x[0] == pytest.approx(0.0, abs=1e-9)
    assert res.objective == pytest.approx(1.0, abs=1e-9)


def test_qp_unconstrained_minimum():
    res = solve_qp(QpProblem(H=2.0 * np.eye(3), g=np.zeros(3)))
    assert res.status == OPTIMAL
    assert np.linalg.norm(res.x) <= 1e-9


def test_qp_box_projection():
    # min ||x - (2, 2)||^2 over the unit box
    G = np.vstack([np.eye(2), -np.eye(2)])
    h = np.ones(4)
    p = QpProblem(H=2.0 * np.eye(2), g=[-4.0, -4.0], G=G, h=h, c0=8.0)
    res = solve_qp(p)
    assert np.allclose(res.x, [1.0, 1.0], atol=1e-8)
    assert res.objective == pytest.approx(2.0, abs=1e-8)


def kkt_residual(p, res):
    lam = res.ineq_dual if res.ineq_dual is not None else np.zeros(0)
    grad = p.H @ res.x + p.g
    if p.G is not None:
        grad = grad + p.G.T @ lam
    if p.E is not None:
        grad = grad + p.E.T @ res.eq_dual
    r = [np.abs(grad).max()]
    if p.G is not None:
        slack = p.h - p.G @ res.x
        r.append(max(0.0, -slack.min()))               # primal feasibility
        r.append(max(0.0, -lam.min()))                 # dual feasibility
        r.append(np.abs(lam * slack).max())            # complementarity
    if p.E is not None:
        r.append(np.abs(p.E @ res.x - p.d).max())
    return max(r)


def test_qp_kkt_residuals_random():
    rng = np.random.default_rng(3)
    for _ in range(30):
        n = rng.integers(2, 6)
        A = rng.normal(size=(n, n))
        H = A @ A.T + 0.1 * np.eye(n)
        g = rng.normal(size=n)
        G = rng.normal(size=(2 * n, n))
        h = rng.uniform(0.5, 2.0, size=2 * n)  # origin strictly feasible
        p = QpProblem(H=H, g=g, G=G, h=h)
        res = solve_qp(p)
        assert res.status == OPTIMAL
        assert kkt_residual(p, res) <= 1e-7


def test_qp_solution_is_fixed_point():
    rng = np.random.default_rng(5)
    A = rng.normal(size=(4, 4))
    p = QpProblem(H=A @ A.T + np.eye(4), g=rng.normal(size=4),
                  G=rng.normal(size=(6, 4)), h=rng.uniform(1, 2, size=6))
    res = solve_qp(p)
    res2 = solve_qp(p, x0=res.x, active_set=res.active_set)
    assert np.abs(res2.x - res.x).max() <= 1e-9


def test_qp_matches_lp_when_quadratic_vanishes():
    c = np.array([1.0, -2.0])
    G = np.vstack([np.eye(2), -np.eye(2)])
    h = np.ones(4)
    lp = solve_lp(LpProblem(c, G=G, h=h))
    qp = solve_qp(QpProblem(H=np.zeros((2, 2)), g=c, G=G, h=h))
    assert lp.status == qp.status == OPTIMAL
    assert np.allclose(lp.x, qp.x, atol=1e-4)
    assert qp.objective == pytest.approx(lp.objective, abs=1e-6)


def test_qp_infeasible_status():
    p = QpProblem(H=[[2.0]], g=[0.0], G=[[1.0], [-1.0]], h=[1.0, -2.0])
    assert solve_qp(p).status == INFEASIBLE


def test_qp_rejects_indefinite_cost():
    with pytest.raises(ValueError):
        QpProblem(H=[[1.0, 0.0], [0.0, -1.0]], g=[0.0, 0.0])


def test_qp_warm_start_from_parent_active_set():
    rng = np.random.default_rng(11)
    A = rng.normal(size=(5, 5))
    H = A @ A.T + np.eye(5)
    g = rng.normal(size=5)
    G = rng.normal(size=(8, 5))
    h = rng.uniform(1, 2, size=8)
    cold = solve_qp(QpProblem(H=H, g=g, G=G, h=h))
    warm = solve_qp(QpProblem(H=H, g=g * 1.01, G=G, h=h), x0=cold.x,
                    active_set=cold.active_set)
    assert warm.status == OPTIMAL
    assert warm.iterations <= cold.iterations + 2


def test_eig_identity():
    assert np.allclose(eig_sym(np.eye(2)), [1.0, 1.0])


def test_eig_known_spectrum():
    assert np.allclose(eig_sym([[0.0, 1.0], [1.0, 0.0]]), [-1.0, 1.0], atol=1e-12)


def test_eig_rejects_asymmetric():
    with pytest.raises(ValueError):
        eig_sym([[0.0, 1.0], [0.0, 0.0]])


def test_eig_aircraft_lmi_matrix():
    # invert the published P, evaluate the decrease LMI; every eigenvalue
    # must come out nonpositive
    P = np.array([[0.1430, 0.1932], [0.1932, 0.6378]])
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    B = np.array([[0.0], [1.0]])
    Psi = np.linalg.inv(P)
    M = Psi @ A.T + A @ Psi - 2.0 * B @ B.T + 0.05 * Psi
    evals = eig_sym(0.5 * (M + M.T))
    assert np.all(evals <= 0.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=1, max_value=4), st.integers(min_value=0, max_value=12345))
def test_lp_duality_gap_property(n, seed):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=n)
    G = np.vstack([np.eye(n), -np.eye(n), rng.normal(size=(n, n))])
    h = np.concatenate([np.full(2 * n, rng.uniform(0.5, 3.0)),
                        rng.uniform(0.5, 3.0, size=n)])
    p = LpProblem(c, G=G, h=h)
    res = solve_lp(p)
    assert res.status == OPTIMAL
    assert duality_gap(p, res) <= 1e-6
