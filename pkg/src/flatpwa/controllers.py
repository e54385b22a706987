"""Online controllers over the linearized dynamics.

* CLF projection: minimal deviation from a desired input subject to the
  admissible union (big-M rows) and a quadratic-Lyapunov decrease row.
* MI-constrained MPC: receding-horizon MIQP whose every predicted pair
  (z(k|i), v(k|i)) is kept inside the admissible union.
* FL-MPC baseline: state rows over the horizon but the input constraint
  only at the first step (via the union surrogate, then verified against
  the true map) -- the contrast case whose later forecast inputs may
  violate the true bound.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .miencoding import AdmissibleUnion, BigMData, MiqpModel, encode_horizon, encode_point
from .miqpsolver import MiqpResult, SolveBudget, solve_by_cell_enumeration, solve_miqp
from .numkernel import OPTIMAL, QpProblem, eig_sym, solve_qp
from .polytope import HPolytope
from .simulate import ControllerInfeasible
from .tolerances import DEFAULT, Tolerances


@dataclass
class ClfSpec:
    P: np.ndarray
    gamma: float
    gain: np.ndarray | None = None       # v_d(z) = -gain @ z
    v_desired: object = None             # overrides gain when given

    def __post_init__(self):
        self.P = np.atleast_2d(np.asarray(self.P, dtype=float))
        if self.gain is not None:
            self.gain = np.atleast_2d(np.asarray(self.gain, dtype=float))

    def v_d(self, z):
        if self.v_desired is not None:
            return np.atleast_1d(np.asarray(self.v_desired(z), dtype=float))
        if self.gain is None:
            raise ValueError("ClfSpec needs a gain or a v_desired callback")
        return -self.gain @ np.asarray(z, dtype=float)

    def V(self, z):
        z = np.asarray(z, dtype=float)
        return float(z @ self.P @ z)


@dataclass
class MpcSpec:
    Q: np.ndarray
    R: np.ndarray
    N_p: int
    T_s: float
    A_d: np.ndarray
    B_d: np.ndarray
    state_rows: HPolytope | None = None
    input_rows: HPolytope | None = None
    input_map: np.ndarray | None = None
    terminal_weight: np.ndarray | None = None
    budget: SolveBudget = field(default_factory=SolveBudget)
    # used when the primary budget produces no feasible point (bad cell hint)
    fallback_budget: SolveBudget | None = None

    def __post_init__(self):
        self.Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        self.R = np.atleast_2d(np.asarray(self.R, dtype=float))
        if self.N_p < 1:
            raise ValueError("N_p must be >= 1")
        if self.T_s <= 0:
            raise ValueError("T_s must be positive")
        for M, name in ((self.Q, "Q"), (self.R, "R")):
            if np.abs(M - M.T).max() > 1e-10 * max(1.0, np.abs(M).max()):
                raise ValueError(f"{name} must be symmetric")


def verify_clf(spec: ClfSpec, A, B, tol: Tolerances = DEFAULT) -> dict:
    """Check P > 0 and Psi A' + A Psi - 2 B B' + gamma Psi <= 0, Psi = P^-1."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    pd_eigs = eig_sym(spec.P, tol)
    if abs(np.linalg.det(spec.P)) < 1e-300:
        raise ValueError("P is singular")
    Psi = np.linalg.inv(spec.P)
    lmi = Psi @ A.T + A @ Psi - 2.0 * B @ B.T + spec.gamma * Psi
    lmi_eigs = eig_sym(0.5 * (lmi + lmi.T), tol)
    report = {
        "pd_min_eig": float(pd_eigs[0]),
        "lmi_max_eig": float(lmi_eigs[-1]),
        "pass": bool(pd_eigs[0] > 0.0 and lmi_eigs[-1] <= tol.psd),
    }
    return report


@dataclass
class ClfStepResult:
    v: np.ndarray
    result: MiqpResult
    model: MiqpModel


def clf_step(spec: ClfSpec, U: AdmissibleUnion, z, A, B, big_m: BigMData,
             input_map=None, budget: SolveBudget | None = None,
             tol: Tolerances = DEFAULT, cost_scale: float = 1.0,
             initial_cells=None, warm_x=None) -> ClfStepResult:
    """Project the desired input onto the stabilizing admissible set.

    min ||v - v_d(z)||^2 s.t. (z, v) in the union (big-M rows) and
    2 z'P(Az + Bv) <= -gamma z'P z. Raises ControllerInfeasible when the
    MIQP is infeasible.
    """
    z = np.asarray(z, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    n_z = z.size
    m = B.shape[1]
    G, h, E, d, n_bin, groups, labels = encode_point(U, z, big_m, input_map, n_z, m)
    n = m + n_bin
    clf_row = np.zeros(n)
    clf_row[:m] = 2.0 * B.T @ spec.P @ z
    clf_rhs = float(-spec.gamma * z @ spec.P @ z - 2.0 * z @ spec.P @ A @ z)
    G = np.vstack([G, clf_row[None, :]])
    h = np.concatenate([h, [clf_rhs]])
    vd = spec.v_d(z)
    H = np.zeros((n, n))
    H[:m, :m] = 2.0 * np.eye(m)
    g = np.zeros(n)
    g[:m] = -2.0 * vd
    model = MiqpModel(H=cost_scale * H, g=cost_scale * g,
                      c0=cost_scale * float(vd @ vd),
                      G=G, h=h, E=E, d=d, n_cont=m, n_bin=n_bin,
                      binary_groups=groups, binary_labels=labels,
                      meta={"n_z": n_z, "m": m, "N_p": 1, "num_cells": len(U)})
    res = solve_miqp(model, budget=budget, tol=tol, initial_cells=initial_cells,
                     warm_x=warm_x)
    if res.status not in (OPTIMAL, "budget_exceeded") or res.x is None:
        raise ControllerInfeasible("CLF projection program is infeasible")
    return ClfStepResult(v=res.x[:m], result=res, model=model)


@dataclass
class MpcStepResult:
    v: np.ndarray
    z_forecast: np.ndarray     # (N_p + 1, n_z)
    v_forecast: np.ndarray     # (N_p, m)
    result: MiqpResult
    model: MiqpModel


def _split_forecast(model: MiqpModel, x):
    n_z = model.meta["n_z"]
    m = model.meta["m"]
    N_p = model.meta["N_p"]
    zs = x[:n_z * (N_p + 1)].reshape(N_p + 1, n_z)
    vs = x[n_z * (N_p + 1):n_z * (N_p + 1) + m * N_p].reshape(N_p, m)
    return zs, vs


def mpc_step(spec: MpcSpec, U: AdmissibleUnion, z0, big_m: BigMData,
             z_ref=None, v_ref=None, tol: Tolerances = DEFAULT,
             initial_cells=None, use_oracle=False) -> MpcStepResult:
    """One receding-horizon solve; returns the first input and the forecast."""
    model = encode_horizon(U, spec.N_p, spec.A_d, spec.B_d, spec.Q, spec.R,
                           z0, big_m, state_rows=spec.state_rows,
                           input_map=spec.input_map, z_ref=z_ref, v_ref=v_ref,
                           input_rows=spec.input_rows,
                           terminal_weight=spec.terminal_weight)
    if use_oracle:
        res = solve_by_cell_enumeration(model, tol=tol)
    else:
        res = solve_miqp(model, budget=spec.budget, tol=tol,
                         initial_cells=initial_cells)
        if res.x is None and spec.fallback_budget is not None:
            res = solve_miqp(model, budget=spec.fallback_budget, tol=tol)
    if res.x is None:
        raise ControllerInfeasible("MPC program is infeasible")
    zs, vs = _split_forecast(model, res.x)
    return MpcStepResult(v=vs[0], z_forecast=zs, v_forecast=vs, result=res,
                         model=model)


@dataclass
class FlmpcStepResult:
    v: np.ndarray
    z_forecast: np.ndarray
    v_forecast: np.ndarray
    cell: int
    objective: float
    first_input_value: np.ndarray   # true Phi at (z0, v0), for the post-hoc check


def flmpc_step(spec: MpcSpec, U: AdmissibleUnion, phi, z0,
               z_ref=None, v_ref=None, tol: Tolerances = DEFAULT) -> FlmpcStepResult:
    """FL-MPC baseline: input constrained at step 0 only.

    The nonlinear first-input constraint |Phi(z0, v0)| <= u_bar is enforced
    through the tightened union restricted to step 0 (one QP per cell, best
    objective wins), which is an inner approximation; the returned input is
    re-checked against the true map by the caller. Later forecast steps only
    carry the state rows, so their implied inputs may violate the true bound
    -- that is the point of the baseline.
    """
    base = encode_horizon(None, spec.N_p, spec.A_d, spec.B_d, spec.Q, spec.R,
                          z0, None, state_rows=spec.state_rows,
                          input_map=None, z_ref=z_ref, v_ref=v_ref,
                          input_rows=spec.input_rows,
                          terminal_weight=spec.terminal_weight)
    n_z = base.meta["n_z"]
    m = base.meta["m"]
    zeta_cols = np.concatenate([np.arange(n_z),
                                np.arange(n_z * (spec.N_p + 1),
                                          n_z * (spec.N_p + 1) + m)])
    S = np.eye(n_z + m) if spec.input_map is None else spec.input_map
    best = None
    for j, cell in enumerate(U.cells):
        A_lift = cell.polytope.A @ S
        rows = np.zeros((A_lift.shape[0], base.n_cont))
        rows[:, zeta_cols] = A_lift
        prob = QpProblem(H=base.H, g=base.g,
                         G=np.vstack([base.G, rows]),
                         h=np.concatenate([base.h, cell.polytope.b]),
                         E=base.E, d=base.d, c0=base.c0)
        res = solve_qp(prob, tol=tol)
        if res.status == OPTIMAL and (best is None or res.objective < best[1]):
            best = (res.x, res.objective, j)
    if best is None:
        raise ControllerInfeasible("FL-MPC first-step program is infeasible")
    x, obj, j = best
    zs, vs = _split_forecast(base, x)
    first_u = np.atleast_1d(phi(np.asarray(z0, dtype=float), vs[0]))
    return FlmpcStepResult(v=vs[0], z_forecast=zs, v_forecast=vs, cell=j,
                           objective=obj, first_input_value=first_u)


def make_clf_controller(spec: ClfSpec, U, A, B, big_m, input_map=None,
                        budget=None, tol: Tolerances = DEFAULT):
    """Adapter for the closed-loop runner: (z, k) -> (v, solver_ms, info).

    Consecutive samples warm start each other (previous solution and cell)."""
    state = {"x": None, "cells": None}

    def controller(z, k):
        t0 = time.perf_counter()
        out = clf_step(spec, U, z, A, B, big_m, input_map=input_map,
                       budget=budget, tol=tol,
                       initial_cells=state["cells"], warm_x=state["x"])
        ms = (time.perf_counter() - t0) * 1e3
        full = np.concatenate([out.result.x, out.result.beta])
        state["x"] = full
        seq = out.result.cell_sequence(out.model)
        state["cells"] = seq if seq else None
        return out.v, ms, {"nodes": out.result.node_count}

    return controller


def make_mpc_controller(spec: MpcSpec, U, big_m, refs=None,
                        tol: Tolerances = DEFAULT, warm_cells=True,
                        ref_cells=None):
    """MPC adapter; ``refs(k)`` returns (z_ref, v_ref) horizon blocks and
    ``ref_cells(k)`` an optional cell-sequence hint for the first solve."""
    last_cells = {"seq": None}

    def controller(z, k):
        z_ref = v_ref = None
        if refs is not None:
            z_ref, v_ref = refs(k)
        t0 = time.perf_counter()
        if ref_cells is not None:
            hint = ref_cells(k)
        elif warm_cells:
            hint = last_cells["seq"]
        else:
            hint = None
        out = mpc_step(spec, U, z, big_m, z_ref=z_ref, v_ref=v_ref, tol=tol,
                       initial_cells=hint)
        ms = (time.perf_counter() - t0) * 1e3
        seq = out.result.cell_sequence(out.model)
        if seq:
            last_cells["seq"] = seq[1:] + seq[-1:]
        return out.v, ms, {"nodes": out.result.node_count,
                           "objective": out.result.objective,
                           "forecast": (out.z_forecast, out.v_forecast)}

    return controller


def make_flmpc_controller(spec: MpcSpec, U, phi, refs=None,
                          tol: Tolerances = DEFAULT):
    def controller(z, k):
        z_ref = v_ref = None
        if refs is not None:
            z_ref, v_ref = refs(k)
        t0 = time.perf_counter()
        out = flmpc_step(spec, U, phi, z, z_ref=z_ref, v_ref=v_ref, tol=tol)
        ms = (time.perf_counter() - t0) * 1e3
        return out.v, ms, {"cell": out.cell,
                           "forecast": (out.z_forecast, out.v_forecast)}

    return controller
