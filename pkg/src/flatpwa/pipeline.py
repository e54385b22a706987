"""Scenario assembly: plant + network + tuning -> runnable pipeline stages.

Shared by the CLI and the test suite so that every entry point exercises the
same construction code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import plants
from .config import ScenarioConfig
from .controllers import (ClfSpec, MpcSpec, make_clf_controller,
                          make_flmpc_controller, make_mpc_controller)
from .errorbounds import GridSpec, grid_error_certificate, taylor_cell_bounds
from .miencoding import (BigMData, build_admissible_union, compute_big_m,
                         validate_big_m_override)
from .miqpsolver import SolveBudget
from .polytope import HPolytope
from .relupwa import ReluNetwork, enumerate_cells
from .simulate import locate_cell, rk4_discretize, run_closed_loop
from .plants import aircraft as aircraft_mod
from .plants import pmsm as pmsm_mod
from .plants import uav as uav_mod

DEFAULT_NETWORKS = {
    "aircraft": "aircraft_net.json",
    "uav": "uav_net.json",
    "pmsm": "pmsm_net.json",
}

# recorded certification margins of the packaged fixtures
DEFAULT_EPS = {
    "aircraft": np.array([0.1897]),
    "uav": np.array([0.981]),
    "pmsm": np.array([1.0, 0.76]),
}


@dataclass
class Pipeline:
    cfg: ScenarioConfig
    plant: object
    net: ReluNetwork
    workspace: HPolytope
    decomposition: object = None
    union: object = None
    big_m: BigMData | None = None

    def ensure_cells(self):
        if self.decomposition is None:
            self.decomposition = enumerate_cells(self.net, self.workspace)
        return self.decomposition

    def ensure_union(self):
        if self.union is None:
            cfg = self.cfg
            u_max = cfg.u_max if cfg.u_max is not None else self.plant.u_max
            u_min = cfg.u_min if cfg.u_min is not None else self.plant.u_min
            eps = cfg.eps if cfg.eps is not None else DEFAULT_EPS[cfg.plant]
            if cfg.plant == "uav":
                # only the speed channel runs through the network
                u_max, u_min = u_max[:1], u_min[:1]
                eps = eps[:1]
            self.union = build_admissible_union(self.ensure_cells(), u_max,
                                                eps, u_min=u_min)
        return self.union

    def ensure_big_m(self):
        if self.big_m is None:
            U = self.ensure_union()
            if self.cfg.big_m == "exact":
                self.big_m = compute_big_m(U, self.workspace)
            else:
                self.big_m = validate_big_m_override(U, self.workspace,
                                                     float(self.cfg.big_m))
        return self.big_m


def build_pipeline(cfg: ScenarioConfig) -> Pipeline:
    plant = plants.make_plant(cfg.plant)
    net_name = cfg.network or DEFAULT_NETWORKS[cfg.plant]
    net = ReluNetwork.load(cfg.resolve_path(net_name))
    if cfg.workspace_lower is not None:
        workspace = HPolytope.box(cfg.workspace_lower, cfg.workspace_upper)
    else:
        workspace = plant.net_workspace
    return Pipeline(cfg=cfg, plant=plant, net=net, workspace=workspace)


def certification_problem(pipe: Pipeline):
    """True map, network, grid box and Lipschitz data for the certificate.

    The aircraft and UAV networks are certified on their own input spaces;
    the PMSM fixture's error is independent of v by construction, so its
    z-subnet is certified over the z-box.
    """
    cfg = pipe.cfg
    if cfg.plant == "aircraft":
        params = pipe.plant.extras["params"]
        lo = np.array([-params.phi_bar, -params.v_bar])
        hi = -lo
        gamma = aircraft_mod.aircraft_lipschitz(params)["gamma_phi"]

        def true_map(pts):
            return aircraft_mod.aircraft_phi(pts[:, 0], pts[:, 1], params)

        return true_map, pipe.net, (lo, hi), np.array([gamma]), pipe.ensure_cells()
    if cfg.plant == "uav":
        params = pipe.plant.extras["params"]
        lo = np.array([params.velocity_lo] * 2)
        hi = np.array([params.velocity_hi] * 2)
        return uav_mod.speed_map, pipe.net, (lo, hi), np.array([1.0]), \
            pipe.ensure_cells()
    if cfg.plant == "pmsm":
        params = pipe.plant.extras["params"]
        sub, _ = pmsm_mod.split_network(pipe.net, params)
        lo = np.array(params.z_lower)
        hi = np.array(params.z_upper)
        sub_cells = enumerate_cells(sub, HPolytope.box(lo, hi))

        def true_map(pts):
            return pmsm_mod.pmsm_state_part(pts, params)

        return true_map, sub, (lo, hi), pmsm_mod.state_part_lipschitz(params), \
            sub_cells
    raise ValueError(cfg.plant)


def run_certification(pipe: Pipeline, threads: int = 1):
    true_map, net, (lo, hi), gamma, cells = certification_problem(pipe)
    deltas = pipe.cfg.grid_deltas
    if deltas is None:
        deltas = (hi - lo) / 300.0
    grid = GridSpec(deltas=np.broadcast_to(deltas, lo.shape), lower=lo, upper=hi)
    return grid_error_certificate(true_map, cells, net, grid, gamma,
                                  threads=threads)


def run_taylor_table(pipe: Pipeline):
    """Per-cell Taylor/vertex bounds (aircraft only: the published table)."""
    cfg = pipe.cfg
    if cfg.plant != "aircraft":
        raise ValueError("the per-cell Taylor table is an aircraft analysis")
    params = pipe.plant.extras["params"]
    lips = aircraft_mod.aircraft_lipschitz(params)
    u_max = cfg.taylor_u_max if cfg.taylor_u_max is not None else np.array([4.0])
    eps = cfg.eps if cfg.eps is not None else DEFAULT_EPS["aircraft"]
    union = build_admissible_union(pipe.ensure_cells(), u_max, eps)

    def phi(zeta):
        return aircraft_mod.aircraft_phi(zeta[0], zeta[1], params)

    def phi_grad(zeta):
        return np.array(aircraft_mod.aircraft_phi_grad(zeta[0], zeta[1], params))

    return taylor_cell_bounds(phi, phi_grad, union.cells, lips["C_zeta"]), lips


def _uav_reference(pipe: Pipeline):
    ref = pipe.cfg.reference
    z_ref, v_ref, x0 = uav_mod.turn_reference(
        radius=float(ref.get("radius", 150.0)),
        speed=float(ref.get("speed", 18.0)),
        T_s=pipe.cfg.T_s,
        theta0=np.radians(float(ref.get("start_deg", 15.0))),
        theta1=np.radians(float(ref.get("end_deg", 75.0))),
    )
    return z_ref, v_ref, x0


def build_controller(pipe: Pipeline):
    """Controller closure for the closed-loop runner plus the initial state."""
    cfg = pipe.cfg
    plant = pipe.plant
    U = pipe.ensure_union()
    big_m = pipe.ensure_big_m()
    budget = SolveBudget(max_nodes=cfg.max_nodes, max_ms=cfg.max_ms)
    fallback = None
    if cfg.fallback_max_nodes is not None:
        fallback = SolveBudget(max_nodes=cfg.fallback_max_nodes, max_ms=cfg.max_ms)

    if cfg.controller == "clf":
        if cfg.P is None or cfg.gamma is None:
            raise ValueError("CLF control needs tuning.P and tuning.gamma")
        spec = ClfSpec(P=cfg.P, gamma=cfg.gamma, gain=cfg.gain)
        ctl = make_clf_controller(spec, U, plant.A, plant.B, big_m,
                                  input_map=plant.input_map, budget=budget)
        x0 = cfg.x0 if cfg.x0 is not None else np.zeros(plant.n)
        return ctl, np.asarray(x0, dtype=float), {"clf_spec": spec}

    Q = cfg.Q if cfg.Q is not None else np.eye(plant.n_z)
    R = cfg.R if cfg.R is not None else 0.1 * np.eye(plant.m)
    A_d, B_d = rk4_discretize(plant.A, plant.B, cfg.T_s)
    input_rows = None
    if cfg.plant == "uav":
        input_rows = uav_mod.accel_polygon(plant.extras["params"],
                                           cfg.polygon_sides)
    spec = MpcSpec(Q=Q, R=R, N_p=cfg.N_p, T_s=cfg.T_s, A_d=A_d, B_d=B_d,
                   state_rows=plant.state_rows, input_rows=input_rows,
                   input_map=plant.input_map, budget=budget,
                   fallback_budget=fallback)

    refs = None
    ref_cells = None
    x0 = cfg.x0
    if cfg.plant == "uav":
        z_ref, v_ref, x0_ref = _uav_reference(pipe)
        if x0 is None:
            x0 = x0_ref

        def refs(k):
            return (np.array([z_ref(k + i) for i in range(cfg.N_p)]),
                    np.array([v_ref(k + i) for i in range(cfg.N_p)]))

        def ref_cells(k):
            return [locate_cell(U, plant.input_map
                                @ np.concatenate([z_ref(k + i), v_ref(k + i)]))
                    for i in range(cfg.N_p)]
    elif cfg.plant == "pmsm" and cfg.reference.get("type", "equilibrium") \
            == "equilibrium":
        z_eq = plant.equilibrium_z
        v_eq = plant.equilibrium_v

        def refs(k):
            return np.tile(z_eq, (cfg.N_p, 1)), np.tile(v_eq, (cfg.N_p, 1))

    if x0 is None:
        x0 = np.zeros(plant.n)

    if cfg.controller == "flmpc":
        ctl = make_flmpc_controller(spec, U, plant.phi, refs=refs)
    else:
        ctl = make_mpc_controller(spec, U, big_m, refs=refs, ref_cells=ref_cells)
    return ctl, np.asarray(x0, dtype=float), {"mpc_spec": spec, "refs": refs}


def run_scenario(pipe: Pipeline):
    ctl, x0, info = build_controller(pipe)
    result = run_closed_loop(pipe.plant, ctl, x0, T_sim=pipe.cfg.duration,
                             T_s=pipe.cfg.T_s, h=pipe.cfg.substep,
                             union=pipe.ensure_union(),
                             on_infeasible=pipe.cfg.on_infeasible)
    return result, info


def summarize(result, pipe: Pipeline) -> dict:
    zs = np.array([r.z for r in result.records]) if result.records else np.zeros((0, 1))
    out = {
        "steps": len(result.records),
        "input_violations": result.input_violations,
        "state_violations": result.state_violations,
        "mean_solver_ms": result.mean_solver_ms,
        "max_solver_ms": result.max_solver_ms,
        "infeasible_at": result.infeasible_at,
    }
    if len(zs):
        out["final_z"] = zs[-1].tolist()
        out["final_z_norm"] = float(np.linalg.norm(zs[-1]))
        if pipe.plant.equilibrium_z is not None:
            out["final_dist_to_equilibrium"] = float(
                np.linalg.norm(zs[-1] - pipe.plant.equilibrium_z))
    return out
