"""Scenario configuration: one YAML document per experiment.

Validation raises ConfigError with a dotted path to the offending field so
CLI users get precise locations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

VALID_PLANTS = ("aircraft", "uav", "pmsm")
VALID_CONTROLLERS = ("clf", "mpc", "flmpc")


class ConfigError(ValueError):
    pass


def _require(cond, path, msg):
    if not cond:
        raise ConfigError(f"{path}: {msg}")


def _matrix(raw, path, shape=None):
    try:
        M = np.array(raw, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: expected a numeric matrix")
    _require(np.all(np.isfinite(M)), path, "entries must be finite")
    if shape is not None:
        _require(M.shape == shape, path, f"expected shape {shape}, got {M.shape}")
    return M


@dataclass
class ScenarioConfig:
    plant: str
    controller: str = "mpc"
    network: str | None = None        # path; None = packaged fixture
    workspace_lower: np.ndarray | None = None
    workspace_upper: np.ndarray | None = None
    u_max: np.ndarray | None = None   # tightening bounds (plant default if None)
    u_min: np.ndarray | None = None
    eps: np.ndarray | None = None     # recorded certification margin
    grid_deltas: np.ndarray | None = None
    taylor_u_max: np.ndarray | None = None  # output bound for the per-cell table
    Q: np.ndarray | None = None
    R: np.ndarray | None = None
    N_p: int = 5
    T_s: float = 0.1
    gamma: float | None = None
    gain: np.ndarray | None = None
    P: np.ndarray | None = None
    big_m: object = "exact"           # "exact" or a positive number
    x0: np.ndarray | None = None
    duration: float = 10.0
    substep: float = 1e-3
    on_infeasible: str = "raise"
    reference: dict = field(default_factory=dict)
    max_nodes: int = 100_000
    max_ms: float | None = None
    fallback_max_nodes: int | None = None
    polygon_sides: int = 16
    threads: int = 1
    seed: int = 0
    base_dir: Path = Path(".")

    def resolve_path(self, name):
        p = Path(name)
        if p.is_absolute():
            return p
        cand = self.base_dir / p
        if cand.exists():
            return cand
        return Path(__file__).parent / "data" / name


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid YAML ({e})")
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return parse_scenario(raw, base_dir=path.parent)


def parse_scenario(raw: dict, base_dir=Path(".")) -> ScenarioConfig:
    plant = raw.get("plant")
    _require(plant in VALID_PLANTS, "plant", f"must be one of {VALID_PLANTS}")
    cfg = ScenarioConfig(plant=plant, base_dir=Path(base_dir))

    ctl = raw.get("controller", "mpc")
    _require(ctl in VALID_CONTROLLERS, "controller",
             f"must be one of {VALID_CONTROLLERS}")
    cfg.controller = ctl
    if "network" in raw:
        _require(isinstance(raw["network"], str), "network", "expected a path string")
        cfg.network = raw["network"]

    ws = raw.get("workspace", {})
    if ws:
        lower = _matrix(ws.get("lower"), "workspace.lower")
        upper = _matrix(ws.get("upper"), "workspace.upper")
        _require(lower.shape == upper.shape, "workspace", "lower/upper shape mismatch")
        _require(np.all(upper > lower), "workspace", "upper must exceed lower")
        cfg.workspace_lower, cfg.workspace_upper = lower, upper

    tight = raw.get("tightening", {})
    if "u_max" in tight:
        cfg.u_max = np.atleast_1d(_matrix(tight["u_max"], "tightening.u_max"))
    if tight.get("u_min") is not None:
        cfg.u_min = np.atleast_1d(_matrix(tight["u_min"], "tightening.u_min"))
    if "eps" in tight:
        cfg.eps = np.atleast_1d(_matrix(tight["eps"], "tightening.eps"))
        _require(np.all(cfg.eps >= 0), "tightening.eps", "must be nonnegative")

    grid = raw.get("grid", {})
    if "deltas" in grid:
        cfg.grid_deltas = np.atleast_1d(_matrix(grid["deltas"], "grid.deltas"))
        _require(np.all(cfg.grid_deltas > 0), "grid.deltas", "must be positive")
    if "taylor_u_max" in grid:
        cfg.taylor_u_max = np.atleast_1d(_matrix(grid["taylor_u_max"],
                                                 "grid.taylor_u_max"))

    tun = raw.get("tuning", {})
    for key, attr in (("Q", "Q"), ("R", "R"), ("P", "P"), ("K", "gain")):
        if key in tun:
            setattr(cfg, attr, np.atleast_2d(_matrix(tun[key], f"tuning.{key}")))
    if "N_p" in tun:
        _require(isinstance(tun["N_p"], int) and tun["N_p"] >= 1, "tuning.N_p",
                 "must be a positive integer")
        cfg.N_p = tun["N_p"]
    if "T_s" in tun:
        _require(float(tun["T_s"]) > 0, "tuning.T_s", "must be positive")
        cfg.T_s = float(tun["T_s"])
    if "gamma" in tun:
        _require(float(tun["gamma"]) > 0, "tuning.gamma", "must be positive")
        cfg.gamma = float(tun["gamma"])
    if "big_m" in tun:
        bm = tun["big_m"]
        _require(bm == "exact" or (isinstance(bm, (int, float)) and bm > 0),
                 "tuning.big_m", "must be 'exact' or a positive number")
        cfg.big_m = bm

    sim = raw.get("simulation", {})
    if "x0" in sim:
        cfg.x0 = np.atleast_1d(_matrix(sim["x0"], "simulation.x0"))
    if "duration" in sim:
        _require(float(sim["duration"]) > 0, "simulation.duration", "must be positive")
        cfg.duration = float(sim["duration"])
    if "substep" in sim:
        _require(float(sim["substep"]) > 0, "simulation.substep", "must be positive")
        cfg.substep = float(sim["substep"])
    if "on_infeasible" in sim:
        _require(sim["on_infeasible"] in ("raise", "hold"), "simulation.on_infeasible",
                 "must be 'raise' or 'hold'")
        cfg.on_infeasible = sim["on_infeasible"]

    cfg.reference = raw.get("reference", {}) or {}
    _require(isinstance(cfg.reference, dict), "reference", "must be a mapping")

    bud = raw.get("budgets", {})
    if "max_nodes" in bud:
        _require(isinstance(bud["max_nodes"], int) and bud["max_nodes"] >= 0,
                 "budgets.max_nodes", "must be a nonnegative integer")
        cfg.max_nodes = bud["max_nodes"]
    if bud.get("max_ms") is not None:
        _require(float(bud["max_ms"]) > 0, "budgets.max_ms", "must be positive")
        cfg.max_ms = float(bud["max_ms"])
    if bud.get("fallback_max_nodes") is not None:
        _require(isinstance(bud["fallback_max_nodes"], int),
                 "budgets.fallback_max_nodes", "must be an integer")
        cfg.fallback_max_nodes = bud["fallback_max_nodes"]

    if "polygon_sides" in raw:
        _require(isinstance(raw["polygon_sides"], int) and raw["polygon_sides"] >= 3,
                 "polygon_sides", "must be an integer >= 3")
        cfg.polygon_sides = raw["polygon_sides"]
    return cfg
