"""RK4 integration, exact discretization, and closed-loop running.

The closed loop applies the linearizing map continuously inside each
sampling interval: the controller fixes v for [kTs, (k+1)Ts) and the plant
integrates xdot = f(x, Phi(z(x), v)) with RK4 substeps, re-evaluating the
inner feedback at every stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def rk4_step(f, x, u, h):
    k1 = f(x, u)
    k2 = f(x + 0.5 * h * k1, u)
    k3 = f(x + 0.5 * h * k2, u)
    k4 = f(x + h * k3, u)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_integrate(f, x0, u_of_t, T, h):
    """Classical RK4 over [0, T] with step h; returns (times, states)."""
    if h <= 0:
        raise ValueError("step size must be positive")
    steps = int(round(T / h))
    if abs(steps * h - T) > 1e-9 * max(1.0, T):
        raise ValueError("h must divide T within rounding")
    x = np.asarray(x0, dtype=float).copy()
    ts = [0.0]
    xs = [x.copy()]
    for k in range(steps):
        t = k * h
        x = rk4_step(f, x, u_of_t(t), h)
        ts.append((k + 1) * h)
        xs.append(x.copy())
    return np.array(ts), np.array(xs)


def rk4_discretize(A, B, T_s):
    """Zero-order-hold RK4 discretization of xdot = A x + B u.

    A_d = sum_{i=0..4} (A T)^i / i!,  B_d = (sum_{i=1..4} A^{i-1} T^i / i!) B.
    Exact for nilpotent A (every Brunovsky pair here).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    n = A.shape[0]
    Ad = np.eye(n)
    term = np.eye(n)
    S = np.zeros((n, n))
    acc = np.eye(n) * T_s
    for i in range(1, 5):
        term = term @ A * (T_s / i)
        Ad = Ad + term
        S = S + acc
        acc = acc @ A * (T_s / (i + 1))
    return Ad, S @ B


@dataclass
class StepRecord:
    t: float
    x: np.ndarray
    z: np.ndarray
    u: np.ndarray
    v: np.ndarray
    cell_index: int
    solver_ms: float


@dataclass
class ClosedLoopResult:
    records: list
    input_violations: int = 0
    state_violations: int = 0
    solver_ms: list = field(default_factory=list)
    infeasible_at: float | None = None
    extras: dict = field(default_factory=dict)

    @property
    def mean_solver_ms(self):
        return float(np.mean(self.solver_ms)) if self.solver_ms else 0.0

    @property
    def max_solver_ms(self):
        return float(np.max(self.solver_ms)) if self.solver_ms else 0.0

    def final_z(self):
        return self.records[-1].z if self.records else None


def locate_cell(union, y, tol_feas=1e-8):
    """Index of the admissible-union member containing the network input y,
    smallest max-residual wins; -1 when outside all members."""
    best = -1
    best_r = np.inf
    for j, c in enumerate(union.cells):
        r = c.polytope.residual(y)
        if r < best_r:
            best_r = r
            best = j
    return best if best_r <= tol_feas else -1


def run_closed_loop(plant, controller, x0, T_sim, T_s, h=1e-3, union=None,
                    check_margin=1e-6, on_infeasible="raise", stop_when=None):
    """Sample-and-hold closed loop.

    ``controller(z, k)`` returns (v, solver_ms, info). Violations are counted
    against the true nonlinear input map and the plant state rows, never the
    surrogate. ``on_infeasible`` is "raise" or "hold" (reuse previous input);
    ``stop_when(z)`` ends the run early when it returns True.
    """
    x = np.asarray(x0, dtype=float).copy()
    steps = int(round(T_sim / T_s))
    sub = max(1, int(round(T_s / h)))
    hh = T_s / sub
    records = []
    result = ClosedLoopResult(records=records)
    v_prev = None
    for k in range(steps):
        z = plant.to_flat(x)
        if stop_when is not None and stop_when(z):
            break
        t = k * T_s
        try:
            v, ms, info = controller(z, k)
        except ControllerInfeasible:
            if on_infeasible == "hold" and v_prev is not None:
                v, ms, info = v_prev, 0.0, {"held": True}
            else:
                result.infeasible_at = t
                break
        v = np.atleast_1d(np.asarray(v, dtype=float))
        u = plant.true_inputs(x, v)
        if np.any(u > plant.u_max + check_margin) or np.any(u < plant.u_min - check_margin):
            result.input_violations += 1
        if plant.state_rows is not None and \
                np.max(plant.state_rows.A @ z - plant.state_rows.b) > check_margin:
            result.state_violations += 1
        cell = -1
        if union is not None:
            cell = locate_cell(union, plant.net_input(z, v))
        records.append(StepRecord(t=t, x=x.copy(), z=z.copy(), u=np.atleast_1d(u).copy(),
                                  v=v.copy(), cell_index=cell, solver_ms=ms))
        result.solver_ms.append(ms)
        for _ in range(sub):
            x = rk4_step(plant.closed_loop_field, x, v, hh)
        v_prev = (v, 0.0, {})
    return result


class ControllerInfeasible(RuntimeError):
    """Raised when the online program has no admissible input."""


def trace_csv(records, plant) -> str:
    """Fixed-order CSV trace: t, x..., z..., u..., v..., cell_index, solver_ms."""
    cols = (["t"]
            + [f"x{i+1}" for i in range(plant.n)]
            + [f"z{i+1}" for i in range(plant.n_z)]
            + [f"u{i+1}" for i in range(plant.m)]
            + [f"v{i+1}" for i in range(plant.m)]
            + ["cell_index", "solver_ms"])
    lines = [",".join(cols)]
    for r in records:
        vals = ([f"{r.t:.6f}"]
                + [f"{a:.12g}" for a in r.x]
                + [f"{a:.12g}" for a in r.z]
                + [f"{a:.12g}" for a in r.u]
                + [f"{a:.12g}" for a in r.v]
                + [str(r.cell_index), f"{r.solver_ms:.3f}"])
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"
