"""Big-M mixed-integer encodings of the union-of-cells admissible set.

The admissible set is a union of polytopes in the network-input space
(cell half-spaces plus tightened output bounds). Selecting a member with
one binary per cell and a cardinality row

    Theta_j zeta <= theta_j + beta_j M_j,   sum_j beta_j = |A| - 1

keeps exactly one cell's rows hard. Horizon encodings repeat the step
blocks under the discrete dynamics and produce one MIQP.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .polytope import HPolytope, intersect, is_empty, row_violations
from .relupwa import PwaDecomposition
from .tolerances import DEFAULT, Tolerances


@dataclass
class AdmissibleCell:
    alpha: np.ndarray
    F: np.ndarray
    f: np.ndarray
    polytope: HPolytope  # support rows + workspace rows + output-bound rows


@dataclass
class AdmissibleUnion:
    cells: list
    lower: np.ndarray   # tightened output lower bounds
    upper: np.ndarray   # tightened output upper bounds
    eps: np.ndarray
    input_dim: int

    def __len__(self):
        return len(self.cells)


def build_admissible_union(d: PwaDecomposition, u_max, eps, u_min=None,
                           tol: Tolerances = DEFAULT) -> AdmissibleUnion:
    """Append tightened output bounds to every cell and drop the emptied ones.

    Symmetric bounds |F zeta + f| <= u_max - eps by default; pass ``u_min``
    for one-sided ranges such as a lower airspeed limit.
    """
    n_out = d.pieces[0].F.shape[0]
    u_max = np.broadcast_to(np.atleast_1d(np.asarray(u_max, dtype=float)), (n_out,))
    eps = np.broadcast_to(np.atleast_1d(np.asarray(eps, dtype=float)), (n_out,)).copy()
    if np.any(eps < 0):
        raise ValueError("tightening eps must be nonnegative")
    if u_min is None:
        u_min = -u_max
    else:
        u_min = np.broadcast_to(np.atleast_1d(np.asarray(u_min, dtype=float)), (n_out,))
    hi = u_max - eps
    lo = u_min + eps
    if np.any(hi <= lo):
        raise ValueError("tightening leaves an empty output range (eps too large)")
    cells = []
    for p in d.pieces:
        rows = np.vstack([p.F, -p.F])
        rhs = np.concatenate([hi - p.f, p.f - lo])
        zero = np.abs(rows).max(axis=1) == 0.0
        if np.any(rhs[zero] < 0):
            continue  # constant output regime outside the tightened range
        cell = intersect(p.polytope, HPolytope(rows, rhs))
        if is_empty(cell, tol):
            continue
        cells.append(AdmissibleCell(alpha=p.alpha, F=p.F, f=p.f, polytope=cell))
    if not cells:
        raise ValueError("admissible set is empty: every tightened cell vanished")
    return AdmissibleUnion(cells=cells, lower=lo, upper=hi, eps=eps,
                           input_dim=d.workspace.dim)


@dataclass
class BigMData:
    per_row: list           # one array of row constants per cell
    per_cell: np.ndarray    # max over rows, reported per cell

    @classmethod
    def uniform(cls, U: AdmissibleUnion, value: float):
        return cls(per_row=[np.full(c.polytope.num_rows, float(value)) for c in U.cells],
                   per_cell=np.full(len(U), float(value)))


def compute_big_m(U: AdmissibleUnion, Z_box: HPolytope,
                  tol: Tolerances = DEFAULT) -> BigMData:
    """Smallest sound per-row big-M constants over the bounded region Z_box.

    Each row constant is max_{zeta in Z_box} (Theta_j zeta - theta_j),
    floored at zero; one LP per row.
    """
    per_row = []
    per_cell = []
    for c in U.cells:
        v = np.maximum(row_violations(c.polytope, Z_box, tol), 0.0)
        per_row.append(v)
        per_cell.append(float(v.max()))
    return BigMData(per_row=per_row, per_cell=np.array(per_cell))


def validate_big_m_override(U: AdmissibleUnion, Z_box: HPolytope, value: float,
                            tol: Tolerances = DEFAULT) -> BigMData:
    """Uniform override, rejected when it undercuts any exact row constant."""
    exact = compute_big_m(U, Z_box, tol)
    worst = float(exact.per_cell.max())
    if value < worst:
        raise ValueError(
            f"big-M override {value} is below the required M*={worst:.4f}; "
            "the relaxation would cut feasible points")
    return BigMData.uniform(U, value)


@dataclass
class MiqpModel:
    """Quadratic cost + affine rows over [continuous; binary] variables.

    Inequalities G [x; beta] <= h carry at most one binary coefficient per
    row (the -M activation column); equality rows hold the dynamics, the
    initial condition and one cardinality row per step.
    """

    H: np.ndarray
    g: np.ndarray
    c0: float
    G: np.ndarray
    h: np.ndarray
    E: np.ndarray
    d: np.ndarray
    n_cont: int
    n_bin: int
    binary_groups: list = field(default_factory=list)   # per step: binary column idx
    binary_labels: list = field(default_factory=list)   # per binary: (step, cell)
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.n_cont + self.n_bin

    def binary_columns(self):
        return list(range(self.n_cont, self.n_cont + self.n_bin))


def _lift_cell_rows(cell: AdmissibleCell, input_map, zeta_dim):
    """Cell rows re-expressed over zeta = (z, v) through the selector S."""
    S = np.eye(zeta_dim) if input_map is None else np.asarray(input_map, dtype=float)
    if S.shape != (cell.polytope.dim, zeta_dim):
        raise ValueError("input map shape does not match cell/zeta dimensions")
    return cell.polytope.A @ S, cell.polytope.b.copy()


def encode_step(U: AdmissibleUnion, big_m: BigMData, zeta_cols, beta_cols,
                total_vars: int, input_map=None):
    """One time step of Eq.-style big-M rows plus its cardinality row.

    ``zeta_cols`` are the columns of (z, v) within the full variable vector,
    ``beta_cols`` the per-cell binary columns. With a single cell no binary
    is needed and the rows are emitted hard.
    """
    zeta_cols = np.asarray(zeta_cols, dtype=int)
    rows = []
    rhs = []
    for j, cell in enumerate(U.cells):
        A_z, b_z = _lift_cell_rows(cell, input_map, zeta_cols.size)
        M = big_m.per_row[j]
        for r in range(A_z.shape[0]):
            row = np.zeros(total_vars)
            row[zeta_cols] = A_z[r]
            if len(U) > 1:
                row[beta_cols[j]] = -M[r]
            rows.append(row)
            rhs.append(b_z[r])
    card_row = None
    card_rhs = None
    if len(U) > 1:
        card_row = np.zeros(total_vars)
        card_row[np.asarray(beta_cols, dtype=int)] = 1.0
        card_rhs = float(len(U) - 1)
    return np.array(rows), np.array(rhs), card_row, card_rhs


def encode_horizon(U: AdmissibleUnion | None, N_p: int, A_d, B_d, Q, R, z0,
                   big_m: BigMData | None = None,
                   state_rows: HPolytope | None = None,
                   input_map=None, z_ref=None, v_ref=None,
                   input_rows: HPolytope | None = None,
                   terminal_weight=None) -> MiqpModel:
    """Receding-horizon MIQP.

    Cost sum_{i=0}^{N_p-1} ||z_i - z_ref_i||_Q^2 + ||v_i - v_ref_i||_R^2 with
    stage indices as printed (no terminal term unless ``terminal_weight`` is
    supplied), dynamics equalities, per-step admissible-union big-M groups,
    optional hard state rows on z_i and optional convex rows on v_i.
    ``U=None`` omits the union entirely (the plain-QP base used by FL-MPC).
    """
    A_d = np.atleast_2d(np.asarray(A_d, dtype=float))
    B_d = np.atleast_2d(np.asarray(B_d, dtype=float))
    n_z = A_d.shape[0]
    m = B_d.shape[1]
    if N_p < 1:
        raise ValueError("N_p must be >= 1")
    if A_d.shape != (n_z, n_z) or B_d.shape != (n_z, m):
        raise ValueError("A_d/B_d dimension mismatch")
    z0 = np.asarray(z0, dtype=float)
    if z0.size != n_z:
        raise ValueError("z0 dimension mismatch")
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if z_ref is not None:
        z_ref = np.atleast_2d(np.asarray(z_ref, dtype=float))
        if z_ref.shape[0] < N_p:
            raise ValueError("z_ref horizon shorter than N_p")
    if v_ref is not None:
        v_ref = np.atleast_2d(np.asarray(v_ref, dtype=float))
        if v_ref.shape[0] < N_p:
            raise ValueError("v_ref horizon shorter than N_p")

    n_states = n_z * (N_p + 1)
    n_inputs = m * N_p
    n_cont = n_states + n_inputs
    use_cells = U is not None
    if use_cells and big_m is None:
        raise ValueError("big_m data required when a union is supplied")
    use_bin = use_cells and len(U) > 1
    n_bin = len(U) * N_p if use_bin else 0
    n = n_cont + n_bin

    def z_cols(i):
        return np.arange(i * n_z, (i + 1) * n_z)

    def v_cols(i):
        return np.arange(n_states + i * m, n_states + (i + 1) * m)

    def beta_cols(i):
        return [n_cont + i * len(U) + j for j in range(len(U))]

    H = np.zeros((n, n))
    g = np.zeros(n)
    c0 = 0.0
    for i in range(N_p):
        zr = np.zeros(n_z) if z_ref is None else z_ref[i]
        vr = np.zeros(m) if v_ref is None else v_ref[i]
        zc, vc = z_cols(i), v_cols(i)
        H[np.ix_(zc, zc)] += 2.0 * Q
        H[np.ix_(vc, vc)] += 2.0 * R
        g[zc] += -2.0 * Q @ zr
        g[vc] += -2.0 * R @ vr
        c0 += float(zr @ Q @ zr + vr @ R @ vr)
    if terminal_weight is not None:
        P = np.atleast_2d(np.asarray(terminal_weight, dtype=float))
        zc = z_cols(N_p)
        zr = np.zeros(n_z) if z_ref is None else z_ref[min(N_p, z_ref.shape[0] - 1)]
        H[np.ix_(zc, zc)] += 2.0 * P
        g[zc] += -2.0 * P @ zr
        c0 += float(zr @ P @ zr)

    eq_rows = []
    eq_rhs = []
    row = np.zeros((n_z, n))
    row[:, z_cols(0)] = np.eye(n_z)
    eq_rows.append(row)
    eq_rhs.append(z0)
    for i in range(N_p):
        row = np.zeros((n_z, n))
        row[:, z_cols(i + 1)] = np.eye(n_z)
        row[:, z_cols(i)] = -A_d
        row[:, v_cols(i)] = -B_d
        eq_rows.append(row)
        eq_rhs.append(np.zeros(n_z))

    G_blocks = []
    h_blocks = []
    groups = []
    labels = []
    zeta_cols_of = lambda i: np.concatenate([z_cols(i), v_cols(i)])
    for i in range(N_p):
        if use_cells:
            bcols = beta_cols(i) if use_bin else []
            Gs, hs, card, card_rhs = encode_step(U, big_m, zeta_cols_of(i),
                                                 bcols, n, input_map)
            G_blocks.append(Gs)
            h_blocks.append(hs)
            if card is not None:
                eq_rows.append(card[None, :])
                eq_rhs.append(np.array([card_rhs]))
                groups.append(bcols)
                labels.extend((i, j) for j in range(len(U)))
        if state_rows is not None:
            Sg = np.zeros((state_rows.num_rows, n))
            Sg[:, z_cols(i)] = state_rows.A
            G_blocks.append(Sg)
            h_blocks.append(state_rows.b)
        if input_rows is not None:
            Ig = np.zeros((input_rows.num_rows, n))
            Ig[:, v_cols(i)] = input_rows.A
            G_blocks.append(Ig)
            h_blocks.append(input_rows.b)
    if use_bin:
        # box rows 0 <= beta <= 1 (integrality is the solver's concern)
        box = np.zeros((2 * n_bin, n))
        box_rhs = np.empty(2 * n_bin)
        for k in range(n_bin):
            box[2 * k, n_cont + k] = 1.0
            box_rhs[2 * k] = 1.0
            box[2 * k + 1, n_cont + k] = -1.0
            box_rhs[2 * k + 1] = 0.0
        G_blocks.append(box)
        h_blocks.append(box_rhs)

    if not G_blocks:
        G_blocks = [np.zeros((0, n))]
        h_blocks = [np.zeros(0)]
    model = MiqpModel(
        H=H, g=g, c0=c0,
        G=np.vstack(G_blocks), h=np.concatenate(h_blocks),
        E=np.vstack(eq_rows), d=np.concatenate(eq_rhs),
        n_cont=n_cont, n_bin=n_bin,
        binary_groups=groups, binary_labels=labels,
        meta={"n_z": n_z, "m": m, "N_p": N_p,
              "num_cells": len(U) if use_cells else 0},
    )
    return model


def encode_point(U: AdmissibleUnion, z, big_m: BigMData, input_map, n_z: int,
                 m: int):
    """Single-instant membership rows with z fixed: variables are [v; beta].

    Returns (G, h, E, d, n_bin, groups, labels); rows whose zeta coefficients
    touch only z collapse into constants (infeasible constants surface as
    infeasible rows, which is the honest outcome for states outside the
    workspace).
    """
    z = np.asarray(z, dtype=float)
    use_bin = len(U) > 1
    n_bin = len(U) if use_bin else 0
    n = m + n_bin
    rows = []
    rhs = []
    for j, cell in enumerate(U.cells):
        A_z, b_z = _lift_cell_rows(cell, input_map, n_z + m)
        Av = A_z[:, n_z:]
        const = A_z[:, :n_z] @ z
        for r in range(Av.shape[0]):
            row = np.zeros(n)
            row[:m] = Av[r]
            if use_bin:
                row[m + j] = -big_m.per_row[j][r]
            rows.append(row)
            rhs.append(b_z[r] - const[r])
    E = np.zeros((0, n))
    d = np.zeros(0)
    groups = []
    labels = []
    if use_bin:
        card = np.zeros(n)
        card[m:] = 1.0
        E = card[None, :]
        d = np.array([float(len(U) - 1)])
        groups = [list(range(m, m + n_bin))]
        labels = [(0, j) for j in range(len(U))]
        for k in range(n_bin):
            up = np.zeros(n)
            up[m + k] = 1.0
            rows.append(up)
            rhs.append(1.0)
            dn = np.zeros(n)
            dn[m + k] = -1.0
            rows.append(dn)
            rhs.append(0.0)
    return np.array(rows), np.array(rhs), E, d, n_bin, groups, labels


def export_model_text(model: MiqpModel) -> str:
    """Plain-text listing of a built model for debugging against external
    solvers: objective, rows, binaries."""
    lines = ["MIQP model", f"continuous {model.n_cont} binary {model.n_bin}", "objective:"]
    Hnz = np.argwhere(np.triu(model.H) != 0)
    terms = [f" {model.H[i, j]:+.12g} x{i}*x{j}" for i, j in Hnz]
    terms += [f" {model.g[i]:+.12g} x{i}" for i in np.flatnonzero(model.g)]
    lines.append("  min 0.5*[" + "".join(t for t in terms) + f" ] {model.c0:+.12g}")
    lines.append("subject to:")
    for r in range(model.G.shape[0]):
        nz = np.flatnonzero(model.G[r])
        body = " + ".join(f"{model.G[r, i]:.12g}*x{i}" for i in nz)
        lines.append(f"  {body} <= {model.h[r]:.12g}")
    for r in range(model.E.shape[0]):
        nz = np.flatnonzero(model.E[r])
        body = " + ".join(f"{model.E[r, i]:.12g}*x{i}" for i in nz)
        lines.append(f"  {body} == {model.d[r]:.12g}")
    if model.n_bin:
        cols = ", ".join(f"x{i}" for i in model.binary_columns())
        lines.append(f"binary: {cols}")
    return "\n".join(lines) + "\n"
