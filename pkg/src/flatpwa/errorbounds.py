"""Certified bounds on the approximation error of the PWA surrogate.

Two routes:

* dense-grid evaluation with Lipschitz padding: the measured grid maximum
  eps_tilde plus gamma_eps * rho_bar covers every off-grid point, where
  rho_bar is the supremal distance from a workspace point to its nearest
  grid sample;
* per-cell Taylor analysis: a first-order expansion of the true map at a
  cell's linearization point bounds the in-cell error by the Taylor residual
  C_zeta * r_e / 2 plus the surrogate-vs-expansion error at the cell's
  vertices.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .polytope import vertices
from .relupwa import PwaDecomposition, pwa_eval_batch, pwa_lipschitz
from .tolerances import DEFAULT, Tolerances

GRID_POINT_BUDGET = 50_000_000


@dataclass
class GridSpec:
    """Uniform grid i * delta per axis, clipped to the workspace box."""

    deltas: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.deltas = np.atleast_1d(np.asarray(self.deltas, dtype=float))
        self.lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if not (self.deltas.shape == self.lower.shape == self.upper.shape):
            raise ValueError("deltas/lower/upper must share one shape")
        if np.any(self.deltas <= 0):
            raise ValueError("grid steps must be positive")
        if np.any(self.upper < self.lower):
            raise ValueError("upper < lower")

    @classmethod
    def symmetric(cls, deltas, bounds):
        bounds = np.atleast_1d(np.asarray(bounds, dtype=float))
        return cls(deltas, -bounds, bounds)

    @property
    def rho_bar(self):
        """Supremal granularity sqrt(sum (delta_i/2)^2)."""
        return float(np.linalg.norm(self.deltas / 2.0))

    def axis_points(self, i):
        # indices i*delta inside [lower, upper]; endpoints enter only when
        # exactly representable (tiny slack absorbs float rounding)
        d = self.deltas[i]
        i_min = int(np.ceil(self.lower[i] / d - 1e-9))
        i_max = int(np.floor(self.upper[i] / d + 1e-9))
        return np.arange(i_min, i_max + 1) * d

    @property
    def shape(self):
        return tuple(self.axis_points(i).size for i in range(self.deltas.size))

    @property
    def num_points(self):
        n = 1
        for s in self.shape:
            n *= s
        return n


@dataclass
class ErrorCertificate:
    eps_tilde: np.ndarray       # grid maximum per output row
    gamma_eps: np.ndarray       # Lipschitz constant of the error, per row
    rho_bar: float
    grid_points: int
    wall_time_s: float
    argmax: np.ndarray | None = None

    @property
    def eps_bar(self):
        return self.eps_tilde + self.gamma_eps * self.rho_bar

    def to_json(self):
        return {
            "eps_tilde": self.eps_tilde.tolist(),
            "gamma_eps": self.gamma_eps.tolist(),
            "rho_bar": self.rho_bar,
            "eps_bar": self.eps_bar.tolist(),
            "grid_points": self.grid_points,
            "wall_time_s": self.wall_time_s,
            "argmax": None if self.argmax is None else self.argmax.tolist(),
        }


@dataclass
class TaylorCellBound:
    pattern: tuple
    center: np.ndarray
    radius: float
    eps_taylor: float
    eps_vertices: float
    num_vertices: int

    @property
    def total(self):
        return self.eps_taylor + self.eps_vertices


def required_granularity(delta_eps: float, gamma_eps: float) -> float:
    """Largest rho_bar for which the padding term stays below delta_eps."""
    if delta_eps <= 0 or gamma_eps <= 0:
        raise ValueError("delta_eps and gamma_eps must be positive")
    return delta_eps / gamma_eps


def _grid_chunks(grid: GridSpec, chunk_rows):
    axes = [grid.axis_points(i) for i in range(grid.deltas.size)]
    first = axes[0]
    rest = axes[1:]
    if rest:
        mesh_rest = np.meshgrid(*rest, indexing="ij")
        tail = np.column_stack([m.ravel() for m in mesh_rest])
    else:
        tail = np.zeros((1, 0))
    block = max(1, chunk_rows // max(1, tail.shape[0]))
    for k in range(0, first.size, block):
        head = first[k:k + block]
        pts = np.empty((head.size * tail.shape[0], grid.deltas.size))
        pts[:, 0] = np.repeat(head, tail.shape[0])
        if tail.shape[1]:
            pts[:, 1:] = np.tile(tail, (head.size, 1))
        yield pts


def grid_error_certificate(phi, d: PwaDecomposition, net, grid: GridSpec,
                           gamma_phi, threads: int = 1,
                           point_budget: int = GRID_POINT_BUDGET,
                           chunk_rows: int = 500_000) -> ErrorCertificate:
    """Grid-max error with Lipschitz padding.

    ``phi`` maps an (N, n_in) batch to (N,) or (N, n_out) true values; the
    surrogate is evaluated through its piece maps (activation-mask selection,
    identical to the forward pass). gamma_eps = gamma_phi + gamma_nn via the
    triangle inequality.
    """
    total = grid.num_points
    if total > point_budget:
        raise ValueError(
            f"grid has {total} points, over the budget of {point_budget}; "
            "choose coarser steps")
    n_out = d.pieces[0].F.shape[0]
    gamma_phi = np.broadcast_to(np.atleast_1d(np.asarray(gamma_phi, dtype=float)),
                                (n_out,)).copy()
    gamma_eps = gamma_phi + pwa_lipschitz(d)

    def eval_chunk(pts):
        nn = pwa_eval_batch(d, net, pts)
        tr = np.atleast_2d(np.asarray(phi(pts), dtype=float))
        if tr.shape[0] == 1 and nn.shape[0] != 1:
            tr = tr.T
        if tr.ndim == 1 or tr.shape[1] != n_out:
            tr = tr.reshape(nn.shape[0], n_out)
        err = np.abs(tr - nn)
        j = int(np.argmax(err.max(axis=1)))
        return err.max(axis=0), pts[j]

    t0 = time.perf_counter()
    best = np.zeros(n_out)
    arg = None
    chunks = _grid_chunks(grid, chunk_rows)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(eval_chunk, chunks))
    else:
        results = [eval_chunk(pts) for pts in chunks]
    for m, pt in results:
        if arg is None or m.max() > best.max():
            arg = pt
        best = np.maximum(best, m)
    wall = time.perf_counter() - t0
    return ErrorCertificate(eps_tilde=best, gamma_eps=gamma_eps,
                            rho_bar=grid.rho_bar, grid_points=total,
                            wall_time_s=wall, argmax=arg)


def taylor_cell_bounds(phi, phi_grad, pieces, C_zeta,
                       tol: Tolerances = DEFAULT) -> list:
    """Per-cell Taylor + vertex bounds for a scalar-output surrogate.

    Each entry of ``pieces`` must expose ``polytope`` / ``F`` / ``f`` (both
    decomposition pieces and admissible-union members qualify). The
    linearization point is the vertex centroid of the cell and the radius is
    the smallest 1-norm ball at that center containing the cell, matching
    the published per-cell analysis.
    """
    out = []
    for p in pieces:
        V = vertices(p.polytope, tol)
        if len(V) == 0:
            raise ValueError("cell has no vertices (empty or degenerate)")
        center = V.points.mean(axis=0)
        radius = float(np.max(np.abs(V.points - center).sum(axis=1)))
        grad = np.atleast_1d(np.asarray(phi_grad(center), dtype=float))
        taylor = float(phi(center)) + (V.points - center) @ grad
        surrogate = V.points @ p.F[0] + p.f[0]
        eps_h = float(np.max(np.abs(surrogate - taylor)))
        out.append(TaylorCellBound(
            pattern=tuple(int(a) for a in p.alpha),
            center=center,
            radius=radius,
            eps_taylor=float(C_zeta) * radius / 2.0,
            eps_vertices=eps_h,
            num_vertices=len(V),
        ))
    return out
