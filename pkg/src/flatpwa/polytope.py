"""H-representation polytope geometry.

Everything is phrased over ``{x : A x <= b}``. The operations are the ones
the cell-enumeration and error-certification pipeline needs: emptiness,
intersection, exact vertex enumeration for low dimension, the smallest
enclosing 1-norm ball of a vertex set, and worst-case row violations over a
bounded region (big-M sizing).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .numkernel import OPTIMAL, UNBOUNDED, LpProblem, solve_lp
from .tolerances import DEFAULT, Tolerances

VERTEX_DIM_LIMIT = 6


@dataclass
class HPolytope:
    """Finite conjunction of half-spaces A x <= b."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if self.A.shape[0] != self.b.size:
            raise ValueError("row count of A must match b")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))):
            raise ValueError("polytope data must be finite")
        zero_rows = np.abs(self.A).max(axis=1) == 0.0
        if np.any(zero_rows & (self.b < 0)):
            raise ValueError("zero row with negative offset: set is trivially empty")

    @property
    def dim(self):
        return self.A.shape[1]

    @property
    def num_rows(self):
        return self.A.shape[0]

    @classmethod
    def box(cls, lower, upper):
        """Axis-aligned box {lower <= x <= upper}."""
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        if lower.shape != upper.shape:
            raise ValueError("lower/upper shape mismatch")
        if np.any(upper < lower):
            raise ValueError("upper < lower")
        d = lower.size
        A = np.vstack([np.eye(d), -np.eye(d)])
        b = np.concatenate([upper, -lower])
        return cls(A, b)

    def contains(self, x, tol_feas=DEFAULT.feas):
        x = np.asarray(x, dtype=float)
        return bool(np.max(self.A @ x - self.b) <= tol_feas)

    def residual(self, x):
        """Largest row violation at x (negative means strictly inside)."""
        return float(np.max(self.A @ np.asarray(x, dtype=float) - self.b))


@dataclass
class VertexSet:
    """Vertices of a polytope plus the row subsets that generated them."""

    points: np.ndarray  # (k, d)
    supports: list = field(default_factory=list)  # row-index tuples per vertex

    def __len__(self):
        return self.points.shape[0]


def intersect(P: HPolytope, Q: HPolytope) -> HPolytope:
    """Row-wise concatenation; no redundancy removal."""
    if P.dim != Q.dim:
        raise ValueError("ambient dimensions differ")
    return HPolytope(np.vstack([P.A, Q.A]), np.concatenate([P.b, Q.b]))


def find_point(P: HPolytope, tol: Tolerances = DEFAULT):
    """A feasible point of P, or None when P is empty.

    Phase-one LP: minimize a single slack bounding all row violations.
    """
    m, d = P.A.shape
    c = np.zeros(d + 1)
    c[-1] = 1.0
    G = np.hstack([P.A, -np.ones((m, 1))])
    bounds = [(None, None)] * d + [(0.0, None)]
    res = solve_lp(LpProblem(c, G=G, h=P.b, bounds=bounds), tol)
    if res.status != OPTIMAL:
        # feasible region of the phase-one LP is never empty; be defensive
        return None
    if res.x[-1] > tol.feas:
        return None
    return res.x[:d]


def is_empty(P: HPolytope, tol: Tolerances = DEFAULT) -> bool:
    return find_point(P, tol) is None


def chebyshev_center(P: HPolytope, tol: Tolerances = DEFAULT):
    """Center of the largest inscribed Euclidean ball; None when empty.

    For cells with empty interior the returned radius is ~0 and the point is
    still feasible, which is all the callers need.
    """
    m, d = P.A.shape
    norms = np.linalg.norm(P.A, axis=1)
    c = np.zeros(d + 1)
    c[-1] = -1.0
    G = np.hstack([P.A, norms[:, None]])
    bounds = [(None, None)] * d + [(0.0, None)]
    res = solve_lp(LpProblem(c, G=G, h=P.b, bounds=bounds), tol)
    if res.status == UNBOUNDED:
        # unbounded inscribed radius; fall back to any feasible point
        x = find_point(P, tol)
        return (x, np.inf) if x is not None else None
    if res.status != OPTIMAL:
        return None
    r = res.x[-1]
    if r < -tol.feas:
        return None
    return res.x[:d], float(r)


def is_bounded(P: HPolytope, tol: Tolerances = DEFAULT) -> bool:
    """True when every coordinate direction has a bounded LP over P."""
    d = P.dim
    for i in range(d):
        for sign in (1.0, -1.0):
            c = np.zeros(d)
            c[i] = sign
            if solve_lp(LpProblem(c, G=P.A, h=P.b), tol).status == UNBOUNDED:
                return False
    return True


def vertices(P: HPolytope, tol: Tolerances = DEFAULT) -> VertexSet:
    """Exact vertex enumeration by solving all d-subsets of active rows.

    Only valid (and guarded) for dim <= 6; the caller guarantees boundedness
    by intersecting with a workspace box first, and we verify it.
    """
    m, d = P.A.shape
    if d > VERTEX_DIM_LIMIT:
        raise ValueError(f"vertex enumeration limited to dim <= {VERTEX_DIM_LIMIT}")
    if m < d:
        raise ValueError("fewer rows than dimensions: unbounded")
    if not is_bounded(P, tol):
        raise ValueError("polytope is unbounded")
    pts = []
    supports = []
    for rows in combinations(range(m), d):
        Asub = P.A[list(rows)]
        bsub = P.b[list(rows)]
        try:
            v = np.linalg.solve(Asub, bsub)
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(v)):
            continue
        if np.max(P.A @ v - P.b) > tol.feas:
            continue
        dup = False
        for q in pts:
            if np.max(np.abs(q - v)) <= tol.vertex_dedupe:
                dup = True
                break
        if not dup:
            pts.append(v)
            supports.append(rows)
    if not pts:
        return VertexSet(np.zeros((0, d)), [])
    return VertexSet(np.array(pts), supports)


def min_enclosing_l1_ball(V: VertexSet, tol: Tolerances = DEFAULT, center=None):
    """Smallest 1-norm ball containing every vertex.

    With ``center=None`` the center is optimized too, as an LP over
    (center, per-vertex per-coordinate absolute-value slacks, radius):
        t_ki >= +-(v_ki - c_i),  sum_i t_ki <= r,  minimize r.
    A fixed ``center`` pins the ball (the published per-cell analysis uses
    the cell's vertex centroid), leaving r = max_k ||v_k - center||_1.
    """
    if len(V) == 0:
        raise ValueError("empty vertex set")
    if center is not None:
        center = np.asarray(center, dtype=float)
        return center, float(np.abs(V.points - center).sum(axis=1).max())
    pts = V.points
    k, d = pts.shape
    # variables: c (d), t (k*d), r
    nv = d + k * d + 1
    cost = np.zeros(nv)
    cost[-1] = 1.0
    rows = []
    rhs = []
    for a in range(k):
        for i in range(d):
            # v_ai - c_i <= t_ai   ->  -c_i - t_ai <= -v_ai
            r1 = np.zeros(nv)
            r1[i] = -1.0
            r1[d + a * d + i] = -1.0
            rows.append(r1)
            rhs.append(-pts[a, i])
            # c_i - v_ai <= t_ai
            r2 = np.zeros(nv)
            r2[i] = 1.0
            r2[d + a * d + i] = -1.0
            rows.append(r2)
            rhs.append(pts[a, i])
        r3 = np.zeros(nv)
        r3[d + a * d:d + (a + 1) * d] = 1.0
        r3[-1] = -1.0
        rows.append(r3)
        rhs.append(0.0)
    res = solve_lp(LpProblem(cost, G=np.array(rows), h=np.array(rhs)), tol)
    if res.status != OPTIMAL:
        raise RuntimeError("enclosing-ball LP failed")
    return res.x[:d], float(res.x[-1])


def row_violations(P: HPolytope, Z: HPolytope, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Per-row worst violation max_{x in Z} (A_j x - b_j), one LP per row."""
    if P.dim != Z.dim:
        raise ValueError("ambient dimensions differ")
    out = np.empty(P.num_rows)
    for j in range(P.num_rows):
        res = solve_lp(LpProblem(-P.A[j], G=Z.A, h=Z.b), tol)
        if res.status == UNBOUNDED:
            raise ValueError("region Z is unbounded")
        if res.status != OPTIMAL:
            raise ValueError("region Z is empty")
        out[j] = -res.objective - P.b[j]
    return out


def max_row_violation(P: HPolytope, Z: HPolytope, tol: Tolerances = DEFAULT) -> float:
    """M* = max_j max_{x in Z} (A_j x - b_j); the smallest sound big-M for P over Z."""
    return float(np.max(row_violations(P, Z, tol)))
