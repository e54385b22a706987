"""Dense LP / convex-QP kernel.

Linear programs are delegated to the HiGHS solver behind a small problem
record; quadratic programs are solved by a primal active-set method on the
KKT system so that branch-and-bound can warm start child nodes from the
parent's active set.

Conventions
-----------
LP:  min c'x   s.t.  G x <= h,  E x = d,  optional per-variable bounds.
QP:  min 1/2 x'H x + g'x + c0   s.t.  G x <= h,  E x = d,  with H >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .tolerances import DEFAULT, Tolerances

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


def _as_matrix(M, name):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


def _as_vector(v, name):
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


@dataclass
class LpProblem:
    """min c'x subject to G x <= h, E x = d and optional box bounds."""

    c: np.ndarray
    G: np.ndarray | None = None
    h: np.ndarray | None = None
    E: np.ndarray | None = None
    d: np.ndarray | None = None
    bounds: list | None = None  # per-variable (lo, hi); None entries mean free

    def __post_init__(self):
        self.c = _as_vector(self.c, "c")
        n = self.c.size
        if self.G is not None:
            self.G = _as_matrix(self.G, "G")
            self.h = _as_vector(self.h, "h")
            if self.G.shape != (self.h.size, n):
                raise ValueError("inconsistent inequality dimensions")
        if self.E is not None:
            self.E = _as_matrix(self.E, "E")
            self.d = _as_vector(self.d, "d")
            if self.E.shape != (self.d.size, n):
                raise ValueError("inconsistent equality dimensions")
        if self.bounds is not None and len(self.bounds) != n:
            raise ValueError("bounds length must match variable count")

    @property
    def n(self):
        return self.c.size


@dataclass
class LpResult:
    status: str
    x: np.ndarray | None = None
    objective: float | None = None
    ineq_dual: np.ndarray | None = None
    eq_dual: np.ndarray | None = None


def solve_lp(p: LpProblem, tol: Tolerances = DEFAULT) -> LpResult:
    """Solve an LP; infeasible/unbounded are regular statuses, not errors."""
    bounds = p.bounds if p.bounds is not None else [(None, None)] * p.n
    res = linprog(
        p.c,
        A_ub=p.G,
        b_ub=p.h,
        A_eq=p.E,
        b_eq=p.d,
        bounds=bounds,
        method="highs",
    )
    if res.status == 0:
        return LpResult(
            OPTIMAL,
            x=np.asarray(res.x, dtype=float),
            objective=float(res.fun),
            ineq_dual=None if p.G is None else np.asarray(res.ineqlin.marginals),
            eq_dual=None if p.E is None else np.asarray(res.eqlin.marginals),
        )
    if res.status == 2:
        return LpResult(INFEASIBLE)
    if res.status == 3:
        return LpResult(UNBOUNDED)
    raise RuntimeError(f"LP backend failed (HiGHS status {res.status}: {res.message})")


@dataclass
class QpProblem:
    """min 1/2 x'H x + g'x + c0 subject to G x <= h, E x = d.

    H must be symmetric within ``tol.sym`` and positive semidefinite
    (smallest eigenvalue >= -tol.psd * ||H||).
    """

    H: np.ndarray
    g: np.ndarray
    G: np.ndarray | None = None
    h: np.ndarray | None = None
    E: np.ndarray | None = None
    d: np.ndarray | None = None
    c0: float = 0.0
    tol: Tolerances = field(default=DEFAULT, repr=False)

    def __post_init__(self):
        self.H = _as_matrix(self.H, "H")
        self.g = _as_vector(self.g, "g")
        n = self.g.size
        if self.H.shape != (n, n):
            raise ValueError("H must be square and match g")
        scale = max(1.0, float(np.abs(self.H).max()))
        if np.abs(self.H - self.H.T).max() > self.tol.sym * scale:
            raise ValueError("H is not symmetric")
        self.H = 0.5 * (self.H + self.H.T)
        lam_min = float(np.linalg.eigvalsh(self.H)[0])
        if lam_min < -self.tol.psd * scale:
            raise ValueError(f"H is not positive semidefinite (lambda_min={lam_min:g})")
        if self.G is not None:
            self.G = _as_matrix(self.G, "G")
            self.h = _as_vector(self.h, "h")
            if self.G.shape != (self.h.size, n):
                raise ValueError("inconsistent inequality dimensions")
        if self.E is not None:
            self.E = _as_matrix(self.E, "E")
            self.d = _as_vector(self.d, "d")
            if self.E.shape != (self.d.size, n):
                raise ValueError("inconsistent equality dimensions")

    @property
    def n(self):
        return self.g.size


@dataclass
class QpResult:
    status: str
    x: np.ndarray | None = None
    objective: float | None = None
    active_set: tuple = ()
    ineq_dual: np.ndarray | None = None
    eq_dual: np.ndarray | None = None
    iterations: int = 0


def _qp_objective(p, x):
    return float(0.5 * x @ p.H @ x + p.g @ x + p.c0)


def _feasible_start(p, tol):
    """Phase-one LP: minimize the largest inequality violation."""
    n = p.n
    if p.G is None and p.E is None:
        return np.zeros(n)
    mi = 0 if p.G is None else p.G.shape[0]
    c = np.zeros(n + 1)
    c[-1] = 1.0
    if mi:
        G1 = np.hstack([p.G, -np.ones((mi, 1))])
        h1 = p.h.copy()
    else:
        G1 = np.zeros((0, n + 1))
        h1 = np.zeros(0)
    E1 = None if p.E is None else np.hstack([p.E, np.zeros((p.E.shape[0], 1))])
    bounds = [(None, None)] * n + [(0.0, None)]
    lp = LpProblem(c, G=G1 if mi else None, h=h1 if mi else None,
                   E=E1, d=None if p.E is None else p.d, bounds=bounds)
    res = solve_lp(lp, tol)
    if res.status != OPTIMAL or res.x[-1] > 10 * tol.feas:
        return None
    return res.x[:n]


def solve_qp(p: QpProblem, x0=None, active_set=None, tol: Tolerances = DEFAULT,
             max_iter=None) -> QpResult:
    """Primal active-set QP solver.

    ``x0`` and ``active_set`` allow warm starting: when ``x0`` is feasible it
    is used directly, and the working set is seeded with the rows of
    ``active_set`` that are still active at ``x0``.
    """
    n = p.n
    reg = p.tol.qp_regularization
    H = p.H + reg * np.eye(n)
    mi = 0 if p.G is None else p.G.shape[0]
    me = 0 if p.E is None else p.E.shape[0]
    if max_iter is None:
        max_iter = 100 + 10 * (n + mi + me)

    x = None
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float)
        ok = True
        if mi and np.max(p.G @ x0 - p.h) > tol.feas:
            ok = False
        if me and np.max(np.abs(p.E @ x0 - p.d)) > tol.feas:
            ok = False
        if ok:
            x = x0.copy()
    if x is None:
        x = _feasible_start(p, tol)
        if x is None:
            return QpResult(INFEASIBLE)

    # working set of inequality rows; equalities are always enforced
    work = []
    if mi:
        resid = p.G @ x - p.h
        seed = [] if active_set is None else [i for i in active_set if 0 <= i < mi]
        for i in seed:
            if resid[i] >= -1e3 * tol.feas and i not in work:
                work.append(i)

    def kkt_solve(rows):
        k = len(rows)
        A = np.zeros((me + k, n))
        if me:
            A[:me] = p.E
        for j, i in enumerate(rows):
            A[me + j] = p.G[i]
        KKT = np.zeros((n + me + k, n + me + k))
        KKT[:n, :n] = H
        KKT[:n, n:] = A.T
        KKT[n:, :n] = A
        rhs = np.concatenate([-(H @ x + p.g), np.zeros(me + k)])
        try:
            sol = np.linalg.solve(KKT, rhs)
        except np.linalg.LinAlgError:
            sol = np.linalg.lstsq(KKT, rhs, rcond=None)[0]
        return sol[:n], sol[n:n + me], sol[n + me:]

    iters = 0
    while iters < max_iter:
        iters += 1
        step, lam_eq, lam_in = kkt_solve(work)
        if np.max(np.abs(step), initial=0.0) <= 1e-11 * (1.0 + np.abs(x).max(initial=0.0)):
            # stationary on the working set; check multiplier signs
            if len(work) == 0 or (lam_in.size and lam_in.min() >= -1e-9) or not lam_in.size:
                ineq_dual = np.zeros(mi)
                for j, i in enumerate(work):
                    ineq_dual[i] = max(lam_in[j], 0.0)
                return QpResult(OPTIMAL, x=x, objective=_qp_objective(p, x),
                                active_set=tuple(sorted(work)),
                                ineq_dual=ineq_dual if mi else None,
                                eq_dual=lam_eq if me else None,
                                iterations=iters)
            j_drop = int(np.argmin(lam_in))
            work.pop(j_drop)
            continue
        # ratio test against rows not in the working set
        alpha = 1.0
        blocker = -1
        if mi:
            Gp = p.G @ step
            resid = p.h - p.G @ x
            for i in range(mi):
                if i in work or Gp[i] <= 1e-12:
                    continue
                a = max(resid[i], 0.0) / Gp[i]
                if a < alpha - 1e-14:
                    alpha = a
                    blocker = i
        x = x + alpha * step
        if blocker >= 0:
            work.append(blocker)
    raise RuntimeError(f"active-set QP did not converge in {max_iter} iterations")


def eig_sym(M, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Eigenvalues of a symmetric matrix, ascending."""
    M = _as_matrix(M, "M")
    if M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    scale = max(1.0, float(np.abs(M).max()))
    if np.abs(M - M.T).max() > tol.sym * scale:
        raise ValueError("matrix is not symmetric")
    return np.linalg.eigvalsh(0.5 * (M + M.T))
