"""Central numeric tolerance configuration.

Every solver and geometric predicate in the package reads its tolerances
from a single :class:`Tolerances` record so that test suites and callers
can tighten or relax them in one place.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # absolute per-row feasibility residual accepted by LP/QP/polytope code
    feas: float = 1e-8
    # relative objective accuracy demanded of the LP backend
    lp_opt_rel: float = 1e-8
    # KKT residual accepted for a QP solution
    qp_kkt: float = 1e-7
    # absolute symmetry defect tolerated in quadratic cost / symmetric inputs
    sym: float = 1e-10
    # smallest eigenvalue >= -psd * ||H|| still counts as positive semidefinite
    psd: float = 1e-8
    # Tikhonov shift added to H before factorizing KKT systems
    qp_regularization: float = 1e-10
    # duplicate-vertex merge radius (absolute, max-norm)
    vertex_dedupe: float = 1e-7
    # binary variables are accepted as integral within this distance
    binary_integrality: float = 1e-6
    # absolute objective gap at which branch and bound declares optimality
    miqp_gap: float = 1e-6


DEFAULT = Tolerances()
