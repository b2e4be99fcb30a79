"""LP/QP kernels and H-polytope algebra."""
from .lp import (INFEASIBLE, OPTIMAL, UNBOUNDED, LpProblem, LpResult, NumericalFailure,
                 linprog, solve_lp)
from .polytope import (ADJACENT, DISJOINT, OVERLAPPING, Adjacency, ChebyshevBall, EmptyPolytope,
                       Polytope, UnboundedPolytope, are_adjacent, bounding_box, chebyshev,
                       envelope, is_empty, is_full_dimensional, is_subset, normalize,
                       remove_redundant, row_max, sample_uniform, union_is_convex, vertices)
from .qp import QpProblem, QpResult, kkt_residuals, solve_qp

__all__ = [
    "INFEASIBLE", "OPTIMAL", "UNBOUNDED", "LpProblem", "LpResult", "NumericalFailure",
    "linprog", "solve_lp", "ADJACENT", "DISJOINT", "OVERLAPPING", "Adjacency",
    "ChebyshevBall", "EmptyPolytope", "Polytope", "UnboundedPolytope", "are_adjacent",
    "bounding_box", "chebyshev", "envelope", "is_empty", "is_full_dimensional", "is_subset",
    "normalize", "remove_redundant", "row_max", "sample_uniform", "union_is_convex",
    "vertices", "QpProblem", "QpResult", "kkt_residuals", "solve_qp",
]
