"""Numerical tolerances shared by every module.

All values apply to row-normalized data.
"""
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    feasibility: float = 1e-9
    optimality: float = 1e-9
    redundancy: float = 1e-7
    full_dim: float = 1e-7
    pivot: float = 1e-11
    law_equal: float = 1e-9
    max_lp_iterations: int = 5000
    max_qp_iterations: int = 500


TOL = Tolerances()
