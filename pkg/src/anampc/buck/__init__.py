from .model import (CERAMIC, ELECTROLYTIC, BuckParams, CtModel, Equilibrium, PeriodMap, case_study,
                    ct_matrices, discretize_exact, equilibrium, linearize, nonlinear_g, parallel,
                    period_step)
from .simulate import KERNELS, Scenario, SimTrace, SimulationDiverged, default_kernel, simulate

__all__ = [
    "CERAMIC", "ELECTROLYTIC", "BuckParams", "CtModel", "Equilibrium", "PeriodMap", "case_study",
    "ct_matrices", "discretize_exact", "equilibrium", "linearize", "nonlinear_g", "parallel",
    "period_step", "KERNELS", "Scenario", "SimTrace", "SimulationDiverged", "default_kernel",
    "simulate",
]
