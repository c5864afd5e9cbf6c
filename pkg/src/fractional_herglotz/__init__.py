"""Fractional Herglotz variational problems with general memory kernels."""

__version__ = "0.1.0"

from .applications import OscillatorParams, alpha_sweep, classical_reference
from .errors import (
    ConfigError,
    ContractError,
    DomainError,
    EvaluationError,
    HerglotzError,
    SolverSetupError,
)
from .herglotz import HerglotzProblem, el_residual, evaluate_z, transversality_residual
from .kernels import KernelSpec, ParameterSet, check_complete_monotonicity, make_caputo_kernel
from .lagrangians import Lagrangian
from .noether import invariance_defect, noether_operator, noether_residual
from .numgrid import Grid, GridFunction
from .operators import OperatorConfig, apply_A, apply_B, apply_K, ibp_residual
from .solver import SolveOptions, refine_and_verify, solve_direct

__all__ = [
    "KernelSpec",
    "ParameterSet",
    "make_caputo_kernel",
    "check_complete_monotonicity",
    "Grid",
    "GridFunction",
    "OperatorConfig",
    "apply_K",
    "apply_A",
    "apply_B",
    "ibp_residual",
    "Lagrangian",
    "HerglotzProblem",
    "evaluate_z",
    "el_residual",
    "transversality_residual",
    "SolveOptions",
    "solve_direct",
    "refine_and_verify",
    "invariance_defect",
    "noether_operator",
    "noether_residual",
    "OscillatorParams",
    "alpha_sweep",
    "classical_reference",
    "HerglotzError",
    "DomainError",
    "EvaluationError",
    "ContractError",
    "SolverSetupError",
    "ConfigError",
]
