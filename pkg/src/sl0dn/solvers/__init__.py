"""Sparse recovery solvers: SL0DN, the SL0 and BPDN baselines, and lambda selection."""

from .base import DIVERGENCE_LIMIT, Metric, RecoveryResult, SparseSolverConfig, StageTrace, StepMode
from .bpdn import bpdn_objective, bpdn_solve, default_tau, soft_threshold
from .lambda_choice import (
    LAMBDA_ALPHA,
    LAMBDA_BETA,
    LambdaChoice,
    LambdaMethod,
    bootstrap_lambda,
    estimate_sigma_n,
    lambda_closed_form,
)
from .linalg import ThinSVD, min_l2_init, thin_svd
from .sl0 import FEASIBILITY_TOLERANCE, FeasibleSetProjector, sl0_solve
from .sl0dn import STEP_GROW, STEP_SHRINK, sl0dn_solve

__all__ = [
    "DIVERGENCE_LIMIT",
    "FEASIBILITY_TOLERANCE",
    "LAMBDA_ALPHA",
    "LAMBDA_BETA",
    "STEP_GROW",
    "STEP_SHRINK",
    "FeasibleSetProjector",
    "LambdaChoice",
    "LambdaMethod",
    "Metric",
    "RecoveryResult",
    "SparseSolverConfig",
    "StageTrace",
    "StepMode",
    "ThinSVD",
    "bootstrap_lambda",
    "bpdn_objective",
    "bpdn_solve",
    "default_tau",
    "estimate_sigma_n",
    "lambda_closed_form",
    "min_l2_init",
    "sl0_solve",
    "sl0dn_solve",
    "soft_threshold",
    "thin_svd",
]
