"""Choosing the fidelity weight from the noise level.

The closed-form rule ``lam = 1 / (0.007 + 3.5 sigma_n**2)`` was fitted on
``m = 1000, n = 400`` Bernoulli-Gaussian problems. When ``sigma_n`` is
unknown, :func:`bootstrap_lambda` alternates between solving with the
current weight and re-estimating ``sigma_n`` from the residual.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ..core_model import MixingProblem, as_source_vector
from ..errors import ParameterError
from .base import SparseSolverConfig
from .sl0dn import sl0dn_solve

__all__ = [
    "LAMBDA_ALPHA",
    "LAMBDA_BETA",
    "LambdaMethod",
    "LambdaChoice",
    "lambda_closed_form",
    "estimate_sigma_n",
    "bootstrap_lambda",
]

LAMBDA_ALPHA = 0.007
LAMBDA_BETA = 3.5


class LambdaMethod(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    BOOTSTRAP = "bootstrap"
    MANUAL = "manual"


@dataclass(frozen=True)
class LambdaChoice:
    lam: float
    sigma_n_used: float
    method: LambdaMethod

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ParameterError(f"lam must be positive, got {self.lam}")
        object.__setattr__(self, "method", LambdaMethod(self.method))


def lambda_closed_form(sigma_n: float) -> LambdaChoice:
    """``lam = 1 / (0.007 + 3.5 sigma_n**2)``."""
    if not (math.isfinite(sigma_n) and sigma_n >= 0):
        raise ParameterError(f"sigma_n must be non-negative, got {sigma_n}")
    lam = 1.0 / (LAMBDA_ALPHA + LAMBDA_BETA * sigma_n * sigma_n)
    return LambdaChoice(lam, float(sigma_n), LambdaMethod.CLOSED_FORM)


def estimate_sigma_n(problem: MixingProblem, estimate) -> float:
    """Root-mean-square residual ``||x - A s_hat|| / sqrt(n)``.

    This is the maximum-likelihood noise level under white Gaussian noise
    once ``s_hat`` is treated as known.
    """
    r = problem.observation_x - problem.matrix_a @ as_source_vector(estimate, problem.m)
    return float(np.linalg.norm(r)) / math.sqrt(problem.n)


def bootstrap_lambda(
    problem: MixingProblem,
    initial_sigma_n: float,
    config: SparseSolverConfig = SparseSolverConfig(),
    rounds: int = 3,
    solver=sl0dn_solve,
):
    """Alternate ``lam <- closed_form(sigma_n)``, solve, ``sigma_n <- residual RMS``.

    Returns ``(LambdaChoice, RecoveryResult)`` for the last round; the
    choice records the noise level that produced the final weight.
    ``rounds=1`` is a single closed-form solve at ``initial_sigma_n``.
    """
    if not (math.isfinite(initial_sigma_n) and initial_sigma_n > 0):
        raise ParameterError(f"initial_sigma_n must be positive, got {initial_sigma_n}")
    if isinstance(rounds, bool) or not isinstance(rounds, int) or rounds < 1:
        raise ParameterError(f"rounds must be a positive integer, got {rounds!r}")
    sigma_n = float(initial_sigma_n)
    for _ in range(rounds):
        choice = lambda_closed_form(sigma_n)
        result = solver(problem, config.with_lambda(choice.lam))
        sigma_n = estimate_sigma_n(problem, result.estimate)
    return LambdaChoice(choice.lam, choice.sigma_n_used, LambdaMethod.BOOTSTRAP), result
