"""Basis pursuit denoising baseline.

Minimizes ``0.5 ||A s - x||**2 + tau ||s||_1`` by accelerated iterative
soft thresholding (FISTA) with a monotone safeguard: whenever the
accelerated point does not lower the objective, momentum is reset and a
plain ISTA step is taken from the current iterate, which never increases
the objective for step ``1 / ||A||_2**2``.

This is a generic proximal-gradient stand-in for GPSR, not a
reimplementation of it.
"""

from __future__ import annotations

import math

import numpy as np

from ..core_model import MixingProblem
from ..errors import ParameterError
from .base import RecoveryResult, StageTrace

__all__ = ["bpdn_solve", "bpdn_objective", "soft_threshold", "default_tau"]


def soft_threshold(v, threshold):
    """``sign(v) * max(|v| - threshold, 0)``."""
    return np.sign(v) * np.maximum(np.abs(v) - threshold, 0.0)


def bpdn_objective(s, problem: MixingProblem, tau: float) -> float:
    r = problem.matrix_a @ s - problem.observation_x
    return 0.5 * float(r @ r) + tau * float(np.sum(np.abs(s)))


def default_tau(problem: MixingProblem, fraction: float = 0.1) -> float:
    """``fraction * ||A^T x||_inf``, the usual fraction-of-maximum heuristic."""
    tau = fraction * float(np.max(np.abs(problem.matrix_a.T @ problem.observation_x)))
    # x = 0 (or x orthogonal to every atom): any tau > 0 gives s = 0.
    return tau if tau > 0 else 1.0


def bpdn_solve(
    problem: MixingProblem,
    tau: float,
    max_iterations: int = 2000,
    tolerance: float = 1e-8,
) -> RecoveryResult:
    """Approximate minimizer of ``0.5 ||A s - x||**2 + tau ||s||_1``.

    Stops when the relative objective decrease of an iteration falls below
    ``tolerance`` or after ``max_iterations``. The trace holds a single
    stage (``sigma=None``) whose ``objectives`` are non-increasing.
    """
    if not (math.isfinite(tau) and tau > 0):
        raise ParameterError(f"tau must be positive, got {tau}")
    if max_iterations < 1:
        raise ParameterError("max_iterations must be >= 1")
    if not tolerance > 0:
        raise ParameterError("tolerance must be positive")

    a, x = problem.matrix_a, problem.observation_x
    lipschitz = float(np.linalg.norm(a, 2)) ** 2
    if lipschitz == 0.0:
        zero = np.zeros(problem.m)
        value = bpdn_objective(zero, problem, tau)
        stage = StageTrace(None, value, value, 0.0, (value,), (False,))
        return RecoveryResult(zero, (stage,), True, "bpdn")
    step = 1.0 / lipschitz
    atx = a.T @ x

    def prox_grad(point):
        return soft_threshold(point - step * (a.T @ (a @ point) - atx), step * tau)

    s = np.zeros(problem.m)
    value = bpdn_objective(s, problem, tau)
    start_value = value
    y, t = s, 1.0
    objectives, accepted = [], []
    converged = False
    for _ in range(max_iterations):
        z = prox_grad(y)
        z_value = bpdn_objective(z, problem, tau)
        momentum_ok = z_value <= value
        if not momentum_ok:
            t = 1.0
            z = prox_grad(s)
            z_value = bpdn_objective(z, problem, tau)
            if z_value > value:
                # only reachable through rounding at the minimizer
                z, z_value = s, value
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = z + ((t - 1.0) / t_next) * (z - s)
        decrease = value - z_value
        previous = value
        s, value, t = z, z_value, t_next
        objectives.append(value)
        accepted.append(momentum_ok)
        if decrease <= tolerance * max(abs(previous), np.finfo(float).tiny):
            converged = True
            break

    stage = StageTrace(None, start_value, value, step, tuple(objectives), tuple(accepted))
    return RecoveryResult(estimate=s, trace=(stage,), converged_cleanly=converged, solver="bpdn")
