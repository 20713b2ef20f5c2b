"""Smoothed-l0 denoising: graduated minimization of the relaxed objective.

For every width ``sigma_k`` of the schedule the solver runs a fixed number
of variable-step steepest-descent iterations on

    J(s) = (m - F_sigma(s)) + lam ||A s - x||**2

warm-started from the previous stage. Each iteration computes the descent
direction, tests whether the trial point ``s - mu * d`` lowers ``J``, grows
``mu`` by 1.2 on success and halves it otherwise. The starting point is the
minimum-norm solution ``A^+ x``.

The residual ``A s - x`` is carried along incrementally so each iteration
costs three products with ``A``-sized matrices; it is recomputed exactly at
the start and end of every stage.
"""

from __future__ import annotations

import numpy as np

from ..core_model import MixingProblem, as_source_vector
from ..errors import DivergedError
from ..smoothed_l0 import objective_j, RelaxedObjectiveParams, smoothing_gradient
from .base import DIVERGENCE_LIMIT, Metric, RecoveryResult, SparseSolverConfig, StageTrace, StepMode
from .linalg import thin_svd

__all__ = ["sl0dn_solve", "STEP_GROW", "STEP_SHRINK"]

STEP_GROW = 1.2
STEP_SHRINK = 0.5


def _objective(s, r, lam, sigma):
    with np.errstate(under="ignore"):
        l0 = np.sum(-np.expm1(-(s * s) / (2.0 * sigma * sigma)))
    return float(l0 + lam * (r @ r))


def _diverged(s, value):
    return not np.isfinite(value) or not np.all(np.abs(s) <= DIVERGENCE_LIMIT)


def sl0dn_solve(problem: MixingProblem, config: SparseSolverConfig, initial=None) -> RecoveryResult:
    """Recover a sparse ``s`` from ``x = A s + noise``.

    Parameters
    ----------
    problem : MixingProblem
        Matrix ``A`` (any rank, any aspect ratio) and observation ``x``.
    config : SparseSolverConfig
        ``lam``, schedule, inner iteration count, initial step, step mode
        and descent metric.
    initial : array_like, optional
        Starting point; defaults to the minimum-norm solution ``A^+ x``.

    Returns
    -------
    RecoveryResult
        ``estimate`` is the point reached after the last stage; ``trace``
        has one :class:`StageTrace` per schedule entry.

    Raises
    ------
    DivergedError
        If the objective becomes non-finite or an entry of ``s`` exceeds
        :data:`DIVERGENCE_LIMIT`. The error carries the partial trace.
    """
    a, x = problem.matrix_a, problem.observation_x
    lam = config.lam
    svd = thin_svd(a)
    if initial is None:
        s = svd.min_norm_solution(x)
    else:
        s = as_source_vector(initial, problem.m).copy()
    reject = config.step_mode is StepMode.REJECT_ON_INCREASE
    scaled = config.metric is Metric.SCALED
    sv2 = svd.s * svd.s

    trace = []
    clean = True
    for sigma in config.schedule:
        sigma2 = sigma * sigma
        if scaled:
            # (I + c A^T A)^-1 = I - V diag(c s^2 / (1 + c s^2)) V^T
            c = 2.0 * lam * sigma2
            shrink = c * sv2 / (1.0 + c * sv2)
            keep = svd.s * (1.0 - shrink)
        else:
            unit = 1.0 / (2.0 * lam * svd.norm2**2 + 1.0 / sigma2)

        mu = config.initial_mu
        r = a @ s - x
        value = _objective(s, r, lam, sigma)
        start_value = value
        objectives, accepted = [], []
        for _ in range(config.inner_iterations):
            g = 2.0 * lam * (a.T @ r) + smoothing_gradient(s, sigma)
            if scaled:
                vg = svd.vt @ g
                d = sigma2 * (g - svd.vt.T @ (shrink * vg))
                ad = sigma2 * (svd.u @ (keep * vg))
            else:
                d = unit * g
                ad = a @ d
            trial_s = s - mu * d
            trial_r = r - mu * ad
            trial_value = _objective(trial_s, trial_r, lam, sigma)
            improved = trial_value < value
            if improved or not reject:
                s, r, value = trial_s, trial_r, trial_value
            mu *= STEP_GROW if improved else STEP_SHRINK
            objectives.append(value)
            accepted.append(improved)
            if _diverged(s, value):
                trace.append(StageTrace(sigma, start_value, value, mu, tuple(objectives), tuple(accepted)))
                raise DivergedError(
                    f"SL0DN diverged at sigma={sigma:g} after {len(objectives)} inner iterations",
                    trace,
                )

        final_value = objective_j(s, problem, RelaxedObjectiveParams(lam, sigma))
        clean = clean and final_value <= start_value
        trace.append(
            StageTrace(sigma, start_value, final_value, mu, tuple(objectives), tuple(accepted))
        )

    return RecoveryResult(estimate=s, trace=tuple(trace), converged_cleanly=clean, solver="sl0dn")
