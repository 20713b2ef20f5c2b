"""Constrained smoothed-l0 baseline (SL0).

Maximizes ``F_sigma(s)`` subject to ``A s = x`` for a decreasing schedule of
widths: every inner iteration takes a ``sigma**2``-scaled gradient step on
the smoothing term and projects back onto the affine feasible set.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from ..core_model import MixingProblem
from ..errors import RankError
from ..smoothed_l0 import smoothed_l0_norm
from .base import RecoveryResult, SparseSolverConfig, StageTrace

__all__ = ["sl0_solve", "FEASIBILITY_TOLERANCE", "FeasibleSetProjector"]

#: Relative residual ``||A s - x|| / ||x||`` every SL0 iterate must meet.
FEASIBILITY_TOLERANCE = 1e-8


class FeasibleSetProjector:
    """Orthogonal projector onto ``{s : A s = x}`` for full-row-rank ``A``.

    Uses a column-pivoted QR factorization ``A^T P = Q R``; the projection
    ``s - A^T (A A^T)^-1 (A s - x)`` becomes ``s - Q (Q^T s - y)`` with
    ``R^T y = P^T x``.
    """

    def __init__(self, a, x):
        n, m = a.shape
        if n > m:
            raise RankError(f"SL0 needs full row rank, impossible for a {n}x{m} matrix")
        q, r, piv = scipy.linalg.qr(a.T, mode="economic", pivoting=True)
        diag = np.abs(np.diag(r))
        tol = max(n, m) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
        if diag.size == 0 or diag[0] == 0.0 or diag[-1] <= tol:
            rank = int(np.count_nonzero(diag > tol))
            raise RankError(
                f"SL0 needs full row rank; matrix has numerical rank {rank} < {n} "
                "(use the relaxed solver for rank-deficient dictionaries)"
            )
        self.q = q
        self.y = scipy.linalg.solve_triangular(r, x[piv], trans="T")

    @property
    def min_norm_point(self) -> np.ndarray:
        return self.q @ self.y

    def __call__(self, s) -> np.ndarray:
        return s - self.q @ (self.q.T @ s - self.y)


def sl0_solve(problem: MixingProblem, config: SparseSolverConfig) -> RecoveryResult:
    """Constrained SL0 with a fixed step ``initial_mu``.

    Only ``schedule``, ``inner_iterations`` and ``initial_mu`` of ``config``
    are used. Each iteration applies
    ``s <- s - mu * s * exp(-s**2 / 2 sigma**2)`` followed by the
    projection. Raises :class:`RankError` if ``A`` lacks full row rank.
    """
    a, x = problem.matrix_a, problem.observation_x
    project = FeasibleSetProjector(a, x)
    mu = config.initial_mu
    s = project.min_norm_point

    trace = []
    for sigma in config.schedule:
        start_value = smoothed_l0_norm(s, sigma)
        objectives = []
        for _ in range(config.inner_iterations):
            with np.errstate(under="ignore"):
                s = s - mu * s * np.exp(-(s * s) / (2.0 * sigma * sigma))
            s = project(s)
            objectives.append(smoothed_l0_norm(s, sigma))
        trace.append(
            StageTrace(
                sigma,
                start_value,
                objectives[-1],
                mu,
                tuple(objectives),
                tuple(b < a_ for a_, b in zip((start_value,) + tuple(objectives), objectives)),
            )
        )

    x_norm = float(np.linalg.norm(x))
    feasible = float(np.linalg.norm(a @ s - x)) <= FEASIBILITY_TOLERANCE * x_norm
    return RecoveryResult(estimate=s, trace=tuple(trace), converged_cleanly=feasible, solver="sl0")
