"""Linear-algebra helpers: thin SVD with rank cutoff and minimum-norm solves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core_model import MixingProblem

__all__ = ["ThinSVD", "thin_svd", "min_l2_init"]


@dataclass(frozen=True)
class ThinSVD:
    """``A = u @ diag(s) @ vt`` with ``k = min(n, m)`` singular triplets."""

    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray
    rank: int

    @property
    def norm2(self) -> float:
        return float(self.s[0]) if self.s.size else 0.0

    def min_norm_solution(self, x) -> np.ndarray:
        """Minimum-norm least-squares solution of ``A s ~= x`` (pseudoinverse)."""
        r = self.rank
        coeffs = (self.u[:, :r].T @ x) / self.s[:r]
        return self.vt[:r].T @ coeffs


def thin_svd(a) -> ThinSVD:
    # Same cutoff as numpy.linalg.matrix_rank / lstsq(rcond=None).
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    tol = s[0] * max(a.shape) * np.finfo(float).eps if s.size else 0.0
    rank = int(np.count_nonzero(s > tol))
    return ThinSVD(u=u, s=s, vt=vt, rank=rank)


def min_l2_init(problem: MixingProblem) -> np.ndarray:
    """Minimum-l2-norm least-squares solution ``A^+ x``.

    Equals ``A^T (A A^T)^-1 x`` when ``A`` has full row rank; for
    rank-deficient ``A`` it is the pseudoinverse solution, orthogonal to the
    null space of ``A``.
    """
    return thin_svd(problem.matrix_a).min_norm_solution(problem.observation_x)
