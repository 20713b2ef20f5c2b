"""Gaussian-smoothed l0 surrogate and the relaxed (penalized) objective.

``F_sigma(s) = sum_i exp(-s_i**2 / (2 sigma**2))`` counts, for small sigma,
the zero entries of ``s``; ``m - F_sigma(s)`` is the smoothed l0 norm. The
relaxed objective replaces the constraint ``A s = x`` by a quadratic
penalty::

    J(s) = (m - F_sigma(s)) + lam * ||A s - x||**2

Exponentials of large ``|s_i| / sigma`` underflow to zero, which is the
correct limit; no warnings are raised for it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_model import MixingProblem, as_source_vector
from .errors import ParameterError

__all__ = [
    "DEFAULT_SCHEDULE",
    "SigmaSchedule",
    "RelaxedObjectiveParams",
    "f_sigma",
    "smoothed_l0_norm",
    "smoothing_gradient",
    "objective_j",
    "gradient_j",
    "objective_and_gradient",
]


def _check_sigma(sigma):
    if not (isinstance(sigma, (int, float, np.floating)) and math.isfinite(sigma) and sigma > 0):
        raise ParameterError(f"sigma must be a positive finite number, got {sigma!r}")
    return float(sigma)


@dataclass(frozen=True)
class SigmaSchedule:
    """Strictly decreasing sequence of positive smoothing widths."""

    values: tuple

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ParameterError("sigma schedule must contain at least one value")
        for v in values:
            _check_sigma(v)
        if any(a <= b for a, b in zip(values, values[1:])):
            raise ParameterError(f"sigma schedule must be strictly decreasing, got {values}")
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    @classmethod
    def geometric(cls, start: float, stop: float, factor: float = 0.5) -> "SigmaSchedule":
        """``start, start*factor, ...`` down to the last value ``>= stop``."""
        if not 0 < factor < 1:
            raise ParameterError("factor must lie in (0, 1)")
        values, sigma = [], _check_sigma(start)
        while sigma >= stop:
            values.append(sigma)
            sigma *= factor
        return cls(tuple(values))


#: Decreasing widths used throughout the experiments.
DEFAULT_SCHEDULE = SigmaSchedule((1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01))


@dataclass(frozen=True)
class RelaxedObjectiveParams:
    """Weight ``lam`` of the fidelity term and current width ``sigma``."""

    lam: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ParameterError(f"lam must be non-negative, got {self.lam}")
        _check_sigma(self.sigma)


def _gauss(s, sigma):
    with np.errstate(under="ignore"):
        return np.exp(-(s * s) / (2.0 * sigma * sigma))


def f_sigma(s, sigma: float) -> float:
    """Return ``sum_i exp(-s_i**2 / (2 sigma**2))``, a value in ``(0, m]``."""
    sigma = _check_sigma(sigma)
    return float(np.sum(_gauss(as_source_vector(s), sigma)))


def smoothed_l0_norm(s, sigma: float) -> float:
    """Return ``m - F_sigma(s)``; tends to ``||s||_0`` as ``sigma -> 0``.

    Computed as ``sum_i (1 - exp(...))`` which avoids cancellation when
    ``m`` is large and only a few entries are nonzero.
    """
    sigma = _check_sigma(sigma)
    s = as_source_vector(s)
    with np.errstate(under="ignore"):
        return float(np.sum(-np.expm1(-(s * s) / (2.0 * sigma * sigma))))


def smoothing_gradient(s, sigma: float) -> np.ndarray:
    """Gradient of ``m - F_sigma`` : ``s_i exp(-s_i**2 / 2 sigma**2) / sigma**2``."""
    return s * _gauss(s, sigma) / (sigma * sigma)


def _unpack(s, problem, params):
    if not isinstance(params, RelaxedObjectiveParams):
        raise ParameterError("params must be a RelaxedObjectiveParams")
    s = as_source_vector(s, problem.m)
    return s, problem.matrix_a @ s - problem.observation_x


def objective_j(s, problem: MixingProblem, params: RelaxedObjectiveParams) -> float:
    """Relaxed objective ``(m - F_sigma(s)) + lam ||A s - x||**2``."""
    s, r = _unpack(s, problem, params)
    return smoothed_l0_norm(s, params.sigma) + params.lam * float(r @ r)


def gradient_j(s, problem: MixingProblem, params: RelaxedObjectiveParams) -> np.ndarray:
    """Exact gradient ``2 lam A^T (A s - x) + s * exp(-s**2 / 2 sigma**2) / sigma**2``."""
    return objective_and_gradient(s, problem, params)[1]


def objective_and_gradient(s, problem: MixingProblem, params: RelaxedObjectiveParams):
    """Return ``(J(s), grad J(s))`` sharing one residual evaluation."""
    s, r = _unpack(s, problem, params)
    value = smoothed_l0_norm(s, params.sigma) + params.lam * float(r @ r)
    grad = 2.0 * params.lam * (problem.matrix_a.T @ r) + smoothing_gradient(s, params.sigma)
    return value, grad
