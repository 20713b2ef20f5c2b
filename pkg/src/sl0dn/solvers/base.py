"""Configuration and result types shared by the solvers."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..errors import ParameterError
from ..smoothed_l0 import DEFAULT_SCHEDULE, SigmaSchedule

__all__ = [
    "StepMode",
    "Metric",
    "SparseSolverConfig",
    "StageTrace",
    "RecoveryResult",
    "DIVERGENCE_LIMIT",
]

#: Iterates with any entry larger than this abort the solve.
DIVERGENCE_LIMIT = 1e12


class StepMode(str, enum.Enum):
    """What the inner loop does with a step that does not lower the objective."""

    ALWAYS_STEP = "always_step"
    REJECT_ON_INCREASE = "reject_on_increase"


class Metric(str, enum.Enum):
    """Geometry in which the steepest-descent direction is taken.

    ``EUCLIDEAN`` uses the raw gradient. ``SCALED`` premultiplies it by
    ``sigma**2 (I + 2 lam sigma**2 A^T A)^-1``, which equalizes the curvature
    of the fidelity and smoothing terms and turns into the SL0 projection
    step as ``lam -> inf``.
    """

    EUCLIDEAN = "euclidean"
    SCALED = "scaled"


@dataclass(frozen=True)
class SparseSolverConfig:
    """Parameters of the smoothed-l0 solvers.

    Parameters
    ----------
    lam : float
        Weight of the fidelity term ``||A s - x||**2`` (unused by SL0).
    schedule : SigmaSchedule
        Decreasing smoothing widths, one outer stage each.
    inner_iterations : int
        Steepest-descent iterations per width.
    initial_mu : float
        Step size at the start of every stage. It is dimensionless: the
        scaled metric already carries the ``sigma**2`` factor, and in the
        Euclidean metric it is measured in units of ``1 / Lip`` where
        ``Lip = 2 lam ||A||_2**2 + 1 / sigma**2``.
    step_mode : StepMode
        ``ALWAYS_STEP`` applies every step and only adapts the step size;
        ``REJECT_ON_INCREASE`` keeps the current point when a step fails.
    metric : Metric
        Descent geometry, see :class:`Metric`.
    """

    lam: float = 1.0 / 0.007
    schedule: SigmaSchedule = DEFAULT_SCHEDULE
    inner_iterations: int = 8
    initial_mu: float = 2.0
    step_mode: StepMode = StepMode.ALWAYS_STEP
    metric: Metric = Metric.SCALED

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ParameterError(f"lam must be positive, got {self.lam}")
        if not isinstance(self.schedule, SigmaSchedule):
            object.__setattr__(self, "schedule", SigmaSchedule(tuple(self.schedule)))
        if (
            isinstance(self.inner_iterations, bool)
            or not isinstance(self.inner_iterations, (int, np.integer))
            or self.inner_iterations < 1
        ):
            raise ParameterError(f"inner_iterations must be >= 1, got {self.inner_iterations!r}")
        if not (math.isfinite(self.initial_mu) and self.initial_mu > 0):
            raise ParameterError(f"initial_mu must be positive, got {self.initial_mu}")
        object.__setattr__(self, "step_mode", StepMode(self.step_mode))
        object.__setattr__(self, "metric", Metric(self.metric))

    def with_lambda(self, lam: float) -> "SparseSolverConfig":
        return replace(self, lam=float(lam))


@dataclass(frozen=True)
class StageTrace:
    """Record of one outer stage.

    ``objectives[j]`` is the objective at the current point after inner
    iteration ``j``; ``accepted[j]`` tells whether that iteration's trial
    point lowered the objective. ``sigma`` is ``None`` for solvers without a
    smoothing schedule.
    """

    sigma: Optional[float]
    initial_objective: float
    final_objective: float
    final_mu: float
    objectives: tuple
    accepted: tuple


@dataclass(frozen=True)
class RecoveryResult:
    """Estimated source vector plus per-stage convergence trace."""

    estimate: np.ndarray
    trace: tuple
    converged_cleanly: bool
    solver: str

    def __post_init__(self):
        estimate = np.array(self.estimate, dtype=float, copy=True)
        estimate.setflags(write=False)
        object.__setattr__(self, "estimate", estimate)
        object.__setattr__(self, "trace", tuple(self.trace))

    @property
    def final_objective(self) -> float:
        return self.trace[-1].final_objective
