"""Domain types, synthetic data generation and the output-SNR metric.

All random generation goes through :func:`make_rng`, which wraps numpy's
PCG64 bit generator. Seeds are split hierarchically with
:func:`derive_seed` (experiment seed -> trial seed -> per-stream seeds), so
a single trial can be regenerated without replaying the ones before it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError, UndefinedMetricError

__all__ = [
    "RNG_ALGORITHM",
    "SNR_CAP_DB",
    "PERFECT_SNR",
    "MixingProblem",
    "BernoulliGaussianModel",
    "NoiseModel",
    "as_source_vector",
    "validate_seed",
    "derive_seed",
    "make_rng",
    "generate_sources",
    "generate_mixing_matrix",
    "mix",
    "snr_db",
    "capped_snr",
]

#: Bit generator used for every random draw in the toolkit.
RNG_ALGORITHM = "PCG64"

#: Value returned by :func:`snr_db` when the estimate is exact.
PERFECT_SNR = math.inf

#: Summaries replace :data:`PERFECT_SNR` (and anything above it) by this cap.
SNR_CAP_DB = 300.0

_MAX_SEED = 2**64 - 1


def _frozen(array):
    array = np.array(array, dtype=float, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class MixingProblem:
    """An instance ``x ~= A s`` to be solved for ``s``.

    Parameters
    ----------
    matrix_a : array_like, shape (n, m)
        Dictionary / mixing matrix. Need not have full row rank.
    observation_x : array_like, shape (n,)
        Observed mixture.

    Both arrays are copied and made read-only.
    """

    matrix_a: np.ndarray
    observation_x: np.ndarray

    def __post_init__(self):
        a = _frozen(self.matrix_a)
        x = _frozen(self.observation_x)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ShapeError(f"matrix_a must be a non-empty 2-D array, got shape {a.shape}")
        if x.ndim != 1:
            raise ShapeError(f"observation_x must be 1-D, got shape {x.shape}")
        if x.shape[0] != a.shape[0]:
            raise ShapeError(
                f"observation length {x.shape[0]} does not match matrix rows {a.shape[0]}"
            )
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(x))):
            raise ParameterError("matrix_a and observation_x must be finite")
        object.__setattr__(self, "matrix_a", a)
        object.__setattr__(self, "observation_x", x)

    @property
    def n(self) -> int:
        """Number of observations (rows of A)."""
        return self.matrix_a.shape[0]

    @property
    def m(self) -> int:
        """Number of sources (columns of A)."""
        return self.matrix_a.shape[1]

    def residual(self, s) -> np.ndarray:
        """Return ``A s - x``."""
        return self.matrix_a @ as_source_vector(s, self.m) - self.observation_x


def as_source_vector(s, m=None) -> np.ndarray:
    """Coerce ``s`` to a finite 1-D float array, optionally of length ``m``."""
    s = np.asarray(s, dtype=float)
    if s.ndim != 1:
        raise ShapeError(f"source vector must be 1-D, got shape {s.shape}")
    if m is not None and s.shape[0] != m:
        raise ShapeError(f"source vector has length {s.shape[0]}, expected {m}")
    if not np.all(np.isfinite(s)):
        raise ParameterError("source vector must be finite")
    return s


@dataclass(frozen=True)
class BernoulliGaussianModel:
    """Each entry is active with probability ``p_active``.

    Active entries are ``N(0, sigma_on**2)``, inactive ones
    ``N(0, sigma_off**2)``. ``sigma_off = 0`` gives exactly sparse vectors.
    """

    p_active: float = 0.1
    sigma_on: float = 1.0
    sigma_off: float = 0.01

    def __post_init__(self):
        if not 0.0 < self.p_active < 1.0:
            raise ParameterError(f"p_active must lie in (0, 1), got {self.p_active}")
        if not (math.isfinite(self.sigma_on) and self.sigma_on > 0):
            raise ParameterError(f"sigma_on must be positive, got {self.sigma_on}")
        if not (math.isfinite(self.sigma_off) and self.sigma_off >= 0):
            raise ParameterError(f"sigma_off must be non-negative, got {self.sigma_off}")
        if self.sigma_off >= self.sigma_on:
            raise ParameterError("sigma_off must be smaller than sigma_on")


@dataclass(frozen=True)
class NoiseModel:
    """White Gaussian observation noise with standard deviation ``sigma_n``."""

    sigma_n: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.sigma_n) and self.sigma_n >= 0):
            raise ParameterError(f"sigma_n must be non-negative, got {self.sigma_n}")


def validate_seed(seed) -> int:
    """Check that ``seed`` is an unsigned 64-bit integer and return it as ``int``."""
    if isinstance(seed, (bool, float)) or not isinstance(seed, (int, np.integer)):
        raise ParameterError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed <= _MAX_SEED:
        raise ParameterError(f"seed must lie in [0, 2**64 - 1], got {seed}")
    return seed


def derive_seed(seed, *keys) -> int:
    """Derive an independent child seed from ``seed`` and a path of integer keys.

    >>> derive_seed(7, 3, 0) == derive_seed(7, 3, 0)
    True
    >>> derive_seed(7, 3, 0) != derive_seed(7, 3, 1)
    True
    """
    sequence = np.random.SeedSequence(validate_seed(seed), spawn_key=tuple(int(k) for k in keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(validate_seed(seed)))


def _check_dim(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        raise ParameterError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def generate_sources(model: BernoulliGaussianModel, m: int, seed) -> np.ndarray:
    """Draw a length-``m`` source vector from the Bernoulli-Gaussian model."""
    if not isinstance(model, BernoulliGaussianModel):
        raise ParameterError("model must be a BernoulliGaussianModel")
    m = _check_dim("m", m)
    rng = make_rng(seed)
    active = rng.random(m) < model.p_active
    z = rng.standard_normal(m)
    return np.where(active, model.sigma_on * z, model.sigma_off * z)


def generate_mixing_matrix(n: int, m: int, seed) -> np.ndarray:
    """Draw an ``n x m`` matrix with i.i.d. standard normal entries."""
    n = _check_dim("n", n)
    m = _check_dim("m", m)
    return make_rng(seed).standard_normal((n, m))


def mix(a, s, noise: NoiseModel, seed) -> np.ndarray:
    """Return ``A s + n`` with ``n ~ N(0, sigma_n**2 I)``.

    With ``sigma_n = 0`` the product ``A s`` is returned unchanged and no
    random numbers are drawn.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ShapeError(f"mixing matrix must be 2-D, got shape {a.shape}")
    s = as_source_vector(s, a.shape[1])
    clean = a @ s
    if noise.sigma_n == 0:
        return clean
    return clean + noise.sigma_n * make_rng(seed).standard_normal(a.shape[0])


def snr_db(true_s, estimate_s) -> float:
    """Output SNR ``10 log10(||s||^2 / ||s_hat - s||^2)`` in decibels.

    Returns :data:`PERFECT_SNR` (``+inf``) when the estimate is exact.
    """
    true_s = as_source_vector(true_s)
    estimate_s = as_source_vector(estimate_s, true_s.shape[0])
    scale = float(np.max(np.abs(true_s))) if true_s.size else 0.0
    if scale == 0.0:
        raise UndefinedMetricError("SNR is undefined for a zero reference signal")
    # the ratio is scale-free; normalizing keeps the squares in range
    ref = true_s / scale
    err = (estimate_s - true_s) / scale
    signal = float(ref @ ref)
    error = float(err @ err)
    if error == 0.0:
        return PERFECT_SNR
    return 10.0 * (math.log10(signal) - math.log10(error))


def capped_snr(value: float) -> float:
    """Clamp an SNR value to :data:`SNR_CAP_DB` for aggregation."""
    return min(float(value), SNR_CAP_DB)
