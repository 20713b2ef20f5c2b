"""Monte-Carlo harness: lambda sweep, solver comparison over noise, dimension sweep.

Every trial draws fresh sources, matrix and noise from seeds derived from
``(base_seed, group, trial_index)``; all solvers in a trial see the same
``(A, s, x)``. For the lambda sweep and the noise comparison the group is
always 0, so the same sources, matrix and standard-normal noise draw are
reused at every grid point (only the noise scale changes). The dimension
sweep uses the index of ``m`` in ``dims`` as the group.

Trials can run on a thread pool. Records always come back in the canonical
order (group, trial, sigma_n, solver), so the worker count never changes
the output.
"""

from __future__ import annotations

import enum
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .core_model import (
    BernoulliGaussianModel,
    MixingProblem,
    NoiseModel,
    capped_snr,
    derive_seed,
    generate_mixing_matrix,
    generate_sources,
    mix,
    snr_db,
    validate_seed,
)
from .errors import DivergedError, FitError, ParameterError, RankError
from .solvers import (
    SparseSolverConfig,
    bpdn_solve,
    default_tau,
    lambda_closed_form,
    sl0_solve,
    sl0dn_solve,
)

__all__ = [
    "ExperimentKind",
    "BPDNSettings",
    "ExperimentSpec",
    "SpecError",
    "TrialRecord",
    "ExperimentSummary",
    "SOLVER_NAMES",
    "DEFAULT_SOLVERS",
    "SL0_REFERENCE",
    "DEFAULT_LAMBDA_GRID",
    "DEFAULT_NOISE_GRID",
    "dimension_rows",
    "trial_seed",
    "trial_data",
    "replay_trial",
    "run_experiment",
    "run_lambda_sweep",
    "run_noise_comparison",
    "run_dimension_sweep",
    "summarize",
    "lambda_opt_points",
    "fit_lambda_opt_curve",
    "with_solver_configs",
]

SOLVER_NAMES = ("sl0dn", "sl0", "bpdn")

#: Solver label of the lambda-independent SL0 rows in a lambda sweep.
SL0_REFERENCE = "sl0_reference"

DEFAULT_LAMBDA_GRID = tuple(float(v) for v in np.logspace(0.0, 3.0, 30))
DEFAULT_NOISE_GRID = tuple(round(0.01 * i, 10) for i in range(16))

_SOURCE_STREAM, _MATRIX_STREAM, _NOISE_STREAM = 0, 1, 2


class SpecError(ParameterError):
    """Invalid experiment settings; ``field`` names the offending entry."""

    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class ExperimentKind(str, enum.Enum):
    LAMBDA_SWEEP = "lambda_sweep"
    NOISE_COMPARISON = "noise_comparison"
    DIMENSION_SWEEP = "dimension_sweep"


@dataclass(frozen=True)
class BPDNSettings:
    """BPDN baseline parameters; ``tau = tau_fraction * ||A^T x||_inf``."""

    tau_fraction: float = 0.1
    max_iterations: int = 2000
    tolerance: float = 1e-8


DEFAULT_SOLVERS = {
    ExperimentKind.LAMBDA_SWEEP: ("sl0dn", "sl0"),
    ExperimentKind.NOISE_COMPARISON: ("sl0dn", "sl0", "bpdn"),
    ExperimentKind.DIMENSION_SWEEP: ("sl0dn", "sl0"),
}


def _default_config(name):
    return BPDNSettings() if name == "bpdn" else SparseSolverConfig()


def dimension_rows(m: int, ratio: float = 0.4) -> int:
    """Row count ``n = round(ratio * m)`` (halves rounded up), at least 1."""
    return max(1, int(math.floor(ratio * m + 0.5)))


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to (re)run one experiment.

    ``solver_configs`` maps solver names (a subset of :data:`SOLVER_NAMES`)
    to their settings; its keys select which solvers run. ``None`` picks
    the default set for ``kind``. For the lambda sweep the ``lam`` of the
    SL0DN config is overridden by each grid value; elsewhere SL0DN uses the
    closed-form weight for the trial's ``sigma_n``.
    """

    kind: ExperimentKind
    m: int = 1000
    n: int = 400
    dims: tuple = ()
    ratio: float = 0.4
    model: BernoulliGaussianModel = BernoulliGaussianModel()
    noise_grid: tuple = (0.05,)
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    trials: int = 100
    base_seed: int = 0
    solver_configs: Optional[dict] = None
    workers: int = 1
    record_timing: bool = True

    def __post_init__(self):
        try:
            kind = ExperimentKind(self.kind)
        except ValueError:
            raise SpecError("kind", f"unknown experiment kind {self.kind!r}") from None
        object.__setattr__(self, "kind", kind)

        def positive_int(name, value):
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise SpecError(name, f"must be a positive integer, got {value!r}")
            return int(value)

        def real_tuple(name, values, check, what):
            try:
                values = tuple(float(v) for v in values)
            except (TypeError, ValueError):
                raise SpecError(name, "must be a list of numbers") from None
            if not values:
                raise SpecError(name, "must not be empty")
            for v in values:
                if not (math.isfinite(v) and check(v)):
                    raise SpecError(name, f"{what}, got {v}")
            return values

        for name in ("m", "n", "trials", "workers"):
            object.__setattr__(self, name, positive_int(name, getattr(self, name)))
        object.__setattr__(
            self, "noise_grid",
            real_tuple("noise_grid", self.noise_grid, lambda v: v >= 0, "values must be >= 0"),
        )
        if kind is ExperimentKind.LAMBDA_SWEEP:
            object.__setattr__(
                self, "lambda_grid",
                real_tuple("lambda_grid", self.lambda_grid, lambda v: v > 0, "values must be > 0"),
            )
        if not (isinstance(self.ratio, (int, float)) and 0 < self.ratio and math.isfinite(self.ratio)):
            raise SpecError("ratio", f"must be positive, got {self.ratio!r}")
        if kind is ExperimentKind.DIMENSION_SWEEP:
            if not self.dims:
                raise SpecError("dims", "dimension sweep needs at least one m value")
            object.__setattr__(self, "dims", tuple(positive_int("dims", v) for v in self.dims))
        else:
            object.__setattr__(self, "dims", tuple(self.dims))
        if not isinstance(self.model, BernoulliGaussianModel):
            raise SpecError("model", "must be a BernoulliGaussianModel")
        try:
            object.__setattr__(self, "base_seed", validate_seed(self.base_seed))
        except ParameterError as exc:
            raise SpecError("base_seed", str(exc)) from None

        configs = self.solver_configs
        if configs is None:
            configs = {name: _default_config(name) for name in DEFAULT_SOLVERS[kind]}
        configs = dict(configs)
        if not configs:
            raise SpecError("solver_configs", "at least one solver is required")
        for name, cfg in configs.items():
            if name not in SOLVER_NAMES:
                raise SpecError("solver_configs", f"unknown solver {name!r}")
            expected = BPDNSettings if name == "bpdn" else SparseSolverConfig
            if not isinstance(cfg, expected):
                raise SpecError(f"solver_configs.{name}", f"must be a {expected.__name__}")
        if kind is ExperimentKind.LAMBDA_SWEEP and "sl0dn" not in configs:
            raise SpecError("solver_configs", "lambda sweep needs the sl0dn solver")
        ordered = {name: configs[name] for name in SOLVER_NAMES if name in configs}
        object.__setattr__(self, "solver_configs", ordered)

    def shapes(self):
        """``(m, n)`` pairs covered by the experiment, in group order."""
        if self.kind is ExperimentKind.DIMENSION_SWEEP:
            return [(m, dimension_rows(m, self.ratio)) for m in self.dims]
        return [(self.m, self.n)]


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of one solver on one trial.

    ``lam`` is NaN for solvers without a fidelity weight; ``wall_time`` is
    NaN when timing is disabled. ``relative_residual`` is
    ``||A s_hat - x|| / ||x||`` (NaN if ``x = 0`` or the solver failed).
    """

    trial_index: int
    seed: int
    sigma_n: float
    lam: float
    solver: str
    m: int
    n: int
    snr_db: float
    wall_time: float
    diverged: bool
    relative_residual: float = math.nan


@dataclass(frozen=True)
class ExperimentSummary:
    """Aggregate over the non-diverged trials of one (solver, sigma_n, lam, m) cell."""

    solver: str
    sigma_n: float
    lam: float
    m: int
    n: int
    mean_snr_db: float
    std_snr_db: float
    trial_count: int
    diverged_count: int
    mean_wall_time: float


def trial_seed(spec: ExperimentSpec, trial_index: int, group: int = 0) -> int:
    return derive_seed(spec.base_seed, group, trial_index)


def trial_data(seed, model: BernoulliGaussianModel, m: int, n: int, sigma_n: float):
    """Generate ``(s, A, x)`` for one trial seed."""
    s = generate_sources(model, m, derive_seed(seed, _SOURCE_STREAM))
    a = generate_mixing_matrix(n, m, derive_seed(seed, _MATRIX_STREAM))
    x = mix(a, s, NoiseModel(sigma_n), derive_seed(seed, _NOISE_STREAM))
    return s, a, x


def replay_trial(spec: ExperimentSpec, record: TrialRecord):
    """Regenerate the ``(s, A, x)`` that produced ``record``."""
    return trial_data(record.seed, spec.model, record.m, record.n, record.sigma_n)


def _relative_residual(problem, estimate):
    x_norm = float(np.linalg.norm(problem.observation_x))
    if x_norm == 0.0:
        return math.nan
    return float(np.linalg.norm(problem.matrix_a @ estimate - problem.observation_x)) / x_norm


def _run_solver(name, cfg, problem, lam):
    start = time.perf_counter()
    try:
        if name == "sl0dn":
            result = sl0dn_solve(problem, cfg.with_lambda(lam))
        elif name == "sl0":
            result = sl0_solve(problem, cfg)
        else:
            tau = default_tau(problem, cfg.tau_fraction)
            result = bpdn_solve(problem, tau, cfg.max_iterations, cfg.tolerance)
    except (DivergedError, RankError):
        return None, time.perf_counter() - start
    return result.estimate, time.perf_counter() - start


def _record(spec, seed, trial, sigma_n, lam, solver, problem, s, estimate, elapsed):
    diverged = estimate is None
    return TrialRecord(
        trial_index=trial,
        seed=seed,
        sigma_n=sigma_n,
        lam=lam,
        solver=solver,
        m=problem.m,
        n=problem.n,
        snr_db=math.nan if diverged else snr_db(s, estimate),
        wall_time=elapsed if spec.record_timing else math.nan,
        diverged=diverged,
        relative_residual=math.nan if diverged else _relative_residual(problem, estimate),
    )


def _lambda_sweep_unit(spec, trial):
    seed = trial_seed(spec, trial)
    records = []
    for sigma_n in spec.noise_grid:
        s, a, x = trial_data(seed, spec.model, spec.m, spec.n, sigma_n)
        problem = MixingProblem(a, x)
        for lam in spec.lambda_grid:
            est, elapsed = _run_solver("sl0dn", spec.solver_configs["sl0dn"], problem, lam)
            records.append(_record(spec, seed, trial, sigma_n, lam, "sl0dn", problem, s, est, elapsed))
        if "sl0" in spec.solver_configs:
            est, elapsed = _run_solver("sl0", spec.solver_configs["sl0"], problem, math.nan)
            records.append(
                _record(spec, seed, trial, sigma_n, math.nan, SL0_REFERENCE, problem, s, est, elapsed)
            )
    return records


def _comparison_unit(spec, trial, group, m, n):
    seed = trial_seed(spec, trial, group)
    records = []
    for sigma_n in spec.noise_grid:
        s, a, x = trial_data(seed, spec.model, m, n, sigma_n)
        problem = MixingProblem(a, x)
        lam_dn = lambda_closed_form(sigma_n).lam
        for name, cfg in spec.solver_configs.items():
            lam = lam_dn if name == "sl0dn" else math.nan
            est, elapsed = _run_solver(name, cfg, problem, lam)
            records.append(_record(spec, seed, trial, sigma_n, lam, name, problem, s, est, elapsed))
    return records


def _execute(spec, units, progress):
    total = len(units)
    done = 0

    def tick(result):
        nonlocal done
        done += 1
        if progress is not None:
            progress(done, total)
        return result

    if spec.workers == 1:
        batches = [tick(unit()) for unit in units]
    else:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            futures = [pool.submit(unit) for unit in units]
            batches = [tick(f.result()) for f in futures]
    return [record for batch in batches for record in batch]


def run_experiment(spec: ExperimentSpec, progress: Optional[Callable[[int, int], None]] = None):
    """Run ``spec`` and return ``(records, summaries)``.

    ``progress(done, total)`` is called once per finished trial unit.
    """
    if spec.kind is ExperimentKind.LAMBDA_SWEEP:
        units = [lambda t=t: _lambda_sweep_unit(spec, t) for t in range(spec.trials)]
    elif spec.kind is ExperimentKind.NOISE_COMPARISON:
        units = [
            lambda t=t: _comparison_unit(spec, t, 0, spec.m, spec.n) for t in range(spec.trials)
        ]
    else:
        units = [
            lambda t=t, g=g, m=m, n=n: _comparison_unit(spec, t, g, m, n)
            for g, (m, n) in enumerate(spec.shapes())
            for t in range(spec.trials)
        ]
    records = _execute(spec, units, progress)
    return records, summarize(records)


def _expect(spec, kind):
    if spec.kind is not kind:
        raise SpecError("kind", f"expected {kind.value}, got {spec.kind.value}")


def run_lambda_sweep(spec: ExperimentSpec, progress=None):
    """SNR of SL0DN per (sigma_n, lam) plus the SL0 reference per sigma_n."""
    _expect(spec, ExperimentKind.LAMBDA_SWEEP)
    return run_experiment(spec, progress)[1]


def run_noise_comparison(spec: ExperimentSpec, progress=None):
    """Summaries per (solver, sigma_n); SL0DN uses the closed-form lambda."""
    _expect(spec, ExperimentKind.NOISE_COMPARISON)
    return run_experiment(spec, progress)[1]


def run_dimension_sweep(spec: ExperimentSpec, progress=None):
    """Summaries per (solver, m) with ``n = round(ratio * m)``."""
    _expect(spec, ExperimentKind.DIMENSION_SWEEP)
    return run_experiment(spec, progress)[1]


def _lam_key(lam):
    return None if math.isnan(lam) else lam


def summarize(records):
    """Group records by (solver, sigma_n, lam, m, n) in first-seen order.

    SNRs are capped at ``SNR_CAP_DB`` before averaging; the standard
    deviation is the population one (0 for a single trial).
    """
    groups = {}
    for rec in records:
        key = (rec.solver, rec.sigma_n, _lam_key(rec.lam), rec.m, rec.n)
        groups.setdefault(key, []).append(rec)
    summaries = []
    for (solver, sigma_n, lam, m, n), recs in groups.items():
        ok = [r for r in recs if not r.diverged]
        snrs = np.array([capped_snr(r.snr_db) for r in ok])
        times = np.array([r.wall_time for r in ok])
        summaries.append(
            ExperimentSummary(
                solver=solver,
                sigma_n=sigma_n,
                lam=math.nan if lam is None else lam,
                m=m,
                n=n,
                mean_snr_db=float(snrs.mean()) if ok else math.nan,
                std_snr_db=float(snrs.std()) if ok else math.nan,
                trial_count=len(ok),
                diverged_count=len(recs) - len(ok),
                mean_wall_time=float(times.mean()) if ok else math.nan,
            )
        )
    return summaries


def lambda_opt_points(summaries):
    """``(sigma_n, lam_opt)`` per noise level from lambda-sweep summaries.

    ``lam_opt`` maximizes the mean SL0DN SNR over the grid; ties go to the
    smaller lambda.
    """
    best = {}
    for summ in summaries:
        if summ.solver != "sl0dn" or math.isnan(summ.mean_snr_db):
            continue
        current = best.get(summ.sigma_n)
        if (
            current is None
            or summ.mean_snr_db > current.mean_snr_db
            or (summ.mean_snr_db == current.mean_snr_db and summ.lam < current.lam)
        ):
            best[summ.sigma_n] = summ
    return [(sigma_n, best[sigma_n].lam) for sigma_n in sorted(best)]


def fit_lambda_opt_curve(points):
    """Fit ``lam_opt(sigma_n) = 1 / (alpha + beta sigma_n**2)``.

    Solved as the linear least-squares regression of ``1 / lam_opt`` on
    ``[1, sigma_n**2]``. Returns ``(alpha, beta)``.
    """
    points = [(float(sn), float(lam)) for sn, lam in points]
    if len(points) < 2:
        raise FitError("need at least two (sigma_n, lam_opt) points")
    if any(not (math.isfinite(lam) and lam > 0) for _, lam in points):
        raise FitError("lam_opt values must be positive and finite")
    x2 = np.array([sn * sn for sn, _ in points])
    if np.ptp(x2) == 0.0:
        raise FitError("sigma_n values are all equal; the curve is not identifiable")
    design = np.column_stack([np.ones_like(x2), x2])
    target = np.array([1.0 / lam for _, lam in points])
    (alpha, beta), *_ = np.linalg.lstsq(design, target, rcond=None)
    return float(alpha), float(beta)


def with_solver_configs(spec: ExperimentSpec, **configs) -> ExperimentSpec:
    """Copy of ``spec`` with some solver configurations replaced."""
    merged = dict(spec.solver_configs)
    merged.update(configs)
    return replace(spec, solver_configs=merged)
