"""Command-line entry point ``sl0dn``.

Subcommands
-----------
solve
    Recover sources from a matrix file and an observation file.
experiment {lambda-sweep, compare, dims}
    Run a Monte-Carlo experiment and write a results CSV (optionally an SVG).
generate
    Draw a synthetic problem and write ``A.txt``, ``s.txt`` and ``x.txt``.

Exit codes
----------
0 success; 1 unexpected internal error; 2 missing input file, invalid
parameter or invalid experiment spec; 3 dimension mismatch; 4 solver
divergence; 5 rank-deficient matrix for SL0; 6 malformed input file.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from . import fileio
from .core_model import BernoulliGaussianModel, MixingProblem, derive_seed
from .errors import DivergedError, FitError, ParameterError, RankError, ShapeError
from .experiments import (
    DEFAULT_LAMBDA_GRID,
    DEFAULT_NOISE_GRID,
    DEFAULT_SOLVERS,
    SL0_REFERENCE,
    ExperimentKind,
    SpecError,
    fit_lambda_opt_curve,
    lambda_opt_points,
    run_experiment,
    trial_data,
)
from .fileio import FileFormatError
from .solvers import (
    SparseSolverConfig,
    bootstrap_lambda,
    bpdn_solve,
    default_tau,
    lambda_closed_form,
    sl0_solve,
    sl0dn_solve,
)
from .svg import write_line_chart

__all__ = ["main", "build_parser", "EXIT_CODES", "WORKERS_ENV"]

log = logging.getLogger("sl0dn")

WORKERS_ENV = "SL0DN_WORKERS"

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2
EXIT_SHAPE = 3
EXIT_DIVERGED = 4
EXIT_RANK = 5
EXIT_FORMAT = 6

EXIT_CODES = {
    "ok": EXIT_OK,
    "internal": EXIT_INTERNAL,
    "input": EXIT_INPUT,
    "shape": EXIT_SHAPE,
    "diverged": EXIT_DIVERGED,
    "rank": EXIT_RANK,
    "format": EXIT_FORMAT,
}

DEFAULT_DIMS = (250, 500, 1000)

_KINDS = {
    "lambda-sweep": ExperimentKind.LAMBDA_SWEEP,
    "compare": ExperimentKind.NOISE_COMPARISON,
    "dims": ExperimentKind.DIMENSION_SWEEP,
}


class CLIError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _grid_arg(text):
    try:
        return fileio.parse_grid(text)
    except ParameterError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_solver_options(p):
    p.add_argument("--schedule", type=_grid_arg, help="sigma schedule, e.g. 1,0.5,0.2,0.1")
    p.add_argument("--L", dest="inner_iterations", type=int, help="inner iterations per sigma")
    p.add_argument("--mu0", dest="initial_mu", type=float, help="initial step size")
    p.add_argument("--mode", dest="step_mode", choices=["always_step", "reject_on_increase"])
    p.add_argument("--metric", choices=["scaled", "euclidean"])


def _solver_overrides(args):
    out = {}
    for key in ("inner_iterations", "initial_mu", "step_mode", "metric"):
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    if getattr(args, "schedule", None) is not None:
        out["schedule"] = list(args.schedule)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sl0dn", description="Smoothed-l0 sparse recovery toolkit")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="recover s from A and x")
    solve.add_argument("--matrix", required=True, help="matrix file for A")
    solve.add_argument("--observation", required=True, help="vector file for x")
    solve.add_argument("--solver", choices=["sl0dn", "sl0", "bpdn"], default="sl0dn")
    solve.add_argument("--lambda", dest="lam", type=float, help="fidelity weight")
    solve.add_argument("--bootstrap", action="store_true", help="estimate sigma_n from the residual")
    solve.add_argument("--sigma-n", type=float, help="noise level for the closed-form lambda")
    solve.add_argument("--rounds", type=int, default=3, help="bootstrap rounds")
    solve.add_argument("--tau", type=float, help="BPDN l1 weight (default 0.1 ||A^T x||_inf)")
    solve.add_argument("--threshold", type=float, default=0.1, help="magnitude counted as active")
    solve.add_argument("--output", help="where to write the estimate")
    _add_solver_options(solve)

    exp = sub.add_parser("experiment", help="run a Monte-Carlo experiment")
    exp.add_argument("kind", choices=sorted(_KINDS))
    exp.add_argument("--spec", help="JSON experiment spec; flags override its fields")
    exp.add_argument("--m", type=int)
    exp.add_argument("--n", type=int)
    exp.add_argument("--ratio", type=float, help="n / m for the dimension sweep")
    exp.add_argument("--dims", type=_int_list, help="comma-separated m values")
    exp.add_argument("--sigma-n", type=float, help="single noise level")
    exp.add_argument("--sigma-n-grid", type=_grid_arg, help="noise grid, e.g. 0:0.01:0.15")
    exp.add_argument("--lambda-grid", type=_grid_arg, help="lambda grid, e.g. log:1:1000:30")
    exp.add_argument("--trials", type=int)
    exp.add_argument("--seed", type=int)
    exp.add_argument("--p", type=float, help="activity probability")
    exp.add_argument("--sigma-on", type=float)
    exp.add_argument("--sigma-off", type=float)
    exp.add_argument("--solvers", help="comma-separated subset of sl0dn,sl0,bpdn")
    exp.add_argument("--workers", type=int, help=f"threads (default ${WORKERS_ENV} or 1)")
    exp.add_argument("--no-timing", action="store_true", help="write nan wall times")
    exp.add_argument("--progress", action="store_true", help="per-trial counter on stderr")
    exp.add_argument("--output", required=True, help="results CSV path")
    exp.add_argument("--plot", help="optional SVG chart path")
    _add_solver_options(exp)

    gen = sub.add_parser("generate", help="draw a synthetic problem")
    gen.add_argument("--m", type=int, default=1000)
    gen.add_argument("--n", type=int, default=400)
    gen.add_argument("--p", type=float, default=0.1)
    gen.add_argument("--sigma-on", type=float, default=1.0)
    gen.add_argument("--sigma-off", type=float, default=0.01)
    gen.add_argument("--sigma-n", type=float, default=0.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--threshold", type=float, default=0.1, help="magnitude counted as active")
    gen.add_argument("--output-dir", required=True)
    return parser


def _read_inputs(args):
    for path in (args.matrix, args.observation):
        if not os.path.isfile(path):
            raise CLIError(EXIT_INPUT, f"input file not found: {path}")
    a = fileio.read_matrix(args.matrix)
    x = fileio.read_vector(args.observation)
    return MixingProblem(a, x)


def _choose_lambda(args, problem, config):
    """Apply the --lambda > --bootstrap > --sigma-n precedence."""
    given = [name for name, on in (("--lambda", args.lam is not None), ("--bootstrap", args.bootstrap),
                                    ("--sigma-n", args.sigma_n is not None)) if on]
    if not given:
        raise CLIError(EXIT_INPUT, "sl0dn needs one of --lambda, --bootstrap or --sigma-n")
    if len(given) > 1:
        log.info("several lambda sources given (%s); using %s", ", ".join(given), given[0])
    if args.lam is not None:
        log.info("lambda = %.6g (manual)", args.lam)
        return sl0dn_solve(problem, config.with_lambda(args.lam))
    if args.bootstrap:
        start = args.sigma_n if args.sigma_n is not None else 0.05
        choice, result = bootstrap_lambda(problem, start, config, rounds=args.rounds)
        log.info("lambda = %.6g (bootstrap, sigma_n = %.6g after %d rounds)",
                 choice.lam, choice.sigma_n_used, args.rounds)
        return result
    choice = lambda_closed_form(args.sigma_n)
    log.info("lambda = %.6g (closed form, sigma_n = %.6g)", choice.lam, choice.sigma_n_used)
    return sl0dn_solve(problem, config.with_lambda(choice.lam))


def cmd_solve(args) -> int:
    problem = _read_inputs(args)
    config = SparseSolverConfig(**_solver_overrides(args))
    if args.solver == "sl0dn":
        result = _choose_lambda(args, problem, config)
    elif args.solver == "sl0":
        result = sl0_solve(problem, config)
    else:
        tau = args.tau if args.tau is not None else default_tau(problem)
        log.info("tau = %.6g", tau)
        result = bpdn_solve(problem, tau)
    estimate = result.estimate
    residual = float(np.linalg.norm(problem.matrix_a @ estimate - problem.observation_x))
    active = int(np.count_nonzero(np.abs(estimate) > args.threshold))
    print(f"solver: {result.solver}")
    print(f"final_objective: {result.final_objective:.10g}")
    print(f"residual_norm: {residual:.10g}")
    print(f"entries_above_{args.threshold:g}: {active}")
    if not result.converged_cleanly:
        print("warning: a stage ended above its starting objective", file=sys.stderr)
    if args.output:
        fileio.write_vector(args.output, estimate)
        print(f"estimate written to {args.output}")
    return EXIT_OK


def _spec_dict(args):
    kind = _KINDS[args.kind]
    data = {}
    if args.spec:
        if not os.path.isfile(args.spec):
            raise CLIError(EXIT_INPUT, f"spec file not found: {args.spec}")
        with open(args.spec, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SpecError("spec", f"invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise SpecError("spec", "must be a JSON object")
        if "kind" in data and data["kind"] != kind.value:
            raise SpecError("kind", f"spec holds {data['kind']!r} but the subcommand is {args.kind}")
    data["kind"] = kind.value
    if kind is ExperimentKind.NOISE_COMPARISON:
        data.setdefault("noise_grid", list(DEFAULT_NOISE_GRID))
    elif kind is ExperimentKind.DIMENSION_SWEEP:
        data.setdefault("dims", list(DEFAULT_DIMS))
    else:
        data.setdefault("lambda_grid", list(DEFAULT_LAMBDA_GRID))

    for flag, key in (("m", "m"), ("n", "n"), ("ratio", "ratio"), ("trials", "trials"), ("seed", "seed")):
        value = getattr(args, flag)
        if value is not None:
            data[key] = value
    if args.dims is not None:
        data["dims"] = list(args.dims)
    if args.sigma_n is not None and args.sigma_n_grid is not None:
        raise SpecError("noise_grid", "give either --sigma-n or --sigma-n-grid")
    if args.sigma_n is not None:
        data["noise_grid"] = [args.sigma_n]
    if args.sigma_n_grid is not None:
        data["noise_grid"] = list(args.sigma_n_grid)
    if args.lambda_grid is not None:
        data["lambda_grid"] = list(args.lambda_grid)
    model = dict(data.get("model", {}))
    for flag, key in (("p", "p_active"), ("sigma_on", "sigma_on"), ("sigma_off", "sigma_off")):
        value = getattr(args, flag)
        if value is not None:
            model[key] = value
    if model:
        data["model"] = model

    solvers = data.get("solvers")
    if args.solvers is not None:
        names = [s.strip() for s in args.solvers.split(",") if s.strip()]
        old = solvers if isinstance(solvers, dict) else {}
        solvers = {name: old.get(name, {}) for name in names}
    overrides = _solver_overrides(args)
    if overrides:
        if solvers is None:
            solvers = {name: {} for name in DEFAULT_SOLVERS[kind]}
        elif isinstance(solvers, list):
            solvers = {name: {} for name in solvers}
        solvers = {
            name: (cfg if name == "bpdn" else {**(cfg or {}), **overrides})
            for name, cfg in solvers.items()
        }
    if solvers is not None:
        data["solvers"] = solvers

    if args.workers is not None:
        data["workers"] = args.workers
    elif "workers" not in data and os.environ.get(WORKERS_ENV):
        try:
            data["workers"] = int(os.environ[WORKERS_ENV])
        except ValueError:
            raise SpecError("workers", f"${WORKERS_ENV} must be an integer") from None
    if args.no_timing:
        data["timing"] = False
    return data


def _plot(path, spec, summaries):
    series = {}
    if spec.kind is ExperimentKind.LAMBDA_SWEEP:
        multi = len(spec.noise_grid) > 1
        for s in summaries:
            if s.solver == "sl0dn":
                name = f"sl0dn sigma_n={s.sigma_n:g}" if multi else "sl0dn"
                xs, ys = series.setdefault(name, ([], []))
                xs.append(s.lam)
                ys.append(s.mean_snr_db)
        lo, hi = min(spec.lambda_grid), max(spec.lambda_grid)
        for s in summaries:
            if s.solver == SL0_REFERENCE:
                name = f"{SL0_REFERENCE} sigma_n={s.sigma_n:g}" if multi else SL0_REFERENCE
                series[name] = ([lo, hi], [s.mean_snr_db, s.mean_snr_db])
        write_line_chart(path, series, title="Mean SNR vs lambda", x_label="lambda",
                         y_label="mean SNR (dB)", log_x=True)
        return
    x_key, x_label = ("sigma_n", "sigma_n") if spec.kind is ExperimentKind.NOISE_COMPARISON else ("m", "m")
    for s in summaries:
        xs, ys = series.setdefault(s.solver, ([], []))
        xs.append(getattr(s, x_key))
        ys.append(s.mean_snr_db)
    write_line_chart(path, series, title=f"Mean SNR vs {x_label}", x_label=x_label,
                     y_label="mean SNR (dB)")


def cmd_experiment(args) -> int:
    spec = fileio.spec_from_dict(_spec_dict(args))
    progress = None
    if args.progress:
        def progress(done, total):
            print(f"trial {done}/{total}", file=sys.stderr, flush=True)
    records, summaries = run_experiment(spec, progress)
    fileio.write_results_csv(args.output, summaries)
    print(f"wrote {len(summaries)} rows to {args.output}")
    diverged = sum(r.diverged for r in records)
    if diverged:
        print(f"warning: {diverged} solver runs diverged or failed", file=sys.stderr)
    if spec.kind is ExperimentKind.LAMBDA_SWEEP:
        points = lambda_opt_points(summaries)
        for sigma_n, lam in points:
            print(f"lambda_opt(sigma_n={sigma_n:g}) = {lam:.6g}")
        try:
            alpha, beta = fit_lambda_opt_curve(points)
            print(f"fit: lambda_opt = 1 / ({alpha:.6g} + {beta:.6g} sigma_n^2)")
        except FitError as exc:
            log.info("no curve fit: %s", exc)
    if args.plot:
        _plot(args.plot, spec, summaries)
        print(f"chart written to {args.plot}")
    return EXIT_OK


def cmd_generate(args) -> int:
    try:
        model = BernoulliGaussianModel(args.p, args.sigma_on, args.sigma_off)
    except TypeError as exc:
        raise ParameterError(str(exc)) from None
    for name in ("m", "n"):
        if getattr(args, name) < 1:
            raise ParameterError(f"{name} must be positive")
    if not (math.isfinite(args.sigma_n) and args.sigma_n >= 0):
        raise ParameterError(f"sigma_n must be non-negative, got {args.sigma_n}")
    # same streams as trial 0 of an experiment with base seed --seed
    seed = derive_seed(args.seed, 0, 0)
    s, a, x = trial_data(seed, model, args.m, args.n, args.sigma_n)
    os.makedirs(args.output_dir, exist_ok=True)
    fileio.write_matrix(os.path.join(args.output_dir, "A.txt"), a)
    fileio.write_vector(os.path.join(args.output_dir, "s.txt"), s)
    fileio.write_vector(os.path.join(args.output_dir, "x.txt"), x)
    print(f"wrote A.txt ({args.n}x{args.m}), s.txt, x.txt to {args.output_dir}")
    print(f"nonzero entries: {int(np.count_nonzero(s))}")
    print(f"entries above {args.threshold:g}: {int(np.count_nonzero(np.abs(s) > args.threshold))}")
    return EXIT_OK


_COMMANDS = {"solve": cmd_solve, "experiment": cmd_experiment, "generate": cmd_generate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return _COMMANDS[args.command](args)
    except CLIError as exc:
        code, message = exc.code, str(exc)
    except FileNotFoundError as exc:
        code, message = EXIT_INPUT, f"file not found: {exc.filename or exc}"
    except FileFormatError as exc:
        code, message = EXIT_FORMAT, f"malformed file: {exc}"
    except SpecError as exc:
        code, message = EXIT_INPUT, f"invalid spec field {exc}"
    except ShapeError as exc:
        code, message = EXIT_SHAPE, f"dimension mismatch: {exc}"
    except DivergedError as exc:
        code, message = EXIT_DIVERGED, f"solver diverged: {exc}"
    except RankError as exc:
        code, message = EXIT_RANK, f"rank deficient: {exc}"
    except ParameterError as exc:
        code, message = EXIT_INPUT, f"invalid parameter: {exc}"
    except Exception as exc:  # pragma: no cover - last-resort diagnostic
        code, message = EXIT_INTERNAL, f"internal error: {type(exc).__name__}: {exc}"
    print(f"sl0dn: error: {message}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
