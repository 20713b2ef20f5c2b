"""Plain-text matrix/vector files, results CSV and experiment-spec JSON.

Matrix and vector files are UTF-8 text. The first line holds the
dimensions (``n m`` for a matrix, ``m`` for a vector), followed by
whitespace-separated values, one matrix row per line. Values are written
with 17 significant digits so a write/read round trip is exact.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os

import numpy as np

from .core_model import BernoulliGaussianModel
from .errors import ParameterError, SL0DNError
from .experiments import BPDNSettings, ExperimentKind, ExperimentSpec, SpecError
from .smoothed_l0 import SigmaSchedule
from .solvers import SparseSolverConfig

__all__ = [
    "FileFormatError",
    "RESULTS_COLUMNS",
    "RESULTS_SCHEMA_VERSION",
    "write_matrix",
    "read_matrix",
    "write_vector",
    "read_vector",
    "format_results_csv",
    "write_results_csv",
    "read_results_csv",
    "parse_grid",
    "spec_from_dict",
    "spec_to_dict",
    "load_spec",
]

RESULTS_SCHEMA_VERSION = 1
RESULTS_COLUMNS = (
    "solver",
    "sigma_n",
    "lambda",
    "m",
    "n",
    "mean_snr_db",
    "std_snr_db",
    "trials",
    "mean_wall_time_s",
)


class FileFormatError(SL0DNError, ValueError):
    """A matrix, vector or spec file is malformed."""


def _fmt(value) -> str:
    return "%.17g" % value


def write_matrix(path, a) -> None:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ParameterError("write_matrix expects a 2-D array")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{a.shape[0]} {a.shape[1]}\n")
        for row in a:
            fh.write(" ".join(_fmt(v) for v in row) + "\n")


def write_vector(path, v) -> None:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ParameterError("write_vector expects a 1-D array")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{v.shape[0]}\n")
        fh.write("\n".join(_fmt(x) for x in v) + ("\n" if v.size else ""))


def _read_tokens(path):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        body = fh.read()
    return header.split(), body.split()


def _parse_dims(path, header, count):
    if len(header) != count:
        raise FileFormatError(f"{path}: header must hold {count} dimension(s), got {header!r}")
    try:
        dims = [int(h) for h in header]
    except ValueError:
        raise FileFormatError(f"{path}: non-integer dimension in header {header!r}") from None
    if any(d < 1 for d in dims):
        raise FileFormatError(f"{path}: dimensions must be positive, got {dims}")
    return dims


def _parse_values(path, tokens, expected):
    if len(tokens) != expected:
        raise FileFormatError(
            f"{path}: header declares {expected} values but the file holds {len(tokens)}"
        )
    try:
        values = np.array([float(t) for t in tokens], dtype=float)
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from None
    if not np.all(np.isfinite(values)):
        raise FileFormatError(f"{path}: values must be finite")
    return values


def read_matrix(path) -> np.ndarray:
    header, tokens = _read_tokens(path)
    n, m = _parse_dims(path, header, 2)
    return _parse_values(path, tokens, n * m).reshape(n, m)


def read_vector(path) -> np.ndarray:
    header, tokens = _read_tokens(path)
    (m,) = _parse_dims(path, header, 1)
    return _parse_values(path, tokens, m)


def _num(value) -> str:
    # repr is the shortest string that round-trips, and is deterministic
    return repr(float(value))


def format_results_csv(summaries) -> str:
    """Render summaries as CSV text with the fixed results schema."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULTS_COLUMNS)
    for s in summaries:
        writer.writerow(
            [
                s.solver,
                _num(s.sigma_n),
                _num(s.lam),
                s.m,
                s.n,
                _num(s.mean_snr_db),
                _num(s.std_snr_db),
                s.trial_count,
                _num(s.mean_wall_time),
            ]
        )
    return buf.getvalue()


def write_results_csv(path, summaries) -> None:
    text = format_results_csv(summaries)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def read_results_csv(path):
    """Read a results CSV back as a list of dicts with typed values."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RESULTS_COLUMNS:
            raise FileFormatError(f"{path}: unexpected columns {reader.fieldnames}")
        rows = []
        for row in reader:
            typed = {}
            for key, value in row.items():
                if key == "solver":
                    typed[key] = value
                elif key in ("m", "n", "trials"):
                    typed[key] = int(value)
                else:
                    typed[key] = float(value)
            rows.append(typed)
    return rows


def parse_grid(text: str) -> tuple:
    """Parse a grid expression into a tuple of floats.

    Accepted forms: ``"0.1,0.2,0.5"``, ``"start:step:stop"`` (inclusive,
    e.g. ``"0:0.01:0.15"``) and ``"log:start:stop:count"`` (geometric).
    """
    text = text.strip()
    try:
        if text.startswith("log:"):
            _, start, stop, count = text.split(":")
            start, stop, count = float(start), float(stop), int(count)
            if start <= 0 or stop <= 0 or count < 1:
                raise ValueError("log grid needs positive bounds and count")
            return tuple(float(v) for v in np.geomspace(start, stop, count))
        if ":" in text:
            start, step, stop = (float(p) for p in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError("range grid needs step > 0 and stop >= start")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(round(start + i * step, 12) for i in range(count))
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise ParameterError(f"bad grid {text!r}: {exc}") from None


_SPEC_KEYS = {
    "kind", "m", "n", "dims", "ratio", "model", "noise_grid", "lambda_grid",
    "trials", "seed", "solvers", "workers", "timing",
}
_CONFIG_KEYS = {"schedule", "inner_iterations", "initial_mu", "step_mode", "metric"}
_BPDN_KEYS = {"tau_fraction", "max_iterations", "tolerance"}
_MODEL_KEYS = {"p_active", "sigma_on", "sigma_off"}


def _grid(name, value):
    if isinstance(value, str):
        try:
            return parse_grid(value)
        except ParameterError as exc:
            raise SpecError(name, str(exc)) from None
    if isinstance(value, (int, float)):
        return (float(value),)
    return tuple(value)


def _check_keys(name, data, allowed):
    if not isinstance(data, dict):
        raise SpecError(name, "must be an object")
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise SpecError(name, f"unknown key(s) {unknown}")


def _solver_config(name, data):
    if name == "bpdn":
        _check_keys("solvers.bpdn", data, _BPDN_KEYS)
        return BPDNSettings(**data)
    _check_keys(f"solvers.{name}", data, _CONFIG_KEYS)
    data = dict(data)
    if "schedule" in data:
        data["schedule"] = SigmaSchedule(_grid(f"solvers.{name}.schedule", data["schedule"]))
    return SparseSolverConfig(**data)


def spec_from_dict(data: dict) -> ExperimentSpec:
    """Build an :class:`ExperimentSpec` from its JSON form.

    Raises :class:`SpecError` naming the offending field.
    """
    _check_keys("spec", data, _SPEC_KEYS)
    if "kind" not in data:
        raise SpecError("kind", "missing")
    kwargs = {"kind": data["kind"]}
    for key in ("m", "n", "ratio", "trials", "workers"):
        if key in data:
            kwargs[key] = data[key]
    if "dims" in data:
        kwargs["dims"] = tuple(data["dims"])
    if "seed" in data:
        kwargs["base_seed"] = data["seed"]
    if "timing" in data:
        kwargs["record_timing"] = bool(data["timing"])
    for key in ("noise_grid", "lambda_grid"):
        if key in data:
            kwargs[key] = _grid(key, data[key])
    try:
        if "model" in data:
            _check_keys("model", data["model"], _MODEL_KEYS)
            kwargs["model"] = BernoulliGaussianModel(**data["model"])
    except (ParameterError, TypeError) as exc:
        raise SpecError("model", str(exc)) from None
    if "solvers" in data:
        solvers = data["solvers"]
        if isinstance(solvers, list):
            solvers = {name: {} for name in solvers}
        _check_keys("solvers", solvers, {"sl0dn", "sl0", "bpdn"})
        configs = {}
        for name, cfg in solvers.items():
            try:
                configs[name] = _solver_config(name, cfg or {})
            except SpecError:
                raise
            except (ParameterError, TypeError, ValueError) as exc:
                raise SpecError(f"solvers.{name}", str(exc)) from None
        kwargs["solver_configs"] = configs
    return ExperimentSpec(**kwargs)


def _config_to_dict(cfg):
    if isinstance(cfg, BPDNSettings):
        return {
            "tau_fraction": cfg.tau_fraction,
            "max_iterations": cfg.max_iterations,
            "tolerance": cfg.tolerance,
        }
    return {
        "schedule": list(cfg.schedule.values),
        "inner_iterations": cfg.inner_iterations,
        "initial_mu": cfg.initial_mu,
        "step_mode": cfg.step_mode.value,
        "metric": cfg.metric.value,
    }


def spec_to_dict(spec: ExperimentSpec) -> dict:
    data = {
        "kind": spec.kind.value,
        "m": spec.m,
        "n": spec.n,
        "ratio": spec.ratio,
        "model": {
            "p_active": spec.model.p_active,
            "sigma_on": spec.model.sigma_on,
            "sigma_off": spec.model.sigma_off,
        },
        "noise_grid": list(spec.noise_grid),
        "trials": spec.trials,
        "seed": spec.base_seed,
        "workers": spec.workers,
        "timing": spec.record_timing,
        "solvers": {name: _config_to_dict(cfg) for name, cfg in spec.solver_configs.items()},
    }
    if spec.kind is ExperimentKind.LAMBDA_SWEEP:
        data["lambda_grid"] = list(spec.lambda_grid)
    if spec.kind is ExperimentKind.DIMENSION_SWEEP:
        data["dims"] = list(spec.dims)
    return data


def load_spec(path) -> ExperimentSpec:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError("spec", f"invalid JSON: {exc}") from None
    return spec_from_dict(data)
