"""Benchmark harness: config parsing, dataset ingestion, experiment grids
and log-log convergence-rate fits.

A run evaluates every (method, n, repetition) cell of the grid, scores the
requested metrics on the constructed point set and writes ``results.csv``
plus ``summary.json``.  Cell seeds derive from a stable hash of
(method, n, repetition), so extending the grid never reshuffles existing
cells, and a config fully determines every output byte.  Measured wall
times are only written when timing capture is explicitly enabled, because
they would break byte-level reproducibility of the outputs.
"""

import csv
import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import baselines, descent
from .integrands import integration_error, metric_label, parse_integrand
from .kernels import center, parse_kernel
from .mmd import mmd_squared
from .targets import EmpiricalTarget, GaussianMixture, benchmark_mixture

__all__ = [
    "ExperimentConfig",
    "ResultRow",
    "RateFit",
    "ConfigError",
    "load_config",
    "load_dataset",
    "parse_target",
    "run_experiment",
    "summarize",
    "fit_rate",
    "write_results",
    "read_results",
    "cell_seed",
]

WORKERS_ENV = "MMDPOINTS_WORKERS"

METHODS = ("stationary-mmd", "iid", "herding", "support-points")
RESERVED_METHODS = ("kt", "qmc")

RESULTS_HEADER = "method,n,seed,metric,value,wall_time_s"

# Desk-scale defaults for the stationary-mmd method; deliberately far below
# publication-scale step budgets, and overridable per run.
STATIONARY_DEFAULTS = {
    "steps": 20_000,
    "gamma": 1.0,
    "schedule": "powerlaw",
    "beta0": 1.0,
    "alpha": 0.5,
    "polish_steps": 2_000,
    "polish_gamma": 1.0,
    "log_every": 100_000,
}
HERDING_DEFAULTS = {"pool": None, "local_refine": False, "refine_steps": 25}
SUPPORT_DEFAULTS = {"steps": 1_000, "step": 0.1, "smoothing": 1e-12}


class ConfigError(ValueError):
    """Configuration problem; ``field`` names the offending entry."""

    def __init__(self, field_path, message):
        super().__init__(f"{field_path}: {message}")
        self.field = field_path


@dataclass(frozen=True)
class ResultRow:
    method: str
    n: int
    seed: int
    metric: str
    value: float
    wall_time_s: float = 0.0

    def key(self):
        return (self.method, self.n, self.seed, self.metric)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r2: float


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid definition for :func:`run_experiment`; see README for the JSON
    schema.  ``metrics`` mixes ``mmd`` with ``err:<integrand>`` entries."""

    kernel: str
    target: object
    methods: tuple
    n_grid: tuple
    repetitions: int
    metrics: tuple
    seed_base: int = 0
    normalize: str = "none"
    dataset_header: bool = False
    out_dir: str | None = None
    record_timings: bool = False
    method_params: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d["methods"] = list(self.methods)
        d["n_grid"] = list(self.n_grid)
        d["metrics"] = list(self.metrics)
        return d


def _validate_config(raw):
    known = {
        "kernel", "target", "methods", "n_grid", "repetitions", "metrics",
        "seed_base", "normalize", "dataset_header", "out_dir", "record_timings",
        "method_params",
    }
    for key in raw:
        if key not in known:
            raise ConfigError(key, "unknown configuration field")
    for required in ("kernel", "target", "methods", "n_grid", "repetitions", "metrics"):
        if required not in raw:
            raise ConfigError(required, "missing required field")

    try:
        parse_kernel(raw["kernel"])
    except (TypeError, ValueError) as exc:
        raise ConfigError("kernel", str(exc)) from None

    methods = tuple(raw["methods"])
    if not methods:
        raise ConfigError("methods", "at least one method is required")
    for m in methods:
        if m in RESERVED_METHODS:
            raise ConfigError(
                "methods",
                f"{m!r} is reserved for externally produced results; "
                f"implemented methods are {list(METHODS)}",
            )
        if m not in METHODS:
            raise ConfigError("methods", f"unknown method {m!r}; implemented: {list(METHODS)}")

    n_grid = tuple(raw["n_grid"])
    if not n_grid:
        raise ConfigError("n_grid", "must be non-empty")
    for n in n_grid:
        if int(n) != n or n < 1:
            raise ConfigError("n_grid", f"entries must be positive integers, got {n!r}")
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ConfigError("n_grid", f"must be strictly increasing, got {list(n_grid)}")

    reps = raw["repetitions"]
    if int(reps) != reps or reps < 1:
        raise ConfigError("repetitions", f"must be a positive integer, got {reps!r}")

    metrics = tuple(raw["metrics"])
    if not metrics:
        raise ConfigError("metrics", "need at least one metric ('mmd' or 'err:<integrand>')")
    for spec in metrics:
        if spec == "mmd":
            continue
        if not spec.startswith("err:"):
            raise ConfigError("metrics", f"unknown metric {spec!r}")
        body = spec[4:].strip().lower()
        if body not in ("f1", "f2") and not body.startswith(("gradspan:", "rkhs:")):
            raise ConfigError("metrics", f"unknown integrand {spec[4:]!r}")
    labels = ["mmd" if s == "mmd" else metric_label(s[4:]) for s in metrics]
    if len(set(labels)) != len(labels):
        raise ConfigError("metrics", f"metric labels collide: {labels}")

    normalize = raw.get("normalize", "none")
    if normalize not in ("none", "zscore"):
        raise ConfigError("normalize", f"must be 'none' or 'zscore', got {normalize!r}")

    params = raw.get("method_params", {})
    if not isinstance(params, dict):
        raise ConfigError("method_params", "must be an object keyed by method name")
    for key in params:
        if key not in METHODS:
            raise ConfigError(f"method_params.{key}", "not an implemented method")

    return ExperimentConfig(
        kernel=raw["kernel"],
        target=raw["target"],
        methods=methods,
        n_grid=tuple(int(n) for n in n_grid),
        repetitions=int(reps),
        metrics=metrics,
        seed_base=int(raw.get("seed_base", 0)),
        normalize=normalize,
        dataset_header=bool(raw.get("dataset_header", False)),
        out_dir=raw.get("out_dir"),
        record_timings=bool(raw.get("record_timings", False)),
        method_params=params,
    )


def load_config(path):
    """Load and validate an experiment config from a JSON file."""
    try:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(str(path), "config must be a JSON object")
    return _validate_config(raw)


def config_from_dict(raw):
    """Validate an in-memory config dictionary (same rules as load_config)."""
    return _validate_config(dict(raw))


def load_dataset(path, normalize="none", header=False):
    """Read a numeric CSV (one point per row) into an EmpiricalTarget.

    ``normalize='zscore'`` transforms each column to zero mean and unit
    population standard deviation; constant columns are rejected.
    """
    rows = []
    width = None
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        for i, row in enumerate(reader):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if header and i == 0:
                continue
            parsed = []
            for j, cell in enumerate(row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"non-numeric value {cell!r} at row {i + 1}, column {j + 1} of {path}"
                    ) from None
            if width is None:
                width = len(parsed)
            elif len(parsed) != width:
                raise ValueError(
                    f"ragged row at line {i + 1} of {path}: {len(parsed)} columns, expected {width}"
                )
            rows.append(parsed)
    if not rows:
        raise ValueError(f"empty dataset: {path}")
    data = np.asarray(rows, dtype=float)
    if normalize == "zscore":
        std = data.std(axis=0)
        flat = np.flatnonzero(std == 0)
        if flat.size:
            raise ValueError(
                f"constant column {flat[0] + 1} cannot be z-score normalized ({path})"
            )
        data = (data - data.mean(axis=0)) / std
    elif normalize != "none":
        raise ValueError(f"unknown normalize mode {normalize!r}")
    return EmpiricalTarget(data)


def parse_target(spec, normalize="none", header=False):
    """Build a target from a config spec.

    Accepted: an inline mixture object {weights, means, covs}, a
    ``dataset:<path.csv>`` reference (ingested with the given normalization;
    ``header`` skips the first CSV row) or the ``benchmark`` alias for the
    stock mixture.
    """
    if isinstance(spec, dict):
        missing = {"weights", "means", "covs"} - set(spec)
        if missing:
            raise ConfigError("target", f"mixture object missing fields {sorted(missing)}")
        return GaussianMixture(
            weights=np.asarray(spec["weights"], dtype=float),
            means=np.asarray(spec["means"], dtype=float),
            covs=np.asarray(spec["covs"], dtype=float),
        )
    if isinstance(spec, str):
        text = spec.strip()
        if text.lower() == "benchmark":
            return benchmark_mixture()
        if text.lower().startswith("dataset:"):
            return load_dataset(text.split(":", 1)[1].strip(), normalize=normalize,
                                header=header)
        raise ConfigError("target", f"unknown target spec {text!r}")
    raise ConfigError("target", f"expected object or string, got {type(spec).__name__}")


def cell_seed(seed_base, method, n, repetition):
    """Stable per-cell seed: seed_base plus a truncated blake2 digest of the
    cell coordinates.  Independent of grid shape and repetition count."""
    digest = hashlib.blake2b(
        f"{method}:{n}:{repetition}".encode(), digest_size=8
    ).digest()
    return seed_base + (int.from_bytes(digest, "big") % (2**31))


def _stationary_points(kernel, target, n, seed, params):
    p = {**STATIONARY_DEFAULTS, **params}
    if p["schedule"] == "powerlaw":
        schedule = descent.PowerLawNoise(beta0=p["beta0"], alpha=p["alpha"])
    elif p["schedule"] == "none":
        schedule = descent.NoNoise()
    elif p["schedule"] == "adaptive":
        schedule = descent.AdaptiveNoise()
    else:
        raise ValueError(f"unknown schedule {p['schedule']!r}")
    x0 = descent.origin_init(n, target.dim)
    main = descent.run_descent(
        x0, kernel, target,
        descent.DescentConfig(
            gamma=p["gamma"], steps=p["steps"], schedule=schedule,
            seed=seed, log_every=p["log_every"],
        ),
    )
    points = main.final
    if p["polish_steps"]:
        polish = descent.run_descent(
            points, kernel, target,
            descent.DescentConfig(
                gamma=p["polish_gamma"], steps=p["polish_steps"],
                schedule=descent.NoNoise(), seed=seed,
                log_every=p["log_every"],
            ),
        )
        points = polish.final
    return points


def _build_points(method, kernel, target, n, seed, method_params):
    params = method_params.get(method, {})
    if method == "iid":
        return baselines.iid_points(target, n, seed)
    if method == "stationary-mmd":
        return _stationary_points(kernel, target, n, seed, params)
    if method == "herding":
        p = {**HERDING_DEFAULTS, **params}
        cfg = baselines.HerdingConfig(
            n=n, candidate_pool=p["pool"], local_refine=p["local_refine"],
            refine_steps=p["refine_steps"], seed=seed,
        )
        return baselines.kernel_herding(kernel, target, cfg)
    if method == "support-points":
        p = {**SUPPORT_DEFAULTS, **params}
        cfg = baselines.SupportPointsConfig(
            n=n, steps=p["steps"], step=p["step"], smoothing=p["smoothing"], seed=seed,
        )
        return baselines.support_points(target, cfg)
    raise ValueError(f"unknown method {method!r}")


def _score(metric_spec, kernel, target, points):
    if metric_spec == "mmd":
        return "mmd", mmd_squared(kernel, points, target).mmd
    spec = metric_spec[4:]
    integrand = parse_integrand(spec, kernel, points=points)
    return metric_label(spec), integration_error(integrand, points, target)


def _run_cell(args):
    kernel, target, cfg, method, n, repetition = args
    seed = cell_seed(cfg.seed_base, method, n, repetition)
    started = time.perf_counter()
    rows, failure = [], None
    try:
        points = _build_points(method, kernel, target, n, seed, cfg.method_params)
        scored = [_score(spec, kernel, target, points) for spec in cfg.metrics]
    except Exception as exc:  # cell failures must not kill the grid
        failure = {"method": method, "n": n, "seed": seed, "reason": f"{type(exc).__name__}: {exc}"}
        scored = [
            ("mmd" if spec == "mmd" else metric_label(spec[4:]), float("nan"))
            for spec in cfg.metrics
        ]
    elapsed = time.perf_counter() - started if cfg.record_timings else 0.0
    for label, value in scored:
        rows.append(ResultRow(method=method, n=n, seed=seed, metric=label,
                              value=float(value), wall_time_s=elapsed))
    return rows, failure


def run_experiment(cfg, out_dir=None):
    """Execute the full grid; returns (rows, summary).

    Cells are independent jobs; ``MMDPOINTS_WORKERS`` caps how many run in
    parallel (default 1).  Per-cell failures become NaN-valued rows plus an
    entry in ``summary['errors']``; the grid always runs to completion.
    Writes results.csv / summary.json when an output directory is given
    (argument wins over ``cfg.out_dir``).
    """
    kernel, centered = parse_kernel(cfg.kernel)
    target = parse_target(cfg.target, normalize=cfg.normalize,
                          header=cfg.dataset_header)
    if centered:
        kernel = center(kernel, target)
    jobs = [
        (kernel, target, cfg, method, n, rep)
        for method in cfg.methods
        for n in cfg.n_grid
        for rep in range(cfg.repetitions)
    ]
    workers = int(os.environ.get(WORKERS_ENV, "1") or "1")
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_cell, jobs))
    else:
        outcomes = [_run_cell(job) for job in jobs]
    rows = sorted((r for out, _ in outcomes for r in out), key=ResultRow.key)
    errors = [fail for _, fail in outcomes if fail is not None]
    summary = summarize(rows, cfg, errors)
    destination = out_dir if out_dir is not None else cfg.out_dir
    if destination is not None:
        write_results(rows, summary, destination)
    return rows, summary


def _quantiles(values):
    arr = np.asarray(values, dtype=float)
    q25, median, q75 = np.quantile(arr, [0.25, 0.5, 0.75])
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return {
        "count": int(arr.size),
        "median": float(median),
        "q25": float(q25),
        "q75": float(q75),
        "mean": float(arr.mean()),
        "std": std,
        "sem": std / math.sqrt(arr.size) if arr.size > 1 else 0.0,
    }


def summarize(rows, cfg, errors=()):
    """Per-(method, n, metric) medians/quantiles (plus mean, std and sem,
    since either spread convention may be wanted) and log-log rate fits."""
    groups = {}
    for row in rows:
        if math.isfinite(row.value):
            groups.setdefault((row.method, row.n, row.metric), []).append(row.value)
    cells = [
        {"method": m, "n": n, "metric": metric, **_quantiles(vals)}
        for (m, n, metric), vals in sorted(groups.items())
    ]
    rates = []
    for method, metric in sorted({(c["method"], c["metric"]) for c in cells}):
        try:
            fit = fit_rate(rows, method, metric)
        except ValueError:
            continue
        rates.append({
            "method": method, "metric": metric,
            "slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2,
        })
    return {
        "config": cfg.to_dict(),
        "cells": cells,
        "rates": rates,
        "errors": list(errors),
    }


def fit_rate(rows, method, metric):
    """OLS fit of log(median value) against log(n) for one method/metric.

    Needs at least two distinct n values, all with positive medians.
    """
    groups = {}
    for row in rows:
        if row.method == method and row.metric == metric and math.isfinite(row.value):
            groups.setdefault(row.n, []).append(row.value)
    if len(groups) < 2:
        raise ValueError(
            f"need >= 2 distinct n values for {method}/{metric}, got {len(groups)}"
        )
    ns = sorted(groups)
    medians = [float(np.median(groups[n])) for n in ns]
    if any(v <= 0 for v in medians):
        raise ValueError(f"non-positive median for {method}/{metric}; cannot fit in log space")
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(medians))
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_res = float(((y - fitted) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RateFit(slope=float(slope), intercept=float(intercept), r2=r2)


def _fmt(value):
    return format(value, ".17g")


def write_results(rows, summary, out_dir):
    """Write results.csv and summary.json (fully rewritten, never appended)."""
    os.makedirs(out_dir, exist_ok=True)
    results_path = os.path.join(out_dir, "results.csv")
    summary_path = os.path.join(out_dir, "summary.json")
    lines = [RESULTS_HEADER]
    for row in rows:
        lines.append(
            f"{row.method},{row.n},{row.seed},{row.metric},"
            f"{_fmt(row.value)},{_fmt(row.wall_time_s)}"
        )
    with open(results_path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")
    with open(summary_path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return {"results": results_path, "summary": summary_path}


def read_results(path):
    """Parse a results.csv back into rows."""
    rows = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames != RESULTS_HEADER.split(","):
            raise ValueError(f"unexpected results header in {path}: {reader.fieldnames}")
        for record in reader:
            rows.append(ResultRow(
                method=record["method"],
                n=int(record["n"]),
                seed=int(record["seed"]),
                metric=record["metric"],
                value=float(record["value"]),
                wall_time_s=float(record["wall_time_s"]),
            ))
    return rows
