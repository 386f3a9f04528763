"""Command-line interface.

Subcommands: ``descend`` (noisy MMD particle descent), ``baseline``
(i.i.d. / herding / support-points constructors), ``bench`` (experiment
grids from a JSON config), ``rate`` (log-log rate fit over a results.csv)
and ``check-a5`` (the noise-condition checker).

Exit codes: 0 success, 1 configuration error, 2 partial cell failures.
"""

import argparse
import json
import os
import sys

import numpy as np
import scipy

from . import __version__, bench, descent
from .baselines import HerdingConfig, SupportPointsConfig, iid_points, kernel_herding, support_points
from .kernels import center, kernel_spec, parse_kernel
from .mmd import as_point_set
from .targets import EmpiricalTarget

_FMT = ".17g"


def _fmt(value):
    return format(float(value), _FMT)


def _resolve_kernel_target(kernel_arg, target_arg, normalize, header=False):
    kernel, centered = parse_kernel(kernel_arg)
    spec = target_arg
    if isinstance(spec, str) and spec.strip().startswith("{"):
        spec = json.loads(spec)
    target = bench.parse_target(spec, normalize=normalize, header=header)
    if centered:
        kernel = center(kernel, target)
    return kernel, target


def _write_points(path, points):
    rows = [",".join(_fmt(v) for v in row) for row in np.atleast_2d(points)]
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(rows) + "\n")


def _write_trajectory(path, records):
    lines = ["t,mmd,residual,beta,a5_lhs,a5_rhs,a5_satisfied"]
    for rec in records:
        a5 = (
            ("", "", "")
            if rec.a5_lhs is None
            else (_fmt(rec.a5_lhs), _fmt(rec.a5_rhs), str(rec.a5_satisfied).lower())
        )
        lines.append(
            f"{rec.t},{_fmt(rec.mmd)},{_fmt(rec.residual)},{_fmt(rec.beta)},"
            f"{a5[0]},{a5[1]},{a5[2]}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")


def _versions():
    return {
        "mmdpoints": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": "%d.%d.%d" % sys.version_info[:3],
    }


def _schedule_from_args(args):
    if args.schedule == "none":
        return descent.NoNoise()
    if args.schedule == "powerlaw":
        return descent.PowerLawNoise(beta0=args.beta0, alpha=args.alpha)
    candidates = tuple(float(c) for c in args.candidates.split(","))
    return descent.AdaptiveNoise(candidates=candidates, check_samples=args.check_samples)


def _cmd_descend(args):
    kernel, target = _resolve_kernel_target(args.kernel, args.target, args.normalize,
                                            args.dataset_header)
    if args.init:
        x0 = as_point_set(np.loadtxt(args.init, delimiter=",", ndmin=2))
    else:
        x0 = descent.origin_init(args.n, target.dim, jitter=args.jitter, rng=args.seed)
    cfg = descent.DescentConfig(
        gamma=args.gamma,
        steps=args.T,
        schedule=_schedule_from_args(args),
        seed=args.seed,
        log_every=args.log_every,
        stop_residual=args.stop_residual,
        assumption_check_every=args.check_every,
        assumption_check_samples=args.check_samples,
    )
    result = descent.run_descent(x0, kernel, target, cfg)
    os.makedirs(args.out, exist_ok=True)
    _write_points(os.path.join(args.out, "points.csv"), result.final)
    _write_trajectory(os.path.join(args.out, "trajectory.csv"), result.trajectory)
    meta = {
        "command": "descend",
        "kernel": kernel_spec(kernel),
        "target": args.target,
        "normalize": args.normalize,
        "n": int(result.final.shape[0]),
        "dim": int(result.final.shape[1]),
        "gamma": args.gamma,
        "T": args.T,
        "schedule": args.schedule,
        "beta0": args.beta0,
        "alpha": args.alpha,
        "seed": args.seed,
        "log_every": args.log_every,
        "stop_residual": args.stop_residual,
        "steps_run": result.steps_run,
        "stopped_on_residual": result.stopped_on_residual,
        "versions": _versions(),
    }
    if isinstance(target, EmpiricalTarget):
        meta["target_double_integral_subsampled"] = target.double_integral_is_subsampled
    with open(os.path.join(args.out, "meta.json"), "w", encoding="utf-8") as handle:
        handle.write(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    final = result.trajectory[-1] if result.trajectory else None
    if final is not None:
        print(f"descend: {result.steps_run} steps, mmd={final.mmd:.6e}, "
              f"residual={final.residual:.6e}")
    return 0


def _cmd_baseline(args):
    kernel, target = _resolve_kernel_target(args.kernel, args.target, args.normalize,
                                            args.dataset_header)
    if args.method == "iid":
        points = iid_points(target, args.n, args.seed)
    elif args.method == "herding":
        cfg = HerdingConfig(
            n=args.n, candidate_pool=args.pool, local_refine=args.refine,
            refine_steps=args.refine_steps, seed=args.seed,
        )
        points = kernel_herding(kernel, target, cfg)
    else:
        cfg = SupportPointsConfig(
            n=args.n, steps=args.T, step=args.step, smoothing=args.smoothing,
            seed=args.seed,
        )
        points = support_points(target, cfg)
    _write_points(args.out, points)
    print(f"baseline {args.method}: wrote {args.n} points to {args.out}")
    return 0


def _cmd_bench(args):
    cfg = bench.load_config(args.config)
    out_dir = args.out if args.out is not None else cfg.out_dir
    if out_dir is None:
        raise bench.ConfigError("out_dir", "set out_dir in the config or pass --out")
    if args.timings:
        cfg = bench.config_from_dict({**cfg.to_dict(), "record_timings": True})
    rows, summary = bench.run_experiment(cfg, out_dir=out_dir)
    n_failed = len(summary["errors"])
    print(f"bench: {len(rows)} rows -> {out_dir} ({n_failed} failed cells)")
    for failure in summary["errors"]:
        print(f"  failed: {failure}", file=sys.stderr)
    return 2 if n_failed else 0


def _cmd_rate(args):
    rows = bench.read_results(args.results)
    fit = bench.fit_rate(rows, args.method, args.metric)
    print(json.dumps({"method": args.method, "metric": args.metric,
                      "slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2}))
    return 0


def _cmd_check_a5(args):
    kernel, target = _resolve_kernel_target(args.kernel, args.target, args.normalize,
                                            args.dataset_header)
    points = as_point_set(np.loadtxt(args.points, delimiter=",", ndmin=2))
    check = descent.check_noise_level(
        kernel, points, target, args.beta, args.samples, np.random.default_rng(args.seed)
    )
    print(json.dumps({
        "lhs": check.lhs,
        "rhs": check.rhs,
        "satisfied": check.satisfied,
        "rhs_first_order": check.rhs_first_order,
        "satisfied_first_order": check.satisfied_first_order,
    }))
    return 0


def _add_kernel_target(parser):
    parser.add_argument("--kernel", default="gaussian:ℓ=1",
                        help="kernel spec, e.g. gaussian:ℓ=1 or imq:ℓ=1,c=1,centered")
    parser.add_argument("--target", required=True,
                        help="inline mixture JSON, dataset:<path.csv>, or 'benchmark'")
    parser.add_argument("--normalize", choices=("none", "zscore"), default="none",
                        help="column normalization for dataset targets")
    parser.add_argument("--dataset-header", dest="dataset_header", action="store_true",
                        help="skip the first row of a dataset CSV")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mmdpoints",
        description="Stationary MMD point sets, baselines and integration benchmarks.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("descend", help="run noisy MMD particle descent")
    _add_kernel_target(p)
    p.add_argument("--n", type=int, default=20, help="number of particles")
    p.add_argument("--gamma", type=float, default=1.0, help="step size")
    p.add_argument("--T", type=int, default=10_000, help="iteration budget")
    p.add_argument("--beta0", type=float, default=1.0, help="noise scale at t=1")
    p.add_argument("--alpha", type=float, default=0.5, help="noise decay exponent")
    p.add_argument("--schedule", choices=("none", "powerlaw", "adaptive"), default="powerlaw")
    p.add_argument("--candidates", default="0.5,0.25,0.1",
                   help="adaptive schedule candidate exponents")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log-every", dest="log_every", type=int, default=100)
    p.add_argument("--stop-residual", dest="stop_residual", type=float, default=None)
    p.add_argument("--check-every", dest="check_every", type=int, default=None,
                   help="noise-condition check cadence")
    p.add_argument("--check-samples", dest="check_samples", type=int, default=100,
                   help="noise draws per noise-condition check")
    p.add_argument("--init", default=None, help="warm-start points.csv (overrides origin init)")
    p.add_argument("--jitter", type=float, default=0.0, help="origin-init jitter scale")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(run=_cmd_descend)

    p = sub.add_parser("baseline", help="construct a baseline point set")
    p.add_argument("--method", choices=("iid", "herding", "support-points"), required=True)
    _add_kernel_target(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pool", type=int, default=None, help="herding candidate pool size")
    p.add_argument("--refine", action="store_true", help="herding local refinement")
    p.add_argument("--refine-steps", dest="refine_steps", type=int, default=25)
    p.add_argument("--T", type=int, default=1000, help="support-points iterations")
    p.add_argument("--step", type=float, default=0.1, help="support-points step size")
    p.add_argument("--smoothing", type=float, default=1e-12)
    p.add_argument("--out", required=True, help="output points.csv path")
    p.set_defaults(run=_cmd_baseline)

    p = sub.add_parser("bench", help="run an experiment grid from a JSON config")
    p.add_argument("config", help="path to config.json")
    p.add_argument("--out", default=None, help="output directory (overrides config)")
    p.add_argument("--timings", action="store_true",
                   help="record wall times (breaks byte-reproducibility of outputs)")
    p.set_defaults(run=_cmd_bench)

    p = sub.add_parser("rate", help="fit a log-log convergence rate from results.csv")
    p.add_argument("results", help="path to results.csv")
    p.add_argument("--method", required=True)
    p.add_argument("--metric", required=True)
    p.set_defaults(run=_cmd_rate)

    p = sub.add_parser("check-a5", help="noise-condition check for a point set")
    _add_kernel_target(p)
    p.add_argument("--points", required=True, help="points.csv to check")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(run=_cmd_check_a5)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.run(args)
    except (bench.ConfigError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
