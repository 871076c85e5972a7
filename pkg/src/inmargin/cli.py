"""Command-line interface.

Subcommands: gen-data, train, eval, project, benchmark, grid.  Any flag can
also come from a JSON config file (--config); explicit flags win.  Exit
codes: 0 success, 2 usage, 3 data/input error, 4 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .bench import BenchmarkParams, run_benchmark, write_report
from .data import MixtureSpec, evaluate, gen_mixture, read_csv, write_csv
from .exceptions import (
    ConvergenceError,
    DataFormatError,
    DegenerateGradientError,
    DegenerateSolutionError,
    InfeasibleProblemError,
    InvalidMetricError,
    ProjectionFailure,
    UnsupportedKernelError,
)
from .kernels import FAMILIES, KernelSpec
from .metric import MetricField, resolve_metric
from .model import DiscriminantModel
from .projection import project_batch
from .simplified import train_simplified
from .trainer import TrainConfig, train_input_margin

_USAGE_ERROR = 2
_DATA_ERROR = 3
_SOLVER_ERROR = 4

_DATA_EXCEPTIONS = (DataFormatError, InvalidMetricError, UnsupportedKernelError, OSError, ValueError)
_SOLVER_EXCEPTIONS = (
    ConvergenceError,
    InfeasibleProblemError,
    DegenerateSolutionError,
    DegenerateGradientError,
    ProjectionFailure,
)


def _kernel_from_args(args) -> KernelSpec:
    return KernelSpec(
        family=args.kernel, sigma_sq=args.sigma_sq, degree=args.degree, offset=args.offset
    )


def _metric_from_args(args, n: int, m: int):
    if args.metric in (None, "euclidean"):
        return resolve_metric(None, n, m)
    return resolve_metric(MetricField.from_json_file(args.metric), n, m)


def _add_kernel_flags(p) -> None:
    p.add_argument("--kernel", choices=FAMILIES, default="gaussian_rbf")
    p.add_argument("--sigma-sq", type=float, default=1.0)
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--offset", type=float, default=0.0)


def _add_train_flags(p) -> None:
    p.add_argument("--C", type=float, default=None, help="box bound; omit for hard margin")
    p.add_argument("--steps", type=int, default=5)
    p.add_argument("--proj-iters", type=int, default=10)
    p.add_argument("--safeguard", action="store_true")
    p.add_argument("--metric", default="euclidean",
                   help='"euclidean" or path to a JSON file of per-sample matrices')


def cmd_gen_data(args) -> int:
    spec = MixtureSpec(
        seed=args.seed,
        n_train=args.n_train,
        n_test=args.n_test,
        dim=args.dim,
        components_per_class=args.components,
        sigma=args.sigma,
    )
    train, test = gen_mixture(spec)
    train_path = f"{args.out_prefix}_train.csv"
    test_path = f"{args.out_prefix}_test.csv"
    write_csv(train_path, train)
    write_csv(test_path, test)
    print(train_path)
    print(test_path)
    return 0


def cmd_train(args) -> int:
    data = read_csv(args.data)
    kernel = _kernel_from_args(args)
    metric = _metric_from_args(args, data.n, data.dim)
    steps = 0 if args.algorithm == "svm" else args.steps
    config = TrainConfig(
        outer_steps=steps,
        proj_iters=args.proj_iters,
        C=args.C,
        safeguard=args.safeguard,
    )
    try:
        if args.algorithm == "simplified":
            model, trace = train_simplified(data, kernel, metric, config)
        else:
            model, trace = train_input_margin(data, kernel, metric, config)
    except _SOLVER_EXCEPTIONS:
        # initialization failed; leave a trace behind so the run is inspectable
        with open(args.trace_out, "w") as fh:
            json.dump({"steps": [], "best_step": None, "best_margin": None}, fh, indent=2)
            fh.write("\n")
        raise
    model.save(args.model_out)
    with open(args.trace_out, "w") as fh:
        json.dump(trace.to_json_dict(), fh, indent=2)
        fh.write("\n")
    print(f"margin {trace.best_margin:.6f}")
    return 0


def cmd_eval(args) -> int:
    model = DiscriminantModel.load(args.model)
    data = read_csv(args.data)
    if data.dim != model.m:
        raise DataFormatError(
            f"data has {data.dim} features, model expects {model.m}"
        )
    print(f"{evaluate(model, data):.6f}")
    return 0


def cmd_project(args) -> int:
    model = DiscriminantModel.load(args.model)
    data = read_csv(args.data)
    if data.dim != model.m:
        raise DataFormatError(
            f"data has {data.dim} features, model expects {model.m}"
        )
    metric = _metric_from_args(args, data.n, data.dim)
    results = project_batch(
        model, data.x, data.x.copy(), metric, iters=args.iters, safeguard=args.safeguard
    )
    header = ["index"] + [f"xhat{j + 1}" for j in range(data.dim)]
    header += ["dist", "residual", "converged", "degenerate"]
    lines = [",".join(header)]
    for i, res in enumerate(results):
        cells = [str(i)]
        cells += [repr(float(v)) for v in res.xhat]
        cells += [repr(float(res.dist)), repr(float(res.residual))]
        cells += [str(int(res.converged)), str(int(res.degenerate))]
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_benchmark(args) -> int:
    params = BenchmarkParams(
        runs=args.runs,
        base_seed=args.base_seed,
        kernel=_kernel_from_args(args),
        C=args.C,
        outer_steps=args.steps,
        proj_iters=args.proj_iters,
        safeguard=args.safeguard,
        include_simplified=args.include_simplified,
        n_train=args.n_train,
        n_test=args.n_test,
        dim=args.dim,
        components_per_class=args.components,
        sigma=args.sigma,
    )
    records = run_benchmark(params, jobs=args.jobs)
    summary = write_report(params, records, args.out, args.summary_out)
    if args.summary_out is None:
        print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def cmd_grid(args) -> int:
    model = DiscriminantModel.load(args.model)
    if model.m != 2:
        print("grid output is only available for 2-D models", file=sys.stderr)
        return _USAGE_ERROR
    r = args.resolution
    if r < 2:
        print("resolution must be at least 2", file=sys.stderr)
        return _USAGE_ERROR
    xs = np.linspace(args.xmin, args.xmax, r)
    ys = np.linspace(args.ymin, args.ymax, r)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    f = model.decision_values(pts)
    lines = ["x,y,f"]
    for (px, py), v in zip(pts, f):
        lines.append(f"{repr(float(px))},{repr(float(py))},{repr(float(v))}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file supplying defaults for any flag")

    parser = argparse.ArgumentParser(
        prog="inmargin",
        description="Kernel classifiers trained for input-space margin.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {}

    p = sub.add_parser("gen-data", parents=[common], help="generate a synthetic mixture dataset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-train", type=int, default=20)
    p.add_argument("--n-test", type=int, default=1000)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--components", type=int, default=3)
    p.add_argument("--sigma", type=float, default=0.2)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_gen_data)
    commands["gen-data"] = p

    p = sub.add_parser("train", parents=[common], help="train a classifier on a CSV dataset")
    p.add_argument("--algorithm", choices=("svm", "input-margin", "simplified"),
                   default="input-margin")
    p.add_argument("--data", required=True)
    p.add_argument("--model-out", default="model.json")
    p.add_argument("--trace-out", default="trace.json")
    _add_kernel_flags(p)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)
    commands["train"] = p

    p = sub.add_parser("eval", parents=[common], help="error rate of a model on a CSV dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.set_defaults(func=cmd_eval)
    commands["eval"] = p

    p = sub.add_parser("project", parents=[common],
                       help="projections of samples onto a model's boundary")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--safeguard", action="store_true")
    p.add_argument("--metric", default="euclidean")
    p.add_argument("--out")
    p.set_defaults(func=cmd_project)
    commands["project"] = p

    p = sub.add_parser("benchmark", parents=[common], help="repeated-run margin comparison")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=None,
                   help="parallel workers (default: INMARGIN_JOBS or 1)")
    p.add_argument("--include-simplified", action="store_true")
    p.add_argument("--n-train", type=int, default=20)
    p.add_argument("--n-test", type=int, default=1000)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--components", type=int, default=3)
    p.add_argument("--sigma", type=float, default=0.2)
    p.add_argument("--out", default="benchmark.csv")
    p.add_argument("--summary-out", default=None)
    _add_kernel_flags(p)
    p.add_argument("--C", type=float, default=None)
    p.add_argument("--steps", type=int, default=5)
    p.add_argument("--proj-iters", type=int, default=10)
    p.add_argument("--safeguard", action="store_true")
    p.set_defaults(func=cmd_benchmark)
    commands["benchmark"] = p

    p = sub.add_parser("grid", parents=[common], help="decision values on a 2-D grid")
    p.add_argument("--model", required=True)
    p.add_argument("--xmin", type=float, default=0.0)
    p.add_argument("--xmax", type=float, default=1.0)
    p.add_argument("--ymin", type=float, default=0.0)
    p.add_argument("--ymax", type=float, default=1.0)
    p.add_argument("--resolution", type=int, default=50)
    p.add_argument("--out")
    p.set_defaults(func=cmd_grid)
    commands["grid"] = p

    return parser, commands


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser, commands = build_parser()

    # first pass only looks for --config; its values become defaults, so
    # explicitly given flags still win the second pass
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        try:
            with open(known.config) as fh:
                payload = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return _DATA_ERROR
        if not isinstance(payload, dict):
            print("error: config file must hold a JSON object", file=sys.stderr)
            return _DATA_ERROR
        defaults = {key.replace("-", "_").lstrip("_"): val for key, val in payload.items()}
        for reserved in ("func", "command", "config"):
            defaults.pop(reserved, None)
        for p in commands.values():
            p.set_defaults(**defaults)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _SOLVER_EXCEPTIONS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _SOLVER_ERROR
    except _DATA_EXCEPTIONS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
