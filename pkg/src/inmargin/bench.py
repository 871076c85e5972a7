"""Repeated-run benchmark: input-margin training vs its SVM initialization.

Each run draws its own mixture (seed = base_seed + run_id), trains the plain
SVM and the input-margin model (optionally the kernel-rescaling variant too)
on 20 training samples, and scores both margins and test errors.  Runs are
fully independent, so they can execute in parallel without changing a single
byte of the report.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from .data import MixtureSpec, evaluate, gen_mixture
from .exceptions import InMarginError
from .kernels import KernelSpec
from .qp import train_svm
from .simplified import train_simplified
from .trainer import TrainConfig, train_input_margin

IMPROVEMENT_THRESHOLD = 1.001


@dataclass(frozen=True)
class BenchmarkParams:
    """Experiment identity: everything that affects the report's bytes."""

    runs: int = 100
    base_seed: int = 0
    kernel: KernelSpec = KernelSpec()
    C: float | None = None
    outer_steps: int = 5
    proj_iters: int = 10
    safeguard: bool = False
    include_simplified: bool = False
    n_train: int = 20
    n_test: int = 1000
    dim: int = 2
    components_per_class: int = 3
    sigma: float = 0.2

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be positive")

    def mixture(self, run_id: int) -> MixtureSpec:
        return MixtureSpec(
            seed=self.base_seed + run_id,
            n_train=self.n_train,
            n_test=self.n_test,
            dim=self.dim,
            components_per_class=self.components_per_class,
            sigma=self.sigma,
        )

    def train_config(self, run_id: int) -> TrainConfig:
        return TrainConfig(
            outer_steps=self.outer_steps,
            proj_iters=self.proj_iters,
            C=self.C,
            safeguard=self.safeguard,
            seed=self.base_seed + run_id,
        )


@dataclass
class RunRecord:
    """Scores of one benchmark run; ``error`` is set when the run was skipped."""

    run_id: int
    svm_margin: float = 0.0
    im_margin: float = 0.0
    ratio: float = 0.0
    svm_err: float = 0.0
    im_err: float = 0.0
    err_ratio: float = 0.0
    sparsity_ok: bool = False
    sp_margin: float | None = None
    sp_ratio: float | None = None
    sp_err: float | None = None
    sp_err_ratio: float | None = None
    error: str | None = None


def _ratio(value: float, base: float) -> float:
    if base > 0.0:
        return value / base
    return 1.0 if value <= 0.0 else float("inf")


def _union_of_active(trace) -> set:
    out = set()
    for rec in trace.steps:
        out.update(int(i) for i in rec.active)
    return out


def run_one(params: BenchmarkParams, run_id: int) -> RunRecord:
    """Execute one isolated benchmark run."""
    train, test = gen_mixture(params.mixture(run_id))
    config = params.train_config(run_id)
    try:
        model, trace = train_input_margin(train, params.kernel, None, config)
        svm_margin = trace.steps[0].margin
        svm_err = None
        sp = {}
        if params.include_simplified:
            sp_model, sp_trace = train_simplified(train, params.kernel, None, config)
            sp_err = evaluate(sp_model, test)
            sp = {
                "sp_margin": sp_trace.best_margin,
                "sp_ratio": _ratio(sp_trace.best_margin, svm_margin),
                "sp_err": sp_err,
            }
        # retrain the initialization to score it on the test set; the solver
        # is deterministic, so this is the exact step-0 model
        svm_model, _ = train_svm(train, params.kernel, C=config.C, tol=config.qp_tol)
        svm_err = evaluate(svm_model, test)
        im_err = evaluate(model, test)
        if params.include_simplified:
            sp["sp_err_ratio"] = _ratio(sp["sp_err"], svm_err) if svm_err > 0 else (
                1.0 if sp["sp_err"] == 0 else float("inf")
            )
        union = _union_of_active(trace)
        sparsity_ok = set(int(i) for i in model.sv_index) <= union
        return RunRecord(
            run_id=run_id,
            svm_margin=svm_margin,
            im_margin=trace.best_margin,
            ratio=_ratio(trace.best_margin, svm_margin),
            svm_err=svm_err,
            im_err=im_err,
            err_ratio=_ratio(im_err, svm_err) if svm_err > 0 else (
                1.0 if im_err == 0 else float("inf")
            ),
            sparsity_ok=sparsity_ok,
            **sp,
        )
    except InMarginError as exc:
        return RunRecord(run_id=run_id, error=f"{type(exc).__name__}: {exc}")


def run_benchmark(params: BenchmarkParams, jobs: int | None = None) -> list:
    """All runs, in run_id order.  ``jobs=None`` reads INMARGIN_JOBS (default 1)."""
    if jobs is None:
        jobs = int(os.environ.get("INMARGIN_JOBS", "1"))
    ids = range(params.runs)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(partial(run_one, params), ids))
    return [run_one(params, i) for i in ids]


_BASE_COLUMNS = ("run_id", "svm_margin", "im_margin", "ratio", "svm_err", "im_err", "err_ratio")
_SP_COLUMNS = ("sp_margin", "sp_ratio", "sp_err", "sp_err_ratio")


def report_csv(records: list, include_simplified: bool = False) -> str:
    """Per-run report; skipped runs are left out (the summary counts them)."""
    columns = _BASE_COLUMNS + (_SP_COLUMNS if include_simplified else ())
    lines = [",".join(columns)]
    for rec in records:
        if rec.error is not None:
            continue
        cells = [str(rec.run_id)]
        for col in columns[1:]:
            cells.append(repr(float(getattr(rec, col))))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def summarize(params: BenchmarkParams, records: list) -> dict:
    """Aggregate counts and extrema; deterministic given the records."""
    done = [rec for rec in records if rec.error is None]
    skipped = [rec for rec in records if rec.error is not None]
    ratios = np.array([rec.ratio for rec in done]) if done else np.empty(0)
    err_ratios = np.array([rec.err_ratio for rec in done]) if done else np.empty(0)
    finite_err = err_ratios[np.isfinite(err_ratios)]
    out = {
        "runs": params.runs,
        "completed": len(done),
        "skipped": len(skipped),
        "skipped_runs": [rec.run_id for rec in skipped],
        "improved": int(np.sum(ratios > IMPROVEMENT_THRESHOLD)) if done else 0,
        "non_improving": int(np.sum(ratios <= IMPROVEMENT_THRESHOLD)) if done else 0,
        "ratio_min": float(ratios.min()) if done else None,
        "ratio_max": float(ratios.max()) if done else None,
        "ratio_median": float(np.median(ratios)) if done else None,
        "err_ratio_mean": float(finite_err.mean()) if finite_err.size else None,
        "err_ratio_min": float(finite_err.min()) if finite_err.size else None,
        "err_ratio_max": float(finite_err.max()) if finite_err.size else None,
        "err_ratio_infinite": int(np.sum(~np.isfinite(err_ratios))),
        "sparsity_ok": all(rec.sparsity_ok for rec in done),
        "sparsity_failures": [rec.run_id for rec in done if not rec.sparsity_ok],
    }
    if params.include_simplified and done:
        sp_ratios = np.array([rec.sp_ratio for rec in done])
        out["sp_improved"] = int(np.sum(sp_ratios > IMPROVEMENT_THRESHOLD))
        out["sp_non_improving"] = int(np.sum(sp_ratios <= IMPROVEMENT_THRESHOLD))
        out["sp_ratio_min"] = float(sp_ratios.min())
        out["sp_ratio_max"] = float(sp_ratios.max())
        out["sp_ratio_median"] = float(np.median(sp_ratios))
    return out


def write_report(params: BenchmarkParams, records: list, csv_path, summary_path=None) -> dict:
    """Write the report CSV (and optionally the summary JSON); returns the summary."""
    with open(csv_path, "w") as fh:
        fh.write(report_csv(records, include_simplified=params.include_simplified))
    summary = summarize(params, records)
    if summary_path is not None:
        with open(summary_path, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return summary
