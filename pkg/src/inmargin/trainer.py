"""Iterative input-margin training.

Each outer step linearizes the boundary at the samples' current projection
points, solves the resulting dual QP, and rebuilds the discriminant from its
solution.  The plain SVM is both the initializer and the first candidate; the
returned model is the best candidate by measured input-space margin, so the
procedure never does worse than the SVM it started from.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .data import Dataset
from .exceptions import ConvergenceError, InMarginError
from .kernels import KernelSpec
from .metric import resolve_metric
from .model import DiscriminantModel
from .projection import estimate_margin, project_batch, project_hyperplane
from .qp import solve_dual, train_svm
from .temporals import build_dual, build_temporals, update_coefficients

MARGIN_STALL_TOL = 1e-6


@dataclass(frozen=True)
class TrainConfig:
    """Knobs of the outer loop.

    ``C=None`` means hard margin.  ``seed`` does not influence training (the
    whole procedure is deterministic); it is carried into the trace so runs
    can be tagged.
    """

    outer_steps: int = 5
    proj_iters: int = 10
    C: float | None = None
    safeguard: bool = False
    tol_f: float = 1e-8
    qp_tol: float = 1e-6
    projection_ridge: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.outer_steps < 0 or self.proj_iters < 1:
            raise ValueError("need outer_steps >= 0 and proj_iters >= 1")
        if self.C is not None and not self.C > 0:
            raise ValueError("C must be positive or None")
        if self.tol_f <= 0 or self.qp_tol <= 0 or self.projection_ridge <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class StepRecord:
    """What one outer step did: step 0 is always the plain SVM."""

    step: int
    status: str
    margin: float | None
    qp_objective: float | None
    n_sv: int
    active: list


@dataclass
class TrainTrace:
    """Step-by-step record of a training run."""

    steps: list = field(default_factory=list)
    best_step: int = 0
    best_margin: float = 0.0
    early_stop: bool = False
    config: TrainConfig | None = None

    def to_json_dict(self) -> dict:
        return {
            "config": asdict(self.config) if self.config is not None else None,
            "steps": [
                {
                    "step": rec.step,
                    "step_status": rec.status,
                    "margin": None if rec.margin is None else float(rec.margin),
                    "qp_objective": None
                    if rec.qp_objective is None
                    else float(rec.qp_objective),
                    "n_sv": int(rec.n_sv),
                    "active": [int(i) for i in rec.active],
                }
                for rec in self.steps
            ],
            "best_step": int(self.best_step),
            "best_margin": float(self.best_margin),
            "early_stop": bool(self.early_stop),
        }


def train_input_margin(
    data: Dataset,
    kernel: KernelSpec,
    metric=None,
    config: TrainConfig | None = None,
) -> tuple[DiscriminantModel, TrainTrace]:
    """Maximize the input-space margin of a kernel classifier.

    Starts from the plain SVM, then repeats up to ``config.outer_steps``
    times: project every sample onto the current boundary, re-express the
    current discriminant on the projection points, assemble and solve the
    linearized dual, and rebuild the coefficients from its solution.  Margins
    are measured the same way for every candidate (projections started at the
    samples), the candidate with the largest margin wins, and the loop stops
    early once the margin stalls.  A step that fails numerically is recorded
    and skipped, leaving the previous model in place.
    """
    config = config or TrainConfig()
    metric = resolve_metric(metric, data.n, data.dim)

    model, svm_solution = train_svm(data, kernel, C=config.C, tol=config.qp_tol)
    est = estimate_margin(
        model, data, metric,
        proj_iters=config.proj_iters, safeguard=config.safeguard, tol_f=config.tol_f,
    )
    trace = TrainTrace(config=config)
    trace.steps.append(
        StepRecord(
            step=0,
            status="svm",
            margin=est.margin,
            qp_objective=svm_solution.objective,
            n_sv=model.n_centers,
            active=model.sv_index.tolist(),
        )
    )
    best_model, best_margin, best_step = model, est.margin, 0
    prev_margin = est.margin
    prev_xhat = data.x.copy()   # step 0 expands the discriminant on the samples

    for step in range(1, config.outer_steps + 1):
        try:
            # projections warm-start from the previous step's points
            results = project_batch(
                model, data.x, prev_xhat.copy(), metric,
                iters=config.proj_iters, safeguard=config.safeguard, tol_f=config.tol_f,
            )
            xhat = np.stack([res.xhat for res in results])
            # the re-expression basis stays restricted to the current support
            # set (at its projected positions), which is what keeps every
            # model's centers inside the union of the QP active sets
            reference = project_hyperplane(
                model, xhat[model.sv_index], data,
                ridge=config.projection_ridge,
                extra_points=np.vstack([prev_xhat, xhat]),
            )
            tv = build_temporals(
                reference, xhat, data.x, metric, y=data.y, on_degenerate="freeze"
            )
            problem = build_dual(tv, data.y, C=config.C)
            solution = solve_dual(problem, tol=config.qp_tol)
            if not solution.converged:
                raise ConvergenceError(
                    f"step {step}: dual stalled at violation {solution.kkt_violation:.3e}"
                )
            candidate = update_coefficients(
                reference, tv, data.y, metric, problem, solution, sv_tol=config.qp_tol
            )
            est = estimate_margin(
                candidate, data, metric,
                proj_iters=config.proj_iters, safeguard=config.safeguard, tol_f=config.tol_f,
            )
        except (InMarginError, np.linalg.LinAlgError) as exc:
            trace.steps.append(
                StepRecord(
                    step=step,
                    status=f"skipped ({type(exc).__name__})",
                    margin=None,
                    qp_objective=None,
                    n_sv=model.n_centers,
                    active=[],
                )
            )
            continue

        trace.steps.append(
            StepRecord(
                step=step,
                status="ok",
                margin=est.margin,
                qp_objective=solution.objective,
                n_sv=candidate.n_centers,
                active=solution.active_set.tolist(),
            )
        )
        if est.margin > best_margin:
            best_model, best_margin, best_step = candidate, est.margin, step
        stalled = abs(est.margin - prev_margin) < MARGIN_STALL_TOL
        model = candidate
        prev_margin = est.margin
        prev_xhat = tv.xhat   # frozen rows sit at their samples, as used
        if stalled:
            trace.early_stop = True
            break

    trace.best_step = best_step
    trace.best_margin = best_margin
    return best_model, trace
