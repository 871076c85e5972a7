"""Kernel-rescaling approximation of input-margin training.

Instead of assembling the full linearized dual, this variant folds the
per-sample gradient norms into the margin targets.  One round: compute

    g_i = || sum_j a_j k_x(x_i, x_j) ||_{G_i^-1} / sqrt(sum_jk a_j a_k k_jk)

from the current coefficients, then solve the SVM dual with per-sample
targets g in place of the all-ones linear term:

    max  sum_i g_i alpha_i - 1/2 alpha' (yy' * K) alpha
    s.t. sum_i y_i alpha_i = 0,  0 <= alpha <= C

and rebuild the model as a_i = alpha_i y_i with f0 from the equality rows,
so every training point satisfies y_i f(x_i) >= g_i.  Substituting
beta_i = g_i alpha_i turns this into the standard SVM objective over the
rescaled Gram matrix K_ij / (g_i g_j) with coefficients beta_i y_i / g_i
(the classic code-reuse view of the round); solving in alpha keeps the
equality constraint exact instead of approximating it in beta.  With g
identically 1 the round is a plain SVM, so the first step always is one.
"""

from __future__ import annotations

import numpy as np

from .data import Dataset
from .exceptions import ConvergenceError, DegenerateSolutionError, InMarginError
from .kernels import KernelSpec, k_matrix, kx_matrix
from .metric import MetricField, resolve_metric
from .model import DiscriminantModel
from .projection import estimate_margin
from .qp import HARD_MARGIN_C, DualProblem, solve_dual, train_svm
from .trainer import MARGIN_STALL_TOL, StepRecord, TrainConfig, TrainTrace

_DEGENERATE_G = 1e-12


def simplified_g(model: DiscriminantModel, X, metric: MetricField) -> np.ndarray:
    """Per-sample gradient norms of the position-coefficient part of a model.

    Only the a-coefficients enter, matching the rescaling round's view of the
    model; the norm in the denominator is taken in the same truncated sense.
    Samples where the gradient vanishes get g = 1 (no rescaling) rather than
    an exploding 1/g.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Kcc = k_matrix(model.kernel, model.centers, model.centers)
    wnorm2 = float(model.a @ Kcc @ model.a)
    if not np.isfinite(wnorm2) or wnorm2 <= 0.0:
        raise DegenerateSolutionError(f"coefficient vector has squared norm {wnorm2}")
    grads = np.einsum("c,pcm->pm", model.a, kx_matrix(model.kernel, X, model.centers))
    g = np.sqrt(np.maximum(metric.qnorm2_inv(grads), 0.0) / wnorm2)
    return np.where(g < _DEGENERATE_G, 1.0, g)


def _rescaled_round(data, kernel, K, g, C, tol):
    """One margin-target dual round, mapped back to model coefficients."""
    y = data.y
    problem = DualProblem(
        linear=g.copy(), Q=np.outer(y, y) * K, y=y, C=C if C is not None else np.inf
    )
    solution = solve_dual(problem, tol=tol)
    if not solution.converged:
        raise ConvergenceError(
            f"rescaled dual stalled at violation {solution.kkt_violation:.3e}"
        )
    a_full = solution.alpha * y

    Cbox = min(problem.C, HARD_MARGIN_C)
    active = solution.alpha > tol
    if not active.any():
        raise DegenerateSolutionError("rescaled dual has no support vectors")
    unbounded = active & (solution.alpha < Cbox - tol)
    pick = unbounded if unbounded.any() else active
    # equality rows read y_i f(x_i) = g_i with f(x_i) = (y * Q alpha)_i + f0
    f0 = float(np.mean((y * (g - problem.Q @ solution.alpha))[pick]))

    model = DiscriminantModel(
        kernel=kernel,
        centers=data.x[active].copy(),
        a=a_full[active],
        b=np.zeros((int(active.sum()), data.dim)),
        f0=f0,
        sv_index=np.flatnonzero(active),
    )
    return model, solution


def train_simplified(
    data: Dataset,
    kernel: KernelSpec,
    metric=None,
    config: TrainConfig | None = None,
) -> tuple[DiscriminantModel, TrainTrace]:
    """Input-margin training by iterated kernel rescaling.

    Same outer shape as the full trainer: plain SVM first, then up to
    ``config.outer_steps`` rescaling rounds, margins measured identically for
    every candidate, best candidate returned, early stop on a stalled margin,
    failed rounds recorded and skipped.
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
    K = k_matrix(kernel, data.x, data.x)

    for step in range(1, config.outer_steps + 1):
        try:
            g = simplified_g(model, data.x, metric)
            candidate, solution = _rescaled_round(
                data, kernel, K, g, config.C, config.qp_tol
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
        if stalled:
            trace.early_stop = True
            break

    trace.best_step = best_step
    trace.best_margin = best_margin
    return best_model, trace
