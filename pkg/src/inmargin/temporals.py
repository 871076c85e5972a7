"""Per-step quantities that turn the linearized margin constraints into a dual QP.

Given a reference model (the previous iterate), projection points xhat_i and
displacements d_i = xhat_i - x_i, the constraint for sample i is linearized
around the reference and everything reduces to kernel evaluations:

    p_i = f(xhat_i) - f0            (bias-free value)
    q_i = grad f(xhat_i)
    r   = squared norm of the expansion weight vector
    g_i = ||q_i||_{G_i^-1} / sqrt(r)
    s_ij, t_ij, u_ij                (constraint Gram pieces; see compute_stu)

The dual matrix is Q_ij = y_i y_j s_ij - y_j t_ij - y_i t_ji + u_ij with
linear term g.  Because the linearization is not scale-free (the constraint
gradient shrinks as the reference grows), ``build_temporals`` first rescales
the reference model so its tightest linearized margin sits exactly on its
own g value; every derived quantity is then invariant under positive
rescaling of the incoming model, and the reference itself stays feasible
for the QP it induces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateGradientError, DegenerateSolutionError
from .kernels import k_matrix, kx_matrix, kxy_matrix
from .metric import MetricField
from .model import DiscriminantModel
from .qp import HARD_MARGIN_C, DualProblem, DualSolution

DEGENERATE_G = 1e-12


@dataclass
class TemporalVariables:
    """Everything compute_stu and the coefficient update need for one step."""

    xhat: np.ndarray            # (n, m) projection points
    d: np.ndarray               # (n, m) displacements xhat - x
    p: np.ndarray               # (n,)
    q: np.ndarray               # (n, m)
    r: float
    qnorm2: np.ndarray          # (n,) q_i^T G_i^-1 q_i
    g: np.ndarray               # (n,)
    Giq: np.ndarray             # (n, m) G_i^-1 q_i
    s: np.ndarray = None        # (n, n)
    t: np.ndarray = None        # (n, n)
    u: np.ndarray = None        # (n, n)
    frozen: np.ndarray = None   # (n,) rows treated as the plain-SVM special case
    norm_scale: float = 1.0     # weight norm of the model before rescaling

    def __post_init__(self):
        if self.frozen is None:
            self.frozen = np.zeros(len(self.p), dtype=bool)

    @property
    def n(self) -> int:
        return self.p.shape[0]


def compute_pqr(model: DiscriminantModel, points) -> tuple[np.ndarray, np.ndarray, float]:
    """Bias-free values p, gradients q at the given points, and weight norm r.

    r is computed from the model's own centers; when the points contain the
    centers (the usual case during training) those evaluations are reused.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    p = model.decision_values(points) - model.f0
    q = model.grad_values(points)
    sv = model.sv_index
    if (
        sv.size
        and sv.max() < points.shape[0]
        and np.array_equal(points[sv], model.centers)
    ):
        pc, qc = p[sv], q[sv]
    else:
        pc = model.decision_values(model.centers) - model.f0
        qc = model.grad_values(model.centers)
    r = float(model.a @ pc + np.einsum("cm,cm->", model.b, qc))
    return p, q, r


def _stu_matrices(model, tv, metric):
    xhat, d = tv.xhat, tv.d
    spec = model.kernel
    K = k_matrix(spec, xhat, xhat)
    KX = kx_matrix(spec, xhat, xhat)      # [i, j] = k_x(xhat_i, xhat_j)
    KXY = kxy_matrix(spec, xhat, xhat)

    A = np.einsum("im,ijm->ij", d, KX)
    B = np.einsum("im,ijmk,jk->ij", d, KXY, d)
    s = K + B - A - A.T
    s = 0.5 * (s + s.T)

    gr = tv.g * tv.r
    T1 = np.einsum("im,ijm->ij", tv.Giq, KX)
    T2 = np.einsum("im,ijmk,jk->ij", tv.Giq, KXY, d)
    proj = tv.p - np.einsum("jm,jm->j", d, tv.q)
    t = (T1 - T2 - np.outer(tv.qnorm2 / tv.r, proj)) / gr[:, None]

    U1 = np.einsum("im,ijmk,jk->ij", tv.Giq, KXY, tv.Giq)
    u = (U1 - np.outer(tv.qnorm2, tv.qnorm2) / tv.r) / (np.outer(gr, gr))
    u = 0.5 * (u + u.T)
    return s, t, u


def compute_stu(model: DiscriminantModel, tv: TemporalVariables, metric: MetricField) -> TemporalVariables:
    """Fill the pairwise constraint matrices s, t, u on a prepared tv.

    Rows marked frozen are treated as the plain-SVM special case: their
    constraint-gradient correction vanishes, so t (row) and u (row and column)
    are zeroed there.
    """
    if np.any(tv.g[~tv.frozen] < DEGENERATE_G):
        bad = np.flatnonzero((tv.g < DEGENERATE_G) & ~tv.frozen)
        raise DegenerateGradientError(
            f"discriminant gradient vanishes at sample(s) {bad.tolist()}", indices=bad
        )
    s, t, u = _stu_matrices(model, tv, metric)
    if tv.frozen.any():
        t[tv.frozen, :] = 0.0
        u[tv.frozen, :] = 0.0
        u[:, tv.frozen] = 0.0
    tv.s, tv.t, tv.u = s, t, u
    return tv


def build_temporals(
    model: DiscriminantModel,
    xhat,
    x,
    metric: MetricField,
    y=None,
    on_degenerate: str = "raise",
) -> TemporalVariables:
    """Assemble all temporal variables for one step.

    The linearized constraints depend on the representative chosen on the
    reference model's ray, so a canonical rescale is applied first: the
    reference is scaled so that its tightest linearized margin equals its own
    g value there (the plain SVM arrives in exactly this normalization, with
    y f = 1 on support vectors against g = 1).  That keeps the QP optimum in
    the neighborhood where the linearization is valid, and makes the
    assembled dual invariant under rescaling of the incoming model.

    ``y`` supplies the labels for the signed margins; without labels the
    tightness is measured on absolute values.

    ``on_degenerate`` controls what happens to samples whose gradient
    vanishes at their projection point: ``"raise"`` raises
    DegenerateGradientError, ``"freeze"`` pins the row to its plain-SVM
    special case (xhat = x, d = 0, g = 1, no gradient correction).
    """
    xhat = np.array(xhat, dtype=np.float64, copy=True)
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if on_degenerate not in ("raise", "freeze"):
        raise ValueError(f"unknown degeneracy policy {on_degenerate!r}")

    p0, q0, r0 = compute_pqr(model, xhat)
    if not np.isfinite(r0) or r0 <= 0.0:
        raise DegenerateSolutionError(f"reference model has weight norm {r0}")
    d = xhat - x
    qnorm2_0 = metric.qnorm2_inv(q0)
    g0 = np.sqrt(np.maximum(qnorm2_0, 0.0) / r0)
    frozen = g0 < DEGENERATE_G
    if frozen.any():
        if on_degenerate == "raise":
            bad = np.flatnonzero(frozen)
            raise DegenerateGradientError(
                f"discriminant gradient vanishes at sample(s) {bad.tolist()}", indices=bad
            )
        xhat[frozen] = x[frozen]
        d[frozen] = 0.0
        p0[frozen] = model.decision_values(xhat[frozen]) - model.f0
        q0[frozen] = model.grad_values(xhat[frozen])
        qnorm2_0 = metric.qnorm2_inv(q0)

    # canonical scale: tightest reference margin against its own g value;
    # g itself is a ratio and does not depend on the representative
    lin = p0 - np.einsum("im,im->i", d, q0) + model.f0
    margins = np.abs(lin) if y is None else np.asarray(y, dtype=np.float64) * lin
    geff = np.where(frozen, 1.0, g0)
    usable = margins > 0.0
    if not usable.any():
        raise DegenerateSolutionError(
            "reference model has no positive linearized margin to normalize against"
        )
    scale = float(np.min(margins[usable] / geff[usable]))
    if not np.isfinite(scale) or scale <= 0.0:
        raise DegenerateSolutionError(f"degenerate reference normalization {scale}")

    norm = model.scaled(1.0 / scale)
    p = p0 / scale
    q = q0 / scale
    r = r0 / (scale * scale)
    qnorm2 = qnorm2_0 / (scale * scale)
    g = np.sqrt(np.maximum(qnorm2, 0.0) / r)
    g[frozen] = 1.0

    tv = TemporalVariables(
        xhat=xhat,
        d=d,
        p=p,
        q=q,
        r=r,
        qnorm2=qnorm2,
        g=g,
        Giq=np.asarray(metric.apply_inv(q)),
        frozen=frozen,
        norm_scale=scale,
    )
    return compute_stu(norm, tv, metric)


def svm_special_temporals(model: DiscriminantModel, x, metric: MetricField) -> TemporalVariables:
    """Temporal variables of the plain-SVM special case: xhat = x, d = 0,
    g = 1, and no constraint-gradient correction (t = u = 0).

    With these the dual matrix reduces exactly to y_i y_j k(x_i, x_j).
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    n = x.shape[0]
    p, q, r = compute_pqr(model, x)
    qnorm2 = metric.qnorm2_inv(q)
    tv = TemporalVariables(
        xhat=x.copy(),
        d=np.zeros_like(x),
        p=p,
        q=q,
        r=r if r > 0 else 1.0,
        qnorm2=qnorm2,
        g=np.ones(n),
        Giq=np.asarray(metric.apply_inv(q)),
        s=k_matrix(model.kernel, x, x),
        t=np.zeros((n, n)),
        u=np.zeros((n, n)),
        frozen=np.ones(n, dtype=bool),
        norm_scale=1.0,
    )
    return tv


def build_dual(tv: TemporalVariables, y, C: float | None = None) -> DualProblem:
    """Dual QP with Q_ij = y_i y_j s_ij - y_j t_ij - y_i t_ji + u_ij, linear = g."""
    y = np.asarray(y, dtype=np.float64)
    if tv.s is None:
        raise ValueError("temporal variables are missing s/t/u; call compute_stu first")
    Q = np.outer(y, y) * tv.s - tv.t * y[None, :] - y[:, None] * tv.t.T + tv.u
    return DualProblem(linear=tv.g.copy(), Q=Q, y=y, C=C if C is not None else np.inf)


def update_coefficients(
    model: DiscriminantModel,
    tv: TemporalVariables,
    y,
    metric: MetricField,
    problem: DualProblem,
    solution: DualSolution,
    sv_tol: float = 1e-6,
) -> DiscriminantModel:
    """New model coefficients from a dual solution.

    a_i <- alpha_i y_i + beta a~_i
    b_i <- -alpha_i (y_i d_i + G_i^-1 q_i / (g_i r)) + beta b~_i
    beta = sum_j alpha_j ||q_j||^2_{G_j^-1} / (g_j r^2)

    where (a~, b~) are the reference coefficients at the rescaled norm.  The
    bias comes from the stationarity condition on unbounded support vectors.
    Centers whose resulting coefficients are all exactly zero are dropped, so
    the support set can only be the union of the old one and the new active set.
    """
    y = np.asarray(y, dtype=np.float64)
    alpha = solution.alpha
    n = alpha.shape[0]
    m = tv.xhat.shape[1]
    active = alpha > sv_tol
    if not active.any():
        raise DegenerateSolutionError("dual solution has no support vectors")
    alpha_c = np.where(active, alpha, 0.0)

    live = ~tv.frozen
    beta = float(np.sum((alpha_c * tv.qnorm2 / (tv.g * tv.r * tv.r))[live]))

    a_old = np.zeros(n)
    b_old = np.zeros((n, m))
    a_old[model.sv_index] = model.a / tv.norm_scale
    b_old[model.sv_index] = model.b / tv.norm_scale

    eta_dir = tv.Giq / (tv.g * tv.r)[:, None]
    eta_dir = np.where(live[:, None], eta_dir, 0.0)
    a_new = alpha_c * y + beta * a_old
    b_new = -alpha_c[:, None] * (y[:, None] * tv.d + eta_dir) + beta * b_old

    # bias: f0 = y_i (g_i - (Q alpha)_i) averaged over unbounded support vectors
    Qa = problem.Q @ alpha
    C = min(problem.C, HARD_MARGIN_C)
    unbounded = active & (alpha < C - sv_tol)
    pick = unbounded if unbounded.any() else active
    f0 = float(np.mean((y * (tv.g - Qa))[pick]))

    keep = (a_new != 0.0) | np.any(b_new != 0.0, axis=1)
    idx = np.flatnonzero(keep)
    if idx.size == 0:
        raise DegenerateSolutionError("coefficient update produced an empty model")
    return DiscriminantModel(
        kernel=model.kernel,
        centers=tv.xhat[idx].copy(),
        a=a_new[idx],
        b=b_new[idx],
        f0=f0,
        sv_index=idx,
    )
