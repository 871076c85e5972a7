"""Projection of samples onto the decision boundary and related estimates.

The distance from sample x to the boundary {f = 0} under metric G is
estimated at a trial point xhat by linearizing f there:

    dist^2 = (f(xhat) - grad f(xhat) . (xhat - x))^2
             / (grad f(xhat)^T G^-1 grad f(xhat)),

and the trial point is refined by repeatedly projecting x onto the tangent
hyperplane at the current iterate:

    xhat <- x - G^-1 grad f(xhat) *
            (f(xhat) - grad f(xhat) . (xhat - x)) / (grad^T G^-1 grad).

For an affine f this lands on the exact metric-weighted foot of the
perpendicular in one step.  Near a strongly curved boundary the fixed point
can be repelling even when it is a genuine local minimum of the distance; the
optional safeguard damps the tangential step components responsible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .exceptions import DegenerateGradientError, ProjectionFailure
from .kernels import k_matrix, kx_matrix
from .metric import MetricField
from .model import DiscriminantModel

_DEGENERATE_Q = 1e-24   # threshold on grad^T G^-1 grad
_STEP_EPS = 1e-15


@dataclass
class ProjectionResult:
    """Outcome of projecting one sample onto the decision boundary."""

    xhat: np.ndarray
    d: np.ndarray
    dist: float
    residual: float
    converged: bool
    degenerate: bool = False
    lambda_est: float | None = None
    curvatures: np.ndarray | None = None


def approx_distance(model: DiscriminantModel, x, xhat, G=None) -> float:
    """First-order distance estimate from x to {f = 0} linearized at xhat."""
    x = np.asarray(x, dtype=np.float64)
    xhat = np.asarray(xhat, dtype=np.float64)
    q = model.eval_grad_f(xhat)
    if G is None:
        Ginv_q = q
    else:
        G = np.asarray(G, dtype=np.float64)
        Ginv_q = np.linalg.solve(G, q)
    qn2 = float(q @ Ginv_q)
    if qn2 < _DEGENERATE_Q:
        raise DegenerateGradientError("gradient vanishes at the linearization point")
    num = model.eval_f(xhat) - float(q @ (xhat - x))
    return abs(num) / np.sqrt(qn2)


def _safeguard_step(model, x, xhat, step, grad):
    """Damp tangential step components at a repelling local minimum.

    lambda is estimated from the alignment of the gradient with the current
    displacement; curvatures c_j come from the Hessian restricted to the
    orthogonal complement of the displacement.  Working with the orientation
    sign(lambda), steps along axes with c_j * sign(lambda) < -|lambda| are
    multiplied by 0.5 |lambda| / |c_j|.  Axes that mark the point as a local
    maximum (c_j * sign(lambda) >= |lambda|) are left alone so the iteration
    can escape it.
    """
    d = xhat - x
    dn = float(np.linalg.norm(d))
    if dn < _STEP_EPS:
        return step, None, None
    lam = float(grad @ d) / (dn * dn)
    if lam == 0.0:
        return step, 0.0, None
    u = d / dn
    m = x.size
    if m < 2:
        return step, lam, np.empty(0)
    # orthonormal basis of the complement of u
    basis = np.linalg.svd(np.eye(m) - np.outer(u, u))[0][:, : m - 1]
    H = model.eval_hess_f(xhat)
    H = 0.5 * (H + H.T)
    Hr = basis.T @ H @ basis
    cvals, cvecs = np.linalg.eigh(Hr)
    axes = basis @ cvecs
    sgn = 1.0 if lam > 0 else -1.0
    oriented = sgn * cvals
    if np.any(oriented >= abs(lam)):
        return step, lam, cvals
    out = step.copy()
    for j in range(cvals.size):
        if oriented[j] < -abs(lam):
            factor = 0.5 * abs(lam) / abs(cvals[j])
            comp = float(axes[:, j] @ step)
            out += (factor - 1.0) * comp * axes[:, j]
    return out, lam, cvals


def project_batch(
    model: DiscriminantModel,
    X,
    Xhat0,
    metric: MetricField,
    iters: int = 10,
    safeguard: bool = False,
    tol_f: float = 1e-8,
) -> list[ProjectionResult]:
    """Run the projection iteration for every row of X simultaneously."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Xhat = np.array(Xhat0, dtype=np.float64, copy=True)
    if Xhat.shape != X.shape:
        raise ValueError(f"Xhat0 has shape {Xhat.shape}, expected {X.shape}")
    n = X.shape[0]
    degenerate = np.zeros(n, dtype=bool)
    lam_est = [None] * n
    curvs = [None] * n

    for _ in range(iters):
        q = model.grad_values(Xhat)
        fv = model.decision_values(Xhat)
        Giq = np.asarray(metric.apply_inv(q))
        qn2 = np.einsum("im,im->i", q, Giq)
        newly = (qn2 < _DEGENERATE_Q) & ~degenerate
        degenerate |= newly
        live = ~degenerate
        if not live.any():
            break
        bracket = fv - np.einsum("im,im->i", Xhat - X, q)
        denom = np.where(live, qn2, 1.0)
        Xnew = X - Giq * (bracket / denom)[:, None]
        step = Xnew - Xhat
        if safeguard:
            for i in np.flatnonzero(live):
                adj, lam_i, c_i = _safeguard_step(model, X[i], Xhat[i], step[i], q[i])
                step[i] = adj
                lam_est[i] = lam_i
                curvs[i] = c_i
        step[degenerate] = 0.0
        Xhat = Xhat + step
        norms = np.linalg.norm(step, axis=1)
        if np.all(norms[live] <= _STEP_EPS * (1.0 + np.linalg.norm(Xhat[live], axis=1))):
            break

    d = Xhat - X
    dist = np.sqrt(np.maximum(metric.qnorm2(d), 0.0))
    residual = model.decision_values(Xhat)
    gnorm = np.linalg.norm(model.grad_values(Xhat), axis=1)
    dnorm = np.linalg.norm(d, axis=1)
    converged = (np.abs(residual) <= tol_f * (1.0 + gnorm * dnorm)) & ~degenerate
    return [
        ProjectionResult(
            xhat=Xhat[i].copy(),
            d=d[i].copy(),
            dist=float(dist[i]),
            residual=float(residual[i]),
            converged=bool(converged[i]),
            degenerate=bool(degenerate[i]),
            lambda_est=lam_est[i],
            curvatures=curvs[i],
        )
        for i in range(n)
    ]


def project_point(
    model: DiscriminantModel,
    x,
    xhat0=None,
    G=None,
    iters: int = 10,
    safeguard: bool = False,
    tol_f: float = 1e-8,
) -> ProjectionResult:
    """Project a single sample onto the decision boundary.

    ``G`` is the sample's metric matrix (None for Euclidean).  The iteration
    starts from ``xhat0`` (the sample itself by default) and runs for ``iters``
    steps or until the update stalls.  A vanishing gradient at an iterate
    freezes that trajectory; the last stable iterate is returned flagged
    degenerate (and not converged).
    """
    x = np.asarray(x, dtype=np.float64)
    start = x.copy() if xhat0 is None else np.asarray(xhat0, dtype=np.float64)
    if G is None:
        field = MetricField.euclidean()
    else:
        field = MetricField.from_matrices(np.asarray(G)[None, :, :]).validated(1, x.size)
    return project_batch(
        model, x[None, :], start[None, :], field, iters=iters, safeguard=safeguard, tol_f=tol_f
    )[0]


def project_hyperplane(
    old_model: DiscriminantModel,
    new_centers,
    samples,
    ridge: float = 1e-8,
    extra_points=None,
) -> DiscriminantModel:
    """Re-express the decision function on displaced centers.

    Solves min sum_{x in T} (f_new(x) - f_old(x))^2 over the coefficients
    (a, b, f0) of an expansion on ``new_centers``.  T consists of the sample
    points plus either ``extra_points`` (when given) or the old and new center
    positions.  The normal equations carry a ridge of
    ``ridge * (largest squared design column norm)`` because T routinely fails
    to pin down all coefficients when centers cluster.
    """
    new_centers = np.atleast_2d(np.asarray(new_centers, dtype=np.float64))
    if new_centers.ndim != 2 or new_centers.shape[1] != old_model.m:
        raise ValueError(
            f"new centers have shape {new_centers.shape}, expected (*, {old_model.m})"
        )
    pts = samples.x if isinstance(samples, Dataset) else np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if extra_points is not None:
        T = np.vstack([pts, np.atleast_2d(np.asarray(extra_points, dtype=np.float64))])
    else:
        T = np.vstack([pts, old_model.centers, new_centers])
    target = old_model.decision_values(T)

    nc, m = new_centers.shape
    nt = T.shape[0]
    Kct = k_matrix(old_model.kernel, new_centers, T)
    KXct = kx_matrix(old_model.kernel, new_centers, T)
    A = np.concatenate(
        [Kct.T, KXct.transpose(1, 0, 2).reshape(nt, nc * m), np.ones((nt, 1))], axis=1
    )
    col2 = np.einsum("ij,ij->j", A, A)
    top = float(col2.max())
    if not np.isfinite(top) or top <= 0.0:
        raise ProjectionFailure("design matrix for the hyperplane projection is degenerate")
    lam = ridge * top
    M = A.T @ A + lam * np.eye(A.shape[1])
    try:
        coef = np.linalg.solve(M, A.T @ target)
    except np.linalg.LinAlgError:
        raise ProjectionFailure("hyperplane projection system is singular beyond ridge repair") from None
    if not np.isfinite(coef).all():
        raise ProjectionFailure("hyperplane projection produced non-finite coefficients")
    if nc == old_model.n_centers:
        sv_index = old_model.sv_index.copy()
    else:
        sv_index = np.arange(nc)
    return DiscriminantModel(
        kernel=old_model.kernel,
        centers=new_centers.copy(),
        a=coef[:nc],
        b=coef[nc : nc + nc * m].reshape(nc, m),
        f0=float(coef[-1]),
        sv_index=sv_index,
    )


@dataclass
class MarginEstimate:
    """Margin of a model over a dataset, plus per-sample projection detail."""

    margin: float
    results: list
    violations: np.ndarray
    partial: bool


def estimate_margin(
    model: DiscriminantModel,
    data: Dataset,
    metric: MetricField,
    proj_iters: int = 10,
    safeguard: bool = False,
    tol_f: float = 1e-8,
) -> MarginEstimate:
    """Smallest distance from any sample to the boundary, in each sample's metric.

    Projections start at the samples.  If any sample is misclassified
    (y_i f(x_i) <= 0) the margin is 0 and the offenders are listed.  Samples
    whose projection did not converge are left out of the minimum; if a
    projection degenerated the result is flagged partial.
    """
    fvals = model.decision_values(data.x)
    violations = np.flatnonzero(data.y * fvals <= 0.0)
    results = project_batch(
        model, data.x, data.x.copy(), metric, iters=proj_iters, safeguard=safeguard, tol_f=tol_f
    )
    partial = any(res.degenerate for res in results)
    if violations.size:
        margin = 0.0
    else:
        dists = [res.dist for res in results if res.converged]
        margin = float(min(dists)) if dists else 0.0
        if not dists:
            partial = True
    return MarginEstimate(margin=margin, results=results, violations=violations, partial=partial)
