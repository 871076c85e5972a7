"""Dual quadratic program and its deterministic active-set solver.

The problem solved here is

    maximize  W(alpha) = linear . alpha - 1/2 alpha^T Q alpha
    subject to  0 <= alpha_i <= C,   sum_i y_i alpha_i = 0,

which covers the plain SVM (linear = 1, Q_ij = y_i y_j k(x_i, x_j)) and the
generalized margin problem assembled from the temporal variables.  Hard margin
is realized as C = 1e12.  Each iteration releases the maximal violating pair
(lowest index on ties) into the working set and solves the equality-constrained
subproblem on it exactly, so runs are bit-reproducible and badly conditioned
kernels converge in a handful of pivots instead of millions of pair updates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .exceptions import ConvergenceError, InfeasibleProblemError
from .kernels import KernelSpec, k_matrix
from .model import DiscriminantModel

HARD_MARGIN_C = 1e12
_MIN_CURVATURE = 1e-12
_JITTER_FACTOR = 1e-10


@dataclass
class DualProblem:
    """Data of one dual QP: linear term, quadratic matrix, labels, box bound."""

    linear: np.ndarray
    Q: np.ndarray
    y: np.ndarray
    C: float = np.inf

    def __post_init__(self):
        self.linear = np.asarray(self.linear, dtype=np.float64)
        self.Q = np.asarray(self.Q, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        n = self.linear.shape[0]
        if self.Q.shape != (n, n):
            raise ValueError(f"Q has shape {self.Q.shape}, expected ({n}, {n})")
        if self.y.shape != (n,):
            raise ValueError(f"y has shape {self.y.shape}, expected ({n},)")
        if not np.all(np.abs(self.y) == 1.0):
            raise ValueError("labels must be +1 or -1")
        self.C = float(self.C)
        if not self.C > 0.0:
            raise ValueError("C must be positive")

    @property
    def n(self) -> int:
        return self.linear.shape[0]

    def objective(self, alpha: np.ndarray) -> float:
        return float(self.linear @ alpha - 0.5 * alpha @ self.Q @ alpha)


@dataclass
class DualSolution:
    alpha: np.ndarray
    objective: float
    kkt_violation: float
    active_set: np.ndarray
    iterations: int
    converged: bool
    grad: np.ndarray = field(repr=False, default=None)
    objective_trace: list = field(repr=False, default=None)


def _violating_pair(alpha: np.ndarray, grad: np.ndarray, y: np.ndarray, C: float):
    """Maximal violating pair (i, j) and its KKT violation, lowest index on ties."""
    score = -y * grad
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0.0))
    low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0.0))
    if not up.any() or not low.any():
        return -1, -1, 0.0
    i = int(np.argmax(np.where(up, score, -np.inf)))
    j = int(np.argmin(np.where(low, score, np.inf)))
    return i, j, float(score[i] - score[j])


def solve_dual(
    problem: DualProblem,
    tol: float = 1e-6,
    max_iter: int | None = None,
    alpha0: np.ndarray | None = None,
    record_objective: bool = False,
) -> DualSolution:
    """Maximize the dual with deterministic active-set pivots.

    Each pivot releases the maximal violating pair into the working set,
    solves the equality-constrained subproblem on the released variables
    exactly, and walks toward that target until a box bound blocks the step;
    the blocking variable is pinned exactly on its bound.  Pair selection,
    ratio-test ties, and pinning all break ties by lowest index and no
    randomness is used anywhere, so runs are bit-reproducible.  When
    ``max_iter`` runs out the best iterate found is returned with
    ``converged=False``.
    """
    n = problem.n
    y = problem.y
    C = min(problem.C, HARD_MARGIN_C)
    if max_iter is None:
        max_iter = int(1e5) * n

    # One-signed labels admit only alpha = 0 under the equality constraint.
    if np.all(y > 0) or np.all(y < 0):
        alpha = np.zeros(n)
        return DualSolution(
            alpha=alpha,
            objective=0.0,
            kkt_violation=0.0,
            active_set=np.empty(0, dtype=np.int64),
            iterations=0,
            converged=True,
            grad=-problem.linear.copy(),
        )

    Q = problem.Q
    try:
        np.linalg.cholesky(Q + 0.0)
    except np.linalg.LinAlgError:
        Q = Q + (_JITTER_FACTOR * np.trace(Q) / n) * np.eye(n)

    if alpha0 is not None:
        alpha = np.clip(np.asarray(alpha0, dtype=np.float64).copy(), 0.0, C)
        if abs(y @ alpha) > 1e-8 * (1.0 + alpha.sum()):
            alpha = np.zeros(n)
    else:
        alpha = np.zeros(n)

    trace = [] if record_objective else None
    free = (alpha > 0.0) & (alpha < C)
    converged = False
    it = 0
    stalled = 0
    while it < max_iter:
        idx = np.flatnonzero(free)
        pinned = np.flatnonzero(~free)
        # stationarity on the free variables with pinned ones held fixed; the
        # equality multiplier rides along as the last unknown
        kkt = np.zeros((idx.size + 1, idx.size + 1))
        kkt[:-1, :-1] = Q[np.ix_(idx, idx)]
        kkt[:-1, -1] = y[idx]
        kkt[-1, :-1] = y[idx]
        rhs = np.empty(idx.size + 1)
        rhs[:-1] = problem.linear[idx] - Q[np.ix_(idx, pinned)] @ alpha[pinned]
        rhs[-1] = -(y[pinned] @ alpha[pinned])
        try:
            sol = np.linalg.solve(kkt, rhs)
            if not np.all(np.isfinite(sol)):
                raise np.linalg.LinAlgError("non-finite subproblem solution")
        except np.linalg.LinAlgError:
            sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
        target = sol[:-1]
        mu = float(sol[-1])
        # solver dust this close to a bound is not a blocking constraint
        snap = 1e-10 * (1.0 + np.abs(target))
        target[np.abs(target) < snap] = 0.0
        target[np.abs(target - C) < snap] = C
        before = alpha[idx].copy()
        if np.all(target >= 0.0) and np.all(target <= C):
            alpha[idx] = target
            grad = Q @ alpha - problem.linear
            i, j, violation = _violating_pair(alpha, grad, y, C)
            if violation <= tol:
                converged = True
                break
            # the working set is optimal but a pinned bound holds the objective
            # back: release the most negative bound multiplier, lowest index on
            # ties; mu prices the equality constraint in lambda = grad + mu y
            lam = grad + mu * y
            rel = -1
            worst = 0.0
            for k in range(n):
                if free[k]:
                    continue
                v = -lam[k] if alpha[k] == 0.0 else lam[k]
                if v > worst:
                    worst = v
                    rel = k
            if rel >= 0:
                free[rel] = True
            else:
                # multipliers look clean yet the pair metric disagrees (noise);
                # release the pinned members of the violating pair instead
                released = False
                for k in (i, j):
                    if not free[k]:
                        free[k] = True
                        released = True
                if not released:
                    break
        else:
            # walk toward the target until the first box bound blocks the step;
            # the blocker lands EXACTLY on its bound, because rounding the
            # arithmetic leaves dust that the pair masks treat as interior
            d = target - alpha[idx]
            theta = 1.0
            bpos = -1
            for pos in range(idx.size):
                if d[pos] > 0.0 and target[pos] > C:
                    t = (C - alpha[idx[pos]]) / d[pos]
                elif d[pos] < 0.0 and target[pos] < 0.0:
                    t = -alpha[idx[pos]] / d[pos]
                else:
                    continue
                if t < theta:
                    theta = t
                    bpos = pos
            if bpos >= 0:
                alpha[idx] = np.clip(alpha[idx] + theta * d, 0.0, C)
                k = int(idx[bpos])
                alpha[k] = C if d[bpos] > 0.0 else 0.0
                free[k] = False
            else:
                alpha[idx] = np.clip(target, 0.0, C)
        it += 1
        if record_objective:
            trace.append(problem.objective(alpha))
        if np.array_equal(alpha[idx], before):
            stalled += 1
        else:
            stalled = 0
        if stalled > 3 * n + 8:
            # working-set churn without movement; force progress with a plain
            # pair update, which moves whenever the pair violation does
            grad = Q @ alpha - problem.linear
            i, j, violation = _violating_pair(alpha, grad, y, C)
            if violation <= tol:
                converged = True
                break
            curv = Q[i, i] + Q[j, j] - 2.0 * y[i] * y[j] * Q[i, j]
            if curv < _MIN_CURVATURE:
                curv = _MIN_CURVATURE
            cap_i = (C - alpha[i]) if y[i] > 0 else alpha[i]
            cap_j = alpha[j] if y[j] > 0 else (C - alpha[j])
            step = min(violation / curv, cap_i, cap_j)
            if step == cap_i:
                new_i = C if y[i] > 0 else 0.0
            else:
                new_i = min(max(alpha[i] + y[i] * step, 0.0), C)
            if step == cap_j:
                new_j = 0.0 if y[j] > 0 else C
            else:
                new_j = min(max(alpha[j] - y[j] * step, 0.0), C)
            if new_i == alpha[i] and new_j == alpha[j]:
                # no representable progress on the most violating pair
                break
            alpha[i] = new_i
            alpha[j] = new_j
            for k in (i, j):
                free[k] = 0.0 < alpha[k] < C
            stalled = 0

    grad = Q @ alpha - problem.linear
    _, _, violation = _violating_pair(alpha, grad, y, C)
    return DualSolution(
        alpha=alpha,
        objective=problem.objective(alpha),
        kkt_violation=max(float(violation), 0.0),
        active_set=np.flatnonzero(alpha > tol),
        iterations=it,
        converged=converged,
        grad=grad,
        objective_trace=trace,
    )


def bias_from_kkt(problem: DualProblem, solution: DualSolution, tol: float = 1e-6) -> float:
    """Bias that makes the stationarity conditions hold on unbounded support vectors.

    For every support vector with 0 < alpha_i < C the optimality conditions give
    f0 = -y_i * (Q alpha - linear)_i; those values are averaged.  If every
    support vector sits on the box bound, the midpoint of the feasible bias
    interval is used instead.
    """
    alpha = solution.alpha
    y = problem.y
    grad = solution.grad if solution.grad is not None else problem.Q @ alpha - problem.linear
    C = min(problem.C, HARD_MARGIN_C)
    vals = -y * grad
    unbounded = (alpha > tol) & (alpha < C - tol)
    if unbounded.any():
        return float(vals[unbounded].mean())
    score = -y * grad
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0.0))
    low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0.0))
    if up.any() and low.any():
        return float((np.max(score[up]) + np.min(score[low])) / 2.0)
    return 0.0


def train_svm(
    data: Dataset,
    kernel: KernelSpec,
    C: float | None = None,
    tol: float = 1e-6,
    max_iter: int | None = None,
) -> tuple[DiscriminantModel, DualSolution]:
    """Train a plain kernel SVM; the returned model has b = 0 and centers at the samples.

    ``C=None`` requests a hard margin (realized internally as C = 1e12).
    Raises InfeasibleProblemError when only one class is present and
    ConvergenceError when the solver stops without reaching its tolerance,
    which is how hard-margin training on non-separable data surfaces.
    """
    X, y = data.x, data.y.astype(np.float64)
    if np.all(y > 0) or np.all(y < 0):
        raise InfeasibleProblemError("training data contains a single class")
    K = k_matrix(kernel, X, X)
    problem = DualProblem(
        linear=np.ones(len(y)), Q=np.outer(y, y) * K, y=y, C=C if C is not None else np.inf
    )
    solution = solve_dual(problem, tol=tol, max_iter=max_iter)
    if not solution.converged:
        raise ConvergenceError(
            f"SVM dual did not reach tolerance {tol} "
            f"(violation {solution.kkt_violation:.3e} after {solution.iterations} iterations); "
            "the data may not be separable under a hard margin"
        )
    f0 = bias_from_kkt(problem, solution, tol)
    keep = solution.alpha > tol
    model = DiscriminantModel(
        kernel=kernel,
        centers=X[keep].copy(),
        a=(solution.alpha * y)[keep],
        b=np.zeros((int(keep.sum()), X.shape[1])),
        f0=f0,
        sv_index=np.flatnonzero(keep),
    )
    return model, solution
