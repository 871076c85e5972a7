"""The trained discriminant function and its derivatives.

A model is the expansion

    f(x) = sum_i { a_i k(c_i, x) + b_i . k_x(c_i, x) } + f0

over centers c_i (support points, possibly displaced from the training
samples).  The gradient follows from the same kernel derivatives:

    grad f(x) = sum_i { a_i k_x(x, c_i) + K_xy(x, c_i) b_i }.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .kernels import KernelSpec, eval_k, k_matrix, kx_matrix, kxy_matrix

_HESS_STEP = 1e-4

# probe points for the one-time kernel symmetry assertion
_PROBE_A = 0.312
_PROBE_B = -0.731


def _assert_kernel_symmetric(kernel: KernelSpec, m: int) -> None:
    u = np.full(m, _PROBE_A)
    v = np.linspace(_PROBE_B, 0.5, m)
    kuv = eval_k(kernel, u, v)
    kvu = eval_k(kernel, v, u)
    if abs(kuv - kvu) > 1e-12 * (1.0 + abs(kuv)):
        raise ValueError(f"kernel {kernel.family!r} is not symmetric: {kuv} != {kvu}")


@dataclass
class DiscriminantModel:
    """Kernel expansion of the decision function.

    Attributes
    ----------
    kernel : KernelSpec
    centers : ndarray (nc, m)
        Expansion points.
    a : ndarray (nc,)
        Function-value coefficients.
    b : ndarray (nc, m)
        Gradient-direction coefficients (zero for a plain SVM).
    f0 : float
        Bias.
    sv_index : ndarray (nc,)
        Index of each center in the training set it came from.
    """

    kernel: KernelSpec
    centers: np.ndarray
    a: np.ndarray
    b: np.ndarray
    f0: float
    sv_index: np.ndarray = field(default=None)

    def __post_init__(self):
        self.centers = np.atleast_2d(np.asarray(self.centers, dtype=np.float64))
        self.a = np.atleast_1d(np.asarray(self.a, dtype=np.float64))
        self.b = np.atleast_2d(np.asarray(self.b, dtype=np.float64))
        nc, m = self.centers.shape
        if m < 1:
            raise ValueError("centers must have at least one column")
        if self.a.shape != (nc,):
            raise ValueError(f"a has shape {self.a.shape}, expected ({nc},)")
        if self.b.size == 0:
            self.b = np.zeros((nc, m))
        if self.b.shape != (nc, m):
            raise ValueError(f"b has shape {self.b.shape}, expected ({nc}, {m})")
        self.f0 = float(self.f0)
        if self.sv_index is None:
            self.sv_index = np.arange(nc)
        self.sv_index = np.asarray(self.sv_index, dtype=np.int64)
        if self.sv_index.shape != (nc,):
            raise ValueError(f"sv_index has shape {self.sv_index.shape}, expected ({nc},)")
        _assert_kernel_symmetric(self.kernel, m)

    @property
    def m(self) -> int:
        return self.centers.shape[1]

    @property
    def n_centers(self) -> int:
        return self.centers.shape[0]

    # -- evaluation ---------------------------------------------------------

    def decision_values(self, X) -> np.ndarray:
        """f at each row of X, shape (N,)."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.m:
            raise ValueError(f"points have dimension {X.shape[1]}, model has {self.m}")
        if self.n_centers == 0:
            return np.full(X.shape[0], self.f0)
        out = self.a @ k_matrix(self.kernel, self.centers, X)
        if np.any(self.b):
            out = out + np.einsum("cm,cpm->p", self.b, kx_matrix(self.kernel, self.centers, X))
        return out + self.f0

    def eval_f(self, x) -> float:
        return float(self.decision_values(np.asarray(x, dtype=np.float64)[None, :])[0])

    def grad_values(self, X) -> np.ndarray:
        """grad f at each row of X, shape (N, m)."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.m:
            raise ValueError(f"points have dimension {X.shape[1]}, model has {self.m}")
        if self.n_centers == 0:
            return np.zeros_like(X)
        out = np.einsum("c,pcm->pm", self.a, kx_matrix(self.kernel, X, self.centers))
        if np.any(self.b):
            out = out + np.einsum(
                "pcmk,ck->pm", kxy_matrix(self.kernel, X, self.centers), self.b
            )
        return out

    def eval_grad_f(self, x) -> np.ndarray:
        return self.grad_values(np.asarray(x, dtype=np.float64)[None, :])[0]

    def eval_hess_f(self, x) -> np.ndarray:
        """Hessian of f by central differences of the analytic gradient."""
        x = np.asarray(x, dtype=np.float64)
        m = self.m
        h = _HESS_STEP * (1.0 + float(np.linalg.norm(x)))
        pts = np.repeat(x[None, :], 2 * m, axis=0)
        for j in range(m):
            pts[2 * j, j] += h
            pts[2 * j + 1, j] -= h
        grads = self.grad_values(pts)
        hess = np.empty((m, m))
        for j in range(m):
            hess[:, j] = (grads[2 * j] - grads[2 * j + 1]) / (2.0 * h)
        return hess

    # -- transforms ---------------------------------------------------------

    def scaled(self, c: float) -> "DiscriminantModel":
        """Model with (a, b, f0) multiplied by c; same zero set for c > 0."""
        return DiscriminantModel(
            kernel=self.kernel,
            centers=self.centers.copy(),
            a=self.a * c,
            b=self.b * c,
            f0=self.f0 * c,
            sv_index=self.sv_index.copy(),
        )

    def pruned(self) -> "DiscriminantModel":
        """Drop centers whose coefficients are exactly zero."""
        keep = (self.a != 0.0) | np.any(self.b != 0.0, axis=1)
        if keep.all():
            return self
        return DiscriminantModel(
            kernel=self.kernel,
            centers=self.centers[keep],
            a=self.a[keep],
            b=self.b[keep],
            f0=self.f0,
            sv_index=self.sv_index[keep],
        )

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel.to_dict(),
            "f0": self.f0,
            "centers": self.centers.tolist(),
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "sv_index": self.sv_index.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "DiscriminantModel":
        expected = {"kernel", "f0", "centers", "a", "b", "sv_index"}
        unknown = set(payload) - expected
        if unknown:
            raise ValueError(f"unknown model fields: {sorted(unknown)}")
        missing = expected - set(payload)
        if missing:
            raise ValueError(f"model payload missing fields: {sorted(missing)}")
        return cls(
            kernel=KernelSpec.from_dict(payload["kernel"]),
            centers=np.asarray(payload["centers"], dtype=np.float64),
            a=np.asarray(payload["a"], dtype=np.float64),
            b=np.asarray(payload["b"], dtype=np.float64),
            f0=float(payload["f0"]),
            sv_index=np.asarray(payload["sv_index"], dtype=np.int64),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "DiscriminantModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))
