"""Estimator wrappers with the fit/predict interface.

These adapt the functional training entry points to the usual estimator
conventions: constructor stores hyperparameters untouched, fit validates and
learns, predict/decision_function consume the fitted model.  Labels may be
any two values; internally the larger class (by sort order) plays +1.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import Dataset
from .kernels import KernelSpec
from .metric import resolve_metric
from .qp import train_svm
from .simplified import train_simplified
from .trainer import TrainConfig, train_input_margin


class _KernelClassifierBase(BaseEstimator, ClassifierMixin):
    """Shared plumbing: label mapping, kernel assembly, prediction."""

    def _kernel_spec(self) -> KernelSpec:
        return KernelSpec(
            family=self.kernel,
            sigma_sq=self.sigma_sq,
            degree=self.degree,
            offset=self.offset,
        )

    def _dataset(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        classes = np.unique(y)
        if classes.shape[0] != 2:
            raise ValueError(f"need exactly 2 classes, got {classes.shape[0]}")
        self.classes_ = classes
        self.n_features_in_ = X.shape[1]
        signed = np.where(y == classes[1], 1.0, -1.0)
        return Dataset(X, signed)

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        return self.model_.decision_values(X)

    def predict(self, X) -> np.ndarray:
        scores = self.decision_function(X)
        return self.classes_[(scores > 0.0).astype(int)]


class KernelSVC(_KernelClassifierBase):
    """Plain kernel SVM (the initialization everything else starts from)."""

    def __init__(self, kernel="gaussian_rbf", sigma_sq=1.0, degree=2, offset=0.0,
                 C=None, qp_tol=1e-6):
        self.kernel = kernel
        self.sigma_sq = sigma_sq
        self.degree = degree
        self.offset = offset
        self.C = C
        self.qp_tol = qp_tol

    def fit(self, X, y):
        data = self._dataset(X, y)
        self.model_, self.dual_ = train_svm(
            data, self._kernel_spec(), C=self.C, tol=self.qp_tol
        )
        return self


class InputMarginSVC(_KernelClassifierBase):
    """Kernel classifier trained to maximize the margin in the input space.

    ``metric`` accepts None/"euclidean" or an (n, m, m) stack of SPD matrices,
    one per training sample.  After fit, ``margin_`` holds the estimated
    input-space margin and ``trace_`` the per-step record.
    """

    def __init__(self, kernel="gaussian_rbf", sigma_sq=1.0, degree=2, offset=0.0,
                 C=None, outer_steps=5, proj_iters=10, safeguard=False,
                 metric=None, tol_f=1e-8, qp_tol=1e-6, projection_ridge=1e-8):
        self.kernel = kernel
        self.sigma_sq = sigma_sq
        self.degree = degree
        self.offset = offset
        self.C = C
        self.outer_steps = outer_steps
        self.proj_iters = proj_iters
        self.safeguard = safeguard
        self.metric = metric
        self.tol_f = tol_f
        self.qp_tol = qp_tol
        self.projection_ridge = projection_ridge

    def _config(self) -> TrainConfig:
        return TrainConfig(
            outer_steps=self.outer_steps,
            proj_iters=self.proj_iters,
            C=self.C,
            safeguard=self.safeguard,
            tol_f=self.tol_f,
            qp_tol=self.qp_tol,
            projection_ridge=self.projection_ridge,
        )

    def fit(self, X, y):
        data = self._dataset(X, y)
        metric = resolve_metric(self.metric, data.n, data.dim)
        self.model_, self.trace_ = train_input_margin(
            data, self._kernel_spec(), metric, self._config()
        )
        self.margin_ = self.trace_.best_margin
        return self


class SimplifiedInputMarginSVC(InputMarginSVC):
    """Input-margin training by kernel rescaling instead of the full dual."""

    def fit(self, X, y):
        data = self._dataset(X, y)
        metric = resolve_metric(self.metric, data.n, data.dim)
        self.model_, self.trace_ = train_simplified(
            data, self._kernel_spec(), metric, self._config()
        )
        self.margin_ = self.trace_.best_margin
        return self
