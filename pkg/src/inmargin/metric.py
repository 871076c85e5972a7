"""Per-sample quadratic metrics on the input space.

Distances around sample i are measured as ||v||^2_{G_i} = v^T G_i v with G_i
symmetric positive definite.  The Euclidean field (G_i = I for every i) is the
default and is represented without materializing any matrices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataFormatError, InvalidMetricError

EUCLIDEAN = "euclidean"
PER_POINT = "per_point"

_SYM_TOL = 1e-10


def _check_spd(M: np.ndarray, index: int) -> None:
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidMetricError(f"metric {index} is not square: shape {M.shape}")
    scale = np.abs(M).max()
    if not np.isfinite(M).all():
        raise InvalidMetricError(f"metric {index} contains non-finite entries")
    if np.abs(M - M.T).max() > _SYM_TOL * max(1.0, scale):
        raise InvalidMetricError(f"metric {index} is not symmetric")
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise InvalidMetricError(f"metric {index} is not positive definite") from None


def quad_norm_sq(v, M) -> float:
    """v^T M v for one SPD matrix M; raises InvalidMetricError if M is not SPD."""
    v = np.asarray(v, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    if v.ndim != 1 or M.shape != (v.size, v.size):
        raise ValueError(f"shape mismatch: v {v.shape}, M {M.shape}")
    _check_spd(M, 0)
    return float(v @ M @ v)


@dataclass
class MetricField:
    """A metric per training sample: Euclidean everywhere, or one SPD matrix each."""

    kind: str = EUCLIDEAN
    matrices: np.ndarray | None = None       # (n, m, m)
    inverses: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in (EUCLIDEAN, PER_POINT):
            raise InvalidMetricError(f"unknown metric kind {self.kind!r}")
        if self.kind == PER_POINT:
            if self.matrices is None:
                raise InvalidMetricError("per-point metric requires matrices")
            self.matrices = np.asarray(self.matrices, dtype=np.float64)
            if self.matrices.ndim != 3 or self.matrices.shape[1] != self.matrices.shape[2]:
                raise InvalidMetricError(
                    f"expected matrices of shape (n, m, m), got {self.matrices.shape}"
                )

    @classmethod
    def euclidean(cls) -> "MetricField":
        return cls(kind=EUCLIDEAN)

    @classmethod
    def from_matrices(cls, matrices) -> "MetricField":
        return cls(kind=PER_POINT, matrices=np.asarray(matrices, dtype=np.float64))

    @classmethod
    def from_json_file(cls, path) -> "MetricField":
        """Load a JSON file holding a list of n row-major m-by-m matrices."""
        with open(path, "r", encoding="utf-8") as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"metric file {path}: {exc}") from None
        if not isinstance(payload, list) or not payload:
            raise DataFormatError(f"metric file {path}: expected a nonempty list of matrices")
        try:
            matrices = np.asarray(payload, dtype=np.float64)
        except (TypeError, ValueError):
            raise DataFormatError(f"metric file {path}: matrices are ragged or non-numeric") from None
        if matrices.ndim != 3:
            raise DataFormatError(
                f"metric file {path}: expected shape (n, m, m), got {matrices.shape}"
            )
        return cls.from_matrices(matrices)

    def validated(self, n: int, m: int) -> "MetricField":
        """Check shapes and definiteness, caching inverses; fail on the first bad matrix."""
        if self.kind == EUCLIDEAN:
            return self
        if self.matrices.shape != (n, m, m):
            raise InvalidMetricError(
                f"metric field has shape {self.matrices.shape}, expected ({n}, {m}, {m})"
            )
        for i in range(n):
            _check_spd(self.matrices[i], i)
        if self.inverses is None:
            self.inverses = np.linalg.inv(self.matrices)
        return self

    # -- bulk operations over per-row vectors ------------------------------

    def _inv(self) -> np.ndarray:
        if self.inverses is None:
            self.inverses = np.linalg.inv(self.matrices)
        return self.inverses

    def matrix(self, i: int, m: int) -> np.ndarray:
        if self.kind == EUCLIDEAN:
            return np.eye(m)
        return self.matrices[i]

    def inv_matrix(self, i: int, m: int) -> np.ndarray:
        if self.kind == EUCLIDEAN:
            return np.eye(m)
        return self._inv()[i]

    def apply_inv(self, V: np.ndarray) -> np.ndarray:
        """Rows G_i^{-1} v_i for a stack of row vectors V (n, m)."""
        if self.kind == EUCLIDEAN:
            return V
        return np.einsum("imk,ik->im", self._inv(), V)

    def qnorm2_inv(self, V: np.ndarray) -> np.ndarray:
        """Rows v_i^T G_i^{-1} v_i."""
        if self.kind == EUCLIDEAN:
            return np.einsum("im,im->i", V, V)
        return np.einsum("im,imk,ik->i", V, self._inv(), V)

    def qnorm2(self, V: np.ndarray) -> np.ndarray:
        """Rows v_i^T G_i v_i."""
        if self.kind == EUCLIDEAN:
            return np.einsum("im,im->i", V, V)
        return np.einsum("im,imk,ik->i", V, self.matrices, V)


def resolve_metric(metric, n: int, m: int) -> MetricField:
    """Accept None, a MetricField, or an (n, m, m) array; validate and return a field."""
    if metric is None:
        return MetricField.euclidean()
    if isinstance(metric, MetricField):
        return metric.validated(n, m)
    if isinstance(metric, str):
        if metric == EUCLIDEAN:
            return MetricField.euclidean()
        raise InvalidMetricError(f"unknown metric name {metric!r}")
    return MetricField.from_matrices(metric).validated(n, m)
