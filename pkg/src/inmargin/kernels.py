"""Mercer kernels together with their first and mixed second derivatives.

Every kernel k(x, y) used by the discriminant machinery must supply

    k_x(x, y)  = dk/dx            (an m-vector),
    K_xy(x, y) = d^2 k / dx dy^T  (an m-by-m matrix),

because the trained classifier evaluates both the function and its input
gradient through these quantities.  The Gaussian family uses the convention

    k(x, y) = exp(-||x - y||^2 / (2 * sigma_sq)).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import UnsupportedKernelError

GAUSSIAN_RBF = "gaussian_rbf"
LINEAR = "linear"
POLYNOMIAL = "polynomial"
FAMILIES = (GAUSSIAN_RBF, LINEAR, POLYNOMIAL)

_SPEC_FIELDS = ("family", "sigma_sq", "degree", "offset")


@dataclass(frozen=True)
class KernelSpec:
    """Configuration of one kernel.

    Parameters
    ----------
    family : str
        One of ``"gaussian_rbf"``, ``"linear"``, ``"polynomial"``.
    sigma_sq : float
        Bandwidth sigma^2 of the Gaussian family; must be positive.
    degree : int
        Degree of the polynomial family; must be >= 1.
    offset : float
        Additive constant of the polynomial family; must be >= 0.
    """

    family: str = GAUSSIAN_RBF
    sigma_sq: float = 1.0
    degree: int = 2
    offset: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == GAUSSIAN_RBF and not self.sigma_sq > 0.0:
            raise ValueError("sigma_sq must be positive")
        if self.family == POLYNOMIAL:
            if int(self.degree) != self.degree or self.degree < 1:
                raise ValueError("degree must be an integer >= 1")
            if self.offset < 0.0:
                raise ValueError("offset must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "sigma_sq": float(self.sigma_sq),
            "degree": int(self.degree),
            "offset": float(self.offset),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "KernelSpec":
        unknown = set(payload) - set(_SPEC_FIELDS)
        if unknown:
            raise ValueError(f"unknown kernel fields: {sorted(unknown)}")
        if "family" not in payload:
            raise ValueError("kernel payload missing 'family'")
        return cls(
            family=payload["family"],
            sigma_sq=float(payload.get("sigma_sq", 1.0)),
            degree=int(payload.get("degree", 2)),
            offset=float(payload.get("offset", 0.0)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "KernelSpec":
        return cls.from_dict(json.loads(text))


def _as_points(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] < 1:
        raise ValueError(f"expected points of shape (n, m), got {X.shape}")
    return X


def _check_pair(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape or x.size < 1:
        raise ValueError(f"x and y must be 1-d vectors of equal length, got {x.shape} and {y.shape}")
    return x, y


# ---------------------------------------------------------------------------
# batched evaluation (the workhorses; einsum keeps summation order fixed so
# k_matrix(X, X) is bit-exactly symmetric)
# ---------------------------------------------------------------------------

def k_matrix(spec: KernelSpec, X, Y) -> np.ndarray:
    """Kernel values k(X_i, Y_j), shape (nx, ny)."""
    X, Y = _as_points(X), _as_points(Y)
    if X.shape[1] != Y.shape[1]:
        raise ValueError("point sets have different dimension")
    if spec.family == LINEAR:
        return np.einsum("im,jm->ij", X, Y)
    if spec.family == POLYNOMIAL:
        s = np.einsum("im,jm->ij", X, Y) + spec.offset
        return s ** spec.degree
    diff = X[:, None, :] - Y[None, :, :]
    d2 = np.einsum("ijm,ijm->ij", diff, diff)
    return np.exp(-d2 / (2.0 * spec.sigma_sq))


def kx_matrix(spec: KernelSpec, X, Y) -> np.ndarray:
    """First-argument gradients dk(X_i, Y_j)/dX_i, shape (nx, ny, m)."""
    X, Y = _as_points(X), _as_points(Y)
    if X.shape[1] != Y.shape[1]:
        raise ValueError("point sets have different dimension")
    nx, m = X.shape
    ny = Y.shape[0]
    if spec.family == LINEAR:
        return np.broadcast_to(Y[None, :, :], (nx, ny, m)).copy()
    if spec.family == POLYNOMIAL:
        d = spec.degree
        s = np.einsum("im,jm->ij", X, Y) + spec.offset
        return d * (s ** (d - 1))[:, :, None] * Y[None, :, :]
    diff = X[:, None, :] - Y[None, :, :]
    d2 = np.einsum("ijm,ijm->ij", diff, diff)
    k = np.exp(-d2 / (2.0 * spec.sigma_sq))
    return (-diff / spec.sigma_sq) * k[:, :, None]


def kxy_matrix(spec: KernelSpec, X, Y) -> np.ndarray:
    """Mixed second derivatives d^2 k(X_i, Y_j)/dX_i dY_j^T, shape (nx, ny, m, m)."""
    X, Y = _as_points(X), _as_points(Y)
    if X.shape[1] != Y.shape[1]:
        raise ValueError("point sets have different dimension")
    nx, m = X.shape
    ny = Y.shape[0]
    eye = np.eye(m)
    if spec.family == LINEAR:
        return np.broadcast_to(eye[None, None, :, :], (nx, ny, m, m)).copy()
    if spec.family == POLYNOMIAL:
        d = spec.degree
        s = np.einsum("im,jm->ij", X, Y) + spec.offset
        out = d * (s ** (d - 1))[:, :, None, None] * eye[None, None, :, :]
        if d >= 2:
            # rank-one part: d(d-1) s^(d-2) * y x^T (row index differentiates x)
            out = out + (d * (d - 1) * s ** (d - 2))[:, :, None, None] * (
                Y[None, :, :, None] * X[:, None, None, :]
            )
        return out
    diff = X[:, None, :] - Y[None, :, :]
    d2 = np.einsum("ijm,ijm->ij", diff, diff)
    k = np.exp(-d2 / (2.0 * spec.sigma_sq))
    out = k[:, :, None, None] * (eye[None, None, :, :] / spec.sigma_sq)
    out -= (k / spec.sigma_sq ** 2)[:, :, None, None] * (
        diff[:, :, :, None] * diff[:, :, None, :]
    )
    return out


# ---------------------------------------------------------------------------
# scalar API
# ---------------------------------------------------------------------------

def eval_k(spec: KernelSpec, x, y) -> float:
    x, y = _check_pair(x, y)
    return float(k_matrix(spec, x[None, :], y[None, :])[0, 0])


def eval_kx(spec: KernelSpec, x, y) -> np.ndarray:
    """dk(x, y)/dx as an m-vector."""
    x, y = _check_pair(x, y)
    return kx_matrix(spec, x[None, :], y[None, :])[0, 0]


def eval_kxy(spec: KernelSpec, x, y) -> np.ndarray:
    """d^2 k(x, y)/dx dy^T as an m-by-m matrix."""
    x, y = _check_pair(x, y)
    return kxy_matrix(spec, x[None, :], y[None, :])[0, 0]


# ---------------------------------------------------------------------------
# explicit feature maps (finite-dimensional kernels only)
# ---------------------------------------------------------------------------

def _poly_terms(m: int, degree: int):
    """Multi-indices alpha with |alpha| <= degree, highest total degree first."""
    terms = []
    for alpha in itertools.product(range(degree + 1), repeat=m):
        if sum(alpha) <= degree:
            terms.append(alpha)
    terms.sort(key=lambda a: (-sum(a), tuple(-v for v in a)))
    return terms


def _poly_coeffs(spec: KernelSpec, terms):
    d = spec.degree
    coefs = np.empty(len(terms))
    for idx, alpha in enumerate(terms):
        rest = d - sum(alpha)
        mult = math.factorial(d)
        for a in alpha:
            mult //= math.factorial(a)
        mult //= math.factorial(rest)
        if rest > 0 and spec.offset == 0.0:
            coefs[idx] = 0.0
        else:
            coefs[idx] = mult * spec.offset ** rest
    return coefs


def explicit_feature_map(spec: KernelSpec, x) -> np.ndarray:
    """Finite feature vector phi(x) with phi(x).phi(y) = k(x, y).

    Only the linear and polynomial families have a finite-dimensional map;
    requesting the Gaussian family raises UnsupportedKernelError.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("x must be a 1-d vector")
    if spec.family == LINEAR:
        return x.copy()
    if spec.family != POLYNOMIAL:
        raise UnsupportedKernelError(
            f"kernel family {spec.family!r} has no finite explicit feature map"
        )
    m = x.size
    terms = _poly_terms(m, spec.degree)
    coefs = _poly_coeffs(spec, terms)
    phi = np.empty(len(terms))
    for idx, alpha in enumerate(terms):
        v = math.sqrt(coefs[idx])
        for j, a in enumerate(alpha):
            if a:
                v *= x[j] ** a
        phi[idx] = v
    return phi


def feature_map_jacobian(spec: KernelSpec, x) -> np.ndarray:
    """Jacobian J of the explicit map, shape (m, D); row j is dphi/dx_j.

    Satisfies J(x) @ phi(y) = eval_kx(x, y) and J(x) @ J(y).T = eval_kxy(x, y).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("x must be a 1-d vector")
    m = x.size
    if spec.family == LINEAR:
        return np.eye(m)
    if spec.family != POLYNOMIAL:
        raise UnsupportedKernelError(
            f"kernel family {spec.family!r} has no finite explicit feature map"
        )
    terms = _poly_terms(m, spec.degree)
    coefs = _poly_coeffs(spec, terms)
    jac = np.zeros((m, len(terms)))
    for idx, alpha in enumerate(terms):
        root = math.sqrt(coefs[idx])
        if root == 0.0:
            continue
        for j in range(m):
            if alpha[j] == 0:
                continue
            v = root * alpha[j] * x[j] ** (alpha[j] - 1)
            for i, a in enumerate(alpha):
                if i != j and a:
                    v *= x[i] ** a
            jac[j, idx] = v
    return jac
