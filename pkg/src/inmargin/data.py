"""Datasets: container, synthetic mixture generator, CSV round-trip, scoring.

The mixture generator is fully pinned down (PCG64 stream, polar-method
normals, fixed draw order) so that a seed identifies a dataset across
machines and sessions, byte for byte once written to CSV.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DataFormatError


@dataclass
class Dataset:
    """Labeled samples: x is (n, m) float64, y is (n,) with entries +1/-1."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.x.ndim != 2:
            raise ValueError(f"x must be 2-D, got shape {self.x.shape}")
        if self.y.shape != (self.x.shape[0],):
            raise ValueError(
                f"y has shape {self.y.shape}, expected ({self.x.shape[0]},)"
            )
        if not np.isfinite(self.x).all():
            raise ValueError("x contains non-finite entries")
        if not np.all(np.isin(self.y, (-1.0, 1.0))):
            raise ValueError("labels must be +1 or -1")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.x[idx].copy(), self.y[idx].copy())


@dataclass(frozen=True)
class MixtureSpec:
    """Parameters of the two-class Gaussian-mixture generator."""

    seed: int
    n_train: int = 20
    n_test: int = 1000
    dim: int = 2
    components_per_class: int = 3
    sigma: float = 0.2
    center_low: float = 0.0
    center_high: float = 1.0

    def __post_init__(self):
        if self.n_train < 1 or self.n_test < 0:
            raise ValueError("need n_train >= 1 and n_test >= 0")
        if self.dim < 1 or self.components_per_class < 1:
            raise ValueError("dim and components_per_class must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not self.center_high > self.center_low:
            raise ValueError("need center_high > center_low")


def _polar_normals(rng: np.random.Generator, m: int) -> np.ndarray:
    """m standard normals via the polar method, two per accepted pair.

    Each pair consumes a variable number of uniforms from the stream; the
    procedure (not just the distribution) is part of the data format, so it
    stays an explicit loop rather than a call into rng.normal.
    """
    out = np.empty(m)
    filled = 0
    while filled < m:
        while True:
            u = 2.0 * rng.random() - 1.0
            v = 2.0 * rng.random() - 1.0
            s = u * u + v * v
            if 0.0 < s < 1.0:
                break
        f = np.sqrt(-2.0 * np.log(s) / s)
        out[filled] = u * f
        filled += 1
        if filled < m:
            out[filled] = v * f
            filled += 1
    return out


def _draw(rng, centers_pos, centers_neg, spec, count):
    xs = np.empty((count, spec.dim))
    ys = np.empty(count)
    for i in range(count):
        label = 1.0 if i % 2 == 0 else -1.0
        centers = centers_pos if label > 0 else centers_neg
        comp = int(rng.integers(spec.components_per_class))
        xs[i] = centers[comp] + spec.sigma * _polar_normals(rng, spec.dim)
        ys[i] = label
    return Dataset(xs, ys)


def gen_mixture(spec: MixtureSpec) -> tuple[Dataset, Dataset]:
    """Generate (train, test) from a seeded two-class Gaussian mixture.

    One PCG64 stream drives everything, in fixed order: positive-class
    component centers (uniform over [center_low, center_high)^dim),
    negative-class centers,
    then the train samples, then the test samples.  Labels alternate
    (+1 first); each sample picks a component uniformly and adds
    sigma-scaled polar-method noise.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    span = spec.center_high - spec.center_low
    centers_pos = spec.center_low + span * rng.random((spec.components_per_class, spec.dim))
    centers_neg = spec.center_low + span * rng.random((spec.components_per_class, spec.dim))
    train = _draw(rng, centers_pos, centers_neg, spec, spec.n_train)
    test = _draw(rng, centers_pos, centers_neg, spec, spec.n_test)
    return train, test


def evaluate(model, data: Dataset) -> float:
    """Classification error rate; f(x) = 0 counts as an error."""
    fvals = model.decision_values(data.x)
    return float(np.mean(data.y * fvals <= 0.0))


def write_csv(path, data: Dataset) -> None:
    """Write a dataset as CSV: header x1..xm,y; floats via repr, labels as ints.

    repr of a float64 is the shortest string that parses back to the same
    bits, which is what makes the round trip and the byte-identity of
    regenerated files work.
    """
    m = data.dim
    lines = ["".join(f"x{j + 1}," for j in range(m)) + "y"]
    for i in range(data.n):
        row = "".join(repr(float(v)) + "," for v in data.x[i])
        lines.append(row + str(int(data.y[i])))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path) -> Dataset:
    """Read a dataset written by write_csv (or anything matching its layout)."""
    with open(path) as fh:
        raw = fh.read().splitlines()
    rows = [ln for ln in raw if ln.strip()]
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    header = [c.strip() for c in rows[0].split(",")]
    if len(header) < 2 or header[-1] != "y":
        raise DataFormatError(f"{path}: header must end with a y column, got {rows[0]!r}")
    m = len(header) - 1
    xs = np.empty((len(rows) - 1, m))
    ys = np.empty(len(rows) - 1)
    for k, ln in enumerate(rows[1:], start=2):
        cells = ln.split(",")
        if len(cells) != m + 1:
            raise DataFormatError(f"{path}: line {k}: expected {m + 1} fields, got {len(cells)}")
        try:
            xs[k - 2] = [float(c) for c in cells[:m]]
        except ValueError:
            raise DataFormatError(f"{path}: line {k}: non-numeric coordinate") from None
        try:
            lab = float(cells[m])
        except ValueError:
            raise DataFormatError(f"{path}: line {k}: non-numeric label") from None
        if lab not in (-1.0, 1.0):
            raise DataFormatError(f"{path}: line {k}: label must be 1 or -1, got {cells[m]!r}")
        ys[k - 2] = lab
    if xs.shape[0] == 0:
        raise DataFormatError(f"{path}: no data rows")
    if not np.isfinite(xs).all():
        raise DataFormatError(f"{path}: non-finite coordinate value")
    return Dataset(xs, ys)
