"""Samples, the equicorrelated Gaussian DGP, fold partitioning and CSV ingestion."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._seeding import derive_seed


class DataError(ValueError):
    """Raised when an input file or array cannot be turned into a valid sample."""


@dataclass(frozen=True)
class Sample:
    """Response vector ``y`` and design matrix ``X`` with a provenance tag."""

    y: np.ndarray
    X: np.ndarray
    source: str = "array"

    def __post_init__(self):
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        X = np.ascontiguousarray(self.X, dtype=np.float64)
        if y.ndim != 1:
            raise DataError(f"y must be one-dimensional, got shape {y.shape}")
        if X.ndim != 2:
            raise DataError(f"X must be two-dimensional, got shape {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise DataError(f"y has {y.shape[0]} rows but X has {X.shape[0]}")
        if y.shape[0] < 2:
            raise DataError(f"a sample needs at least 2 rows, got {y.shape[0]}")
        if not (np.isfinite(y).all() and np.isfinite(X).all()):
            raise DataError("sample contains non-finite entries")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def subset(self, rows) -> "Sample":
        rows = np.asarray(rows)
        return Sample(self.y[rows], self.X[rows], source=self.source)


@dataclass(frozen=True)
class DgpConfig:
    n: int
    p: int = 100
    beta_nonzero: tuple[float, ...] = (3.0, 4.0, 5.0, 6.0, 7.0)
    correlation: float = 0.5
    noise_sd: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "beta_nonzero", tuple(float(b) for b in self.beta_nonzero))
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if len(self.beta_nonzero) > self.p:
            raise ValueError(
                f"{len(self.beta_nonzero)} nonzero coefficients do not fit in p={self.p}"
            )
        if not 0.0 <= self.correlation < 1.0:
            raise ValueError(f"correlation must lie in [0, 1), got {self.correlation}")
        if self.noise_sd < 0:
            raise ValueError(f"noise_sd must be nonnegative, got {self.noise_sd}")

    @property
    def beta(self) -> np.ndarray:
        """Full population coefficient vector (signal first, zeros after)."""
        b = np.zeros(self.p)
        b[: len(self.beta_nonzero)] = self.beta_nonzero
        return b

    @property
    def support(self) -> np.ndarray:
        return np.arange(len(self.beta_nonzero))


def draw_design(rng: np.random.Generator, n: int, p: int, correlation: float) -> np.ndarray:
    """Equicorrelated unit-variance Gaussian columns via one shared factor."""
    shared = rng.standard_normal((n, 1))
    own = rng.standard_normal((n, p))
    return math.sqrt(correlation) * shared + math.sqrt(1.0 - correlation) * own


def generate_dgp(config: DgpConfig) -> Sample:
    """Draw ``config.n`` points from the Gaussian linear model.

    Columns of ``X`` have unit variance and pairwise covariance
    ``config.correlation``; ``y = X[:, :s] @ beta_nonzero + e`` with
    ``e ~ N(0, noise_sd**2)`` independent of ``X``.
    """
    rng = np.random.default_rng(derive_seed(config.seed, "dgp"))
    X = draw_design(rng, config.n, config.p, config.correlation)
    s = len(config.beta_nonzero)
    e = config.noise_sd * rng.standard_normal(config.n)
    y = X[:, :s] @ np.asarray(config.beta_nonzero) + e
    return Sample(y, X, source=f"dgp(seed={config.seed})")


@dataclass(frozen=True)
class FoldAssignment:
    """Fold label (1..K) for every observation."""

    assignment: np.ndarray
    K: int
    _index: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64)
        if self.K < 2:
            raise ValueError(f"K must be at least 2, got {self.K}")
        counts = np.bincount(a, minlength=self.K + 1)
        if a.min(initial=1) < 1 or a.max(initial=1) > self.K or counts[0] != 0:
            raise ValueError("fold labels must lie in 1..K")
        if len(set(counts[1:].tolist())) != 1:
            raise ValueError(f"folds must have equal sizes, got {counts[1:].tolist()}")
        object.__setattr__(self, "assignment", a)
        object.__setattr__(
            self, "_index", tuple(np.flatnonzero(a == q + 1) for q in range(self.K))
        )

    @property
    def n(self) -> int:
        return self.assignment.shape[0]

    @property
    def fold_size(self) -> int:
        return self.n // self.K

    def fold(self, q: int) -> np.ndarray:
        """Row indices of fold ``q`` (0-based round index), ascending."""
        return self._index[q]

    def complement(self, q: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != q + 1)


def partition_folds(n: int, K: int, seed: int, shuffle: bool = True) -> FoldAssignment:
    """Uniformly random partition of ``n`` rows into ``K`` equal folds.

    With ``shuffle=False`` the folds are contiguous index runs, which keeps
    time order inside each fold for dependent data.
    """
    if K < 2:
        raise ValueError(f"K must be at least 2, got {K}")
    if n % K != 0:
        raise ValueError(f"n={n} is not divisible by K={K}; folds must have equal size n/K")
    labels = np.repeat(np.arange(1, K + 1), n // K)
    if shuffle:
        rng = np.random.default_rng(derive_seed(seed, "folds"))
        labels = rng.permutation(labels)
    return FoldAssignment(labels, K)


def load_sample(path, header: bool = False) -> Sample:
    """Read a CSV with ``y`` in column 0 and the design in the remaining columns."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if header and rows:
        rows = rows[1:]
    if not rows:
        raise DataError(f"{path}: no rows")
    width = len(rows[0])
    if width < 2:
        raise DataError(f"{path}: need a response column and at least one regressor")
    values = np.empty((len(rows), width))
    first_line = 2 if header else 1
    for i, row in enumerate(rows):
        line = i + first_line
        if len(row) != width:
            raise DataError(f"{path}: line {line} has {len(row)} columns, expected {width}")
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: line {line}, column {j + 1}: non-numeric cell {cell.strip()!r}"
                ) from None
            if not math.isfinite(v):
                raise DataError(
                    f"{path}: line {line}, column {j + 1}: non-finite cell {cell.strip()!r}"
                )
            values[i, j] = v
    if values.shape[0] < 2:
        raise DataError(f"{path}: need at least 2 rows, got {values.shape[0]}")
    return Sample(values[:, 0], values[:, 1:], source=str(path))


def save_sample(sample: Sample, path, header: bool = False) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(["y"] + [f"x{j + 1}" for j in range(sample.p)])
        for yi, xi in zip(sample.y, sample.X):
            w.writerow([repr(float(yi))] + [repr(float(v)) for v in xi])


def center(sample: Sample, scale: bool = False) -> Sample:
    """Remove column means (and optionally scale columns to unit variance)."""
    y = sample.y - sample.y.mean()
    X = sample.X - sample.X.mean(axis=0)
    if scale:
        sd = X.std(axis=0)
        sd[sd == 0] = 1.0
        X = X / sd
    return Sample(y, X, source=sample.source)
