"""Monte Carlo empirical Rademacher complexity of a finite linear class.

The value is conditional on the supplied rows; no outer expectation over
the design is taken.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._seeding import derive_seed
from .cv import EmpiricalModelClass
from .data import Sample


@dataclass(frozen=True)
class RcEstimate:
    value: float
    draws: int
    std_error: float
    subset_size: int


def _sup_abs_correlations(predictions: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """``max_b |(2/m) sum_i w_i b(x_i)|`` for every sign vector (row of ``signs``)."""
    m = predictions.shape[1]
    return np.abs(signs @ predictions.T).max(axis=1) * (2.0 / m)


def rademacher_signs(draws: int, m: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(derive_seed(seed, "rademacher", m))
    return rng.integers(0, 2, size=(draws, m), dtype=np.int8).astype(np.float64) * 2.0 - 1.0


def empirical_rademacher(cls: EmpiricalModelClass, X_rows: np.ndarray, draws: int = 2000,
                         seed: int = 0, batch: int = 1000) -> RcEstimate:
    """Estimate E_w[ sup_b |(2/m) sum_i w_i x_i'b| ] with ``draws`` sign vectors.

    Sign vectors depend only on ``(seed, m)``, so two classes evaluated
    on the same rows with the same seed share their draws.
    """
    X_rows = np.atleast_2d(np.asarray(X_rows, dtype=np.float64))
    m = X_rows.shape[0]
    if len(cls) == 0:
        raise ValueError("empty class")
    if draws < 1:
        raise ValueError(f"draws must be at least 1, got {draws}")
    if m < 1:
        raise ValueError("need at least one row")
    if X_rows.shape[1] != cls.p:
        raise ValueError(f"rows have {X_rows.shape[1]} columns, class members have {cls.p}")
    predictions = cls.members @ X_rows.T
    signs = rademacher_signs(draws, m, seed)
    vals = np.concatenate([
        _sup_abs_correlations(predictions, signs[i:i + batch])
        for i in range(0, draws, batch)
    ])
    mean = math.fsum(vals) / draws
    se = float(np.std(vals, ddof=1) / math.sqrt(draws)) if draws > 1 else 0.0
    return RcEstimate(value=mean, draws=draws, std_error=se, subset_size=m)


def one_round_rc(cls: EmpiricalModelClass, sample: Sample, K: int, draws: int = 2000,
                 seed: int = 0) -> RcEstimate:
    """Half the complexity at validation size n/K plus half at training size n - n/K.

    The two row subsets are disjoint and drawn without replacement.
    """
    if sample.n % K != 0:
        raise ValueError(f"n={sample.n} is not divisible by K={K}")
    n_s = sample.n // K
    n_t = sample.n - n_s
    rng = np.random.default_rng(derive_seed(seed, "one-round-rows"))
    perm = rng.permutation(sample.n)
    rc_s = empirical_rademacher(cls, sample.X[perm[:n_s]], draws, derive_seed(seed, "rc-s"))
    rc_t = empirical_rademacher(cls, sample.X[perm[n_s:n_s + n_t]], draws, derive_seed(seed, "rc-t"))
    return RcEstimate(
        value=0.5 * rc_s.value + 0.5 * rc_t.value,
        draws=draws,
        std_error=0.5 * math.hypot(rc_s.std_error, rc_t.std_error),
        subset_size=n_s,
    )
