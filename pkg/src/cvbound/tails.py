"""Plug-in estimates for the scalar inputs of the bound formulas.

The population error of a member is proxied by its full-sample empirical
error throughout.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, asdict
from typing import Literal, Optional

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from ._seeding import derive_seed
from .cv import EmpiricalModelClass, KcvResult
from .data import FoldAssignment, Sample

Regime = Literal["bounded", "subgaussian", "subexponential"]
REGIMES = ("bounded", "subgaussian", "subexponential")


class DegenerateClassWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TailParams:
    regime: Regime
    M: Optional[float] = None
    B: Optional[float] = None
    orlicz1: Optional[float] = None
    theta: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}; expected one of {REGIMES}")
        required = {"bounded": "M", "subgaussian": "B", "subexponential": "orlicz1"}[self.regime]
        value = getattr(self, required)
        if value is None:
            raise ValueError(f"regime {self.regime!r} requires {required}")
        if value < 0 or not math.isfinite(value):
            raise ValueError(f"{required} must be a finite nonnegative number, got {value}")
        if not self.theta > 0:
            raise ValueError(f"theta must be positive, got {self.theta}")
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RhoSamples:
    values: np.ndarray
    lam: float


def orlicz_norm(z, nu: float = 1.0, rtol: float = 1e-10) -> float:
    """Empirical Orlicz-psi_nu norm: inf{u > 0 : mean exp(|z|^nu / u^nu) < 2}."""
    a = np.abs(np.asarray(z, dtype=np.float64).ravel())
    if a.size == 0:
        raise ValueError("need at least one value")
    if nu < 1:
        raise ValueError(f"nu must be at least 1, got {nu}")
    top = a.max()
    if top == 0:
        return 0.0
    # Work with t = u / top so the bracket is scale free; log-space avoids overflow.
    r = (a / top) ** nu
    logn = math.log(a.size)
    log2 = math.log(2.0)

    def excess(t):
        return logsumexp(r / t ** nu) - logn - log2

    lo = (math.log(2.0 * a.size)) ** (-1.0 / nu)
    hi = log2 ** (-1.0 / nu)
    if excess(lo) <= 0:
        return lo * top
    # excess(hi) <= 0 in exact arithmetic, with equality when all |z| tie; rounding can flip it.
    if excess(hi) >= 0:
        return hi * top
    return brentq(excess, lo, hi, xtol=1e-300, rtol=rtol) * top


def orlicz_functional(z, u: float, nu: float = 1.0) -> float:
    """mean exp(|z|^nu / u^nu), the quantity the norm thresholds at 2."""
    a = np.abs(np.asarray(z, dtype=np.float64))
    return float(np.mean(np.exp((a / u) ** nu)))


def rho_samples(cls: EmpiricalModelClass, sample: Sample, folds: FoldAssignment) -> RhoSamples:
    """Per fold, the largest gap between fold-mean loss and full-sample loss."""
    losses = cls.losses(sample)
    full = losses.mean(axis=1)
    vals = np.array([
        np.abs(losses[:, folds.fold(q)].mean(axis=1) - full).max() for q in range(folds.K)
    ])
    return RhoSamples(vals, cls.lam)


def estimate_variance_proxy(cls: EmpiricalModelClass, sample: Sample) -> float:
    """B: square root of the largest per-member sample variance of the losses."""
    var = cls.losses(sample).var(axis=1, ddof=1).max()
    if var <= 0:
        warnings.warn("loss variance is zero for every member; B = 0",
                      DegenerateClassWarning, stacklevel=2)
        return 0.0
    return float(math.sqrt(var))


def estimate_theta(cls: EmpiricalModelClass, sample: Sample, K: int, resamples: int = 0,
                   seed: int = 0) -> float:
    """Ratio E[sup_b d_b^2] / sup_b E[d_b^2] with d_b = subset error - full error.

    ``resamples=0`` returns the working value 1.0.  Otherwise each resample
    is a row subset of size n/K drawn without replacement; the same draws
    feed numerator and denominator, so the ratio is never below 1.
    """
    if resamples < 0:
        raise ValueError(f"resamples must be nonnegative, got {resamples}")
    if resamples == 0:
        return 1.0
    losses = cls.losses(sample)
    full = losses.mean(axis=1)
    m = sample.n // K
    rng = np.random.default_rng(derive_seed(seed, "theta"))
    sq = np.empty((resamples, len(cls)))
    for s in range(resamples):
        rows = rng.choice(sample.n, size=m, replace=False)
        sq[s] = (losses[:, rows].mean(axis=1) - full) ** 2
    denom = sq.mean(axis=0).max()
    if denom <= 0:
        raise ValueError("degenerate class: subset errors never deviate from the full-sample error")
    return float(sq.max(axis=1).mean() / denom)


def round_deviations(cls: EmpiricalModelClass, sample: Sample, kcv: KcvResult) -> np.ndarray:
    """U_q = sup_b |validation error - training error| for every round."""
    losses = cls.losses(sample)
    out = np.empty(kcv.K)
    for q in range(kcv.K):
        v = losses[:, kcv.folds.fold(q)].mean(axis=1)
        t = losses[:, kcv.folds.complement(q)].mean(axis=1)
        out[q] = np.abs(v - t).max()
    return out


def lemma2_diagnostic(u_series: np.ndarray, rho: RhoSamples, theta: float) -> dict:
    """Check var(T_q) / ||rho||_psi1^2 <= 8 [(theta - 1)/theta + 1] on plug-in estimates.

    A violation only warns: both sides are noisy at small K.
    """
    gamma0 = float(np.var(u_series, ddof=1)) if len(u_series) > 1 else 0.0
    psi1 = orlicz_norm(rho.values, 1.0)
    limit = 8.0 * ((theta - 1.0) / theta + 1.0)
    ratio = gamma0 / psi1 ** 2 if psi1 > 0 else (0.0 if gamma0 == 0 else math.inf)
    ok = ratio <= limit
    if not ok:
        warnings.warn(f"variance ratio {ratio:.4g} exceeds {limit:.4g}", RuntimeWarning,
                      stacklevel=2)
    return {"gamma0": gamma0, "orlicz1_rho": psi1, "ratio": ratio, "limit": limit, "ok": bool(ok)}


def resolve_tail_params(regime: Regime, cls: EmpiricalModelClass, sample: Sample,
                        folds: FoldAssignment, *, M=None, B=None, orlicz1=None,
                        theta: float = 1.0, c: float = 1.0) -> TailParams:
    """Fill in whichever regime constant was not supplied from the data."""
    if regime == "subgaussian" and B is None:
        B = estimate_variance_proxy(cls, sample)
    if regime == "subexponential" and orlicz1 is None:
        orlicz1 = orlicz_norm(rho_samples(cls, sample, folds).values, 1.0)
    return TailParams(regime=regime, M=M, B=B, orlicz1=orlicz1, theta=theta, c=c)
