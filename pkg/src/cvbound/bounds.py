"""Round-wise and CV-error upper bounds for independent data."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .complexity import RcEstimate, one_round_rc
from .cv import EmpiricalModelClass, KcvResult
from .data import Sample
from .tails import TailParams, lemma2_diagnostic, rho_samples, round_deviations

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class AutocovSummary:
    gamma0: float
    V: float


@dataclass(frozen=True)
class BoundReport:
    """Upper bound ``avg_training_error + rc_term + varsigma`` and its confidence level."""

    lam: float
    upper_bound: float
    confidence: float
    kappa: float
    avg_training_error: float
    rc_term: float
    varsigma: float
    regime: str
    varpi: float
    params_echo: dict
    extras: dict = field(default_factory=dict)

    @property
    def components(self) -> dict:
        return {
            "avg_training_error": self.avg_training_error,
            "rc_term": self.rc_term,
            "varsigma": self.varsigma,
        }

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "lambda": self.lam,
            "upper_bound": self.upper_bound,
            "confidence": self.confidence,
            "kappa": self.kappa,
            "components": self.components,
            "regime": self.regime,
            "varpi": self.varpi,
            "params": self.params_echo,
            "extras": self.extras,
        }


def _check_varpi(varpi: float, closed_right: bool = False) -> None:
    ok = 0.0 < varpi <= 1.0 if closed_right else 0.0 < varpi < 1.0
    if not ok:
        interval = "(0, 1]" if closed_right else "(0, 1)"
        raise ValueError(f"varpi must lie in {interval}, got {varpi}")


def _log_root(varpi: float, c: float) -> float:
    """log((2/varpi)^(1/c))."""
    return math.log(2.0 / varpi) / c


def varsigma(regime: str, params: TailParams, n: int, K: int, varpi: float) -> float:
    """Tail term of the single-round bound at fold size n/K."""
    _check_varpi(varpi, closed_right=True)
    m = n / K
    if regime != params.regime:
        raise ValueError(f"regime {regime!r} does not match parameters for {params.regime!r}")
    if regime in ("bounded", "subgaussian"):
        scale = params.M if regime == "bounded" else params.B
        return 2.0 * scale * math.sqrt(params.theta * math.log(1.0 / varpi) / m)
    if regime == "subexponential":
        L = _log_root(varpi, params.c)
        if varpi < 2.0 * math.exp(-2.0 * params.c):
            return params.orlicz1 * L
        return params.orlicz1 * math.sqrt(2.0 * L)
    raise ValueError(f"unknown regime {regime!r}")


def round_bound(training_error: float, rc: RcEstimate | float, varsigma_value: float) -> float:
    if isinstance(rc, RcEstimate):
        rc = rc.value
    if min(training_error, rc, varsigma_value) < 0:
        raise ValueError("bound inputs must be nonnegative")
    return training_error + 2.0 * rc + varsigma_value


def theta_factor(theta: float) -> float:
    return (theta - 1.0) / theta + 1.0


def kappa(regime: str, theta: float, K: int, varpi: float, V_K: float, c: float = 1.0) -> float:
    """One minus the confidence level of the CV-error bound.

    Bounded losses are subgaussian, so ``bounded`` uses the subgaussian form.
    """
    _check_varpi(varpi)
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta}")
    if V_K < 0:
        raise ValueError(f"V_K must be nonnegative, got {V_K}")
    f = theta_factor(theta) * (1.0 + 2.0 * V_K)
    if regime in ("subgaussian", "bounded"):
        return f / (2.0 * K * math.log(1.0 / varpi))
    if regime == "subexponential":
        L = _log_root(varpi, c)
        if varpi >= 2.0 * math.exp(-2.0 * c):
            return 4.0 * f / (K * L)
        return 8.0 * f / (K * L * L)
    raise ValueError(f"unknown regime {regime!r}")


def dependent_chebyshev(gamma0: float, V: float, n: int, epsilon: float) -> float:
    """Lower bound 1 - gamma0 (1 + 2V) / (eps^2 n) on Pr(|mean - mu| <= eps).

    ``V`` is the lag-autocovariance sum normalised by ``gamma0``.  The value
    may be negative; callers clamp for display.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    return 1.0 - gamma0 / (epsilon * epsilon * n) * (1.0 + 2.0 * V)


def autocov_V(series, max_lag: int | None = None) -> AutocovSummary:
    """Sample variance and normalised absolute autocovariance sum of a series.

    Lags run from 1 to ``max_lag`` (default: all, length - 1).  A length-2
    series gives V = 0 since one pair cannot identify a lag covariance.
    """
    x = np.asarray(series, dtype=np.float64)
    K = x.shape[0]
    if K < 2:
        raise ValueError("need a series of length at least 2")
    d = x - x.mean()
    gamma0 = float(d @ d / K)
    if K == 2 or gamma0 == 0.0:
        return AutocovSummary(gamma0=gamma0, V=0.0)
    L = K - 1 if max_lag is None else min(max_lag, K - 1)
    if L < 1:
        return AutocovSummary(gamma0=gamma0, V=0.0)
    # Full autocovariance via FFT; O(K log K) matters for long simulated series.
    size = 1 << (2 * K - 1).bit_length()
    f = np.fft.rfft(d, size)
    acov = np.fft.irfft(f * np.conj(f), size)[: L + 1] / K
    return AutocovSummary(gamma0=gamma0, V=float(np.abs(acov[1:]).sum() / gamma0))


def cv_bound(kcv: KcvResult, cls: EmpiricalModelClass, sample: Sample, params: TailParams,
             varpi: float = 0.10, rc_draws: int = 2000, seed: int = 0,
             V_K: float | None = None, rc: RcEstimate | None = None) -> BoundReport:
    """CV-error upper bound with confidence (1 - kappa)^+.

    At K = 2 the two training sets are disjoint and V_K is 0.  For K > 2
    an explicit ``V_K`` wins; otherwise it is estimated from the de-meaned
    round deviations U_q.
    """
    _check_varpi(varpi)
    K = kcv.K
    if kcv.folds.n != sample.n:
        raise ValueError("KCV result was computed on a different sample size")
    if cls.p != sample.p:
        raise ValueError("class members and sample have different dimension")
    u = round_deviations(cls, sample, kcv)
    v_est = autocov_V(u).V
    if K == 2:
        v_used = 0.0
    else:
        v_used = v_est if V_K is None else float(V_K)
    if rc is None:
        rc = one_round_rc(cls, sample, K, rc_draws, seed)
    atr = kcv.avg_training_error
    rc_term = 2.0 * rc.value
    vs = varsigma(params.regime, params, sample.n, K, varpi)
    k = kappa(params.regime, params.theta, K, varpi, v_used, params.c)
    rho = rho_samples(cls, sample, kcv.folds)
    extras = {
        "cv_error": kcv.cv_error,
        "V_K": v_used,
        "V_K_estimate": v_est,
        "rc": rc.value,
        "rc_std_error": rc.std_error,
        "rc_draws": rc.draws,
        "K": K,
        "n": sample.n,
        "class_size": len(cls),
        "class_source": cls.source,
        "unconverged_fits": cls.unconverged,
        "rho": rho.values.tolist(),
        "lemma2": lemma2_diagnostic(u, rho, params.theta),
    }
    return BoundReport(
        lam=kcv.lam,
        upper_bound=atr + rc_term + vs,
        confidence=max(0.0, 1.0 - k),
        kappa=k,
        avg_training_error=atr,
        rc_term=rc_term,
        varsigma=vs,
        regime=params.regime,
        varpi=varpi,
        params_echo=params.to_dict(),
        extras=extras,
    )
