"""Independent-block bounds for stationary beta-mixing data with bounded losses."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bounds import BoundReport, autocov_V
from .complexity import RcEstimate, empirical_rademacher
from .cv import EmpiricalModelClass, KcvResult
from .data import Sample
from .tails import round_deviations


class MixingError(ValueError):
    """Raised when the requested confidence is not reachable under the mixing rate."""


@dataclass(frozen=True)
class BlockScheme:
    a: int
    mu: int
    kept_indices: tuple[np.ndarray, ...]

    @property
    def n_required(self) -> int:
        return 2 * self.a * self.mu

    def flat(self) -> np.ndarray:
        """All kept positions, 1-based."""
        return np.concatenate(self.kept_indices)


def build_blocks(n: int, a: int, mu: int) -> BlockScheme:
    """Odd-positioned blocks: run i covers positions 2(i-1)a+1 .. (2i-1)a (1-based)."""
    if a < 1 or mu < 1:
        raise ValueError(f"block length and count must be positive, got a={a}, mu={mu}")
    need = 2 * a * mu
    if n < need:
        raise ValueError(f"need n >= 2*a*mu = {need} points, got n={n}")
    runs = tuple(np.arange(2 * (i - 1) * a + 1, (2 * i - 1) * a + 1) for i in range(1, mu + 1))
    return BlockScheme(a=a, mu=mu, kept_indices=runs)


def geometric_beta(C: float, r: float) -> Callable[[int], float]:
    """beta_a = C * r**a."""
    if not C > 0:
        raise ValueError(f"C must be positive, got {C}")
    if not 0 < r < 1:
        raise ValueError(f"r must lie in (0, 1), got {r}")

    def beta(a: int) -> float:
        return C * r ** a

    beta.C, beta.r = C, r
    return beta


@dataclass(frozen=True)
class MixingParams:
    beta_fn: Callable[[int], float]
    M: float
    mu: int
    a_t: int
    a_s: int
    varpi: float

    def __post_init__(self):
        if not self.M > 0:
            raise ValueError(f"M must be positive, got {self.M}")
        if self.mu < 1 or self.a_t < 1 or self.a_s < 1:
            raise ValueError("mu, a_t and a_s must be positive")
        if not 0 < self.varpi <= 1:
            raise ValueError(f"varpi must lie in (0, 1], got {self.varpi}")
        small, large = sorted((self.a_t, self.a_s))
        if self.beta_fn(large) > self.beta_fn(small):
            raise ValueError("beta coefficients must be nonincreasing in the gap")

    @property
    def mixing_mass(self) -> float:
        """(mu - 1)(beta_{a_t} + beta_{a_s})."""
        return (self.mu - 1) * (self.beta_fn(self.a_t) + self.beta_fn(self.a_s))

    @property
    def varpi_prime(self) -> float:
        return self.varpi - self.mixing_mass

    def to_dict(self) -> dict:
        d = {"M": self.M, "mu": self.mu, "a_t": self.a_t, "a_s": self.a_s, "varpi": self.varpi,
             "beta_a_t": self.beta_fn(self.a_t), "beta_a_s": self.beta_fn(self.a_s)}
        if hasattr(self.beta_fn, "C"):
            d["beta_C"], d["beta_r"] = self.beta_fn.C, self.beta_fn.r
        return d


def yu_discrepancy(mu: int, M_tilde: float, beta_a: float) -> float:
    """Gap between block-sequence and independent-block expectations, (mu - 1) M beta_a."""
    return (mu - 1) * M_tilde * beta_a


def _checked_varpi_prime(params: MixingParams) -> float:
    mass = params.mixing_mass
    if mass >= 1:
        raise MixingError(f"(mu-1)(beta_a_t + beta_a_s) = {mass:.6g} must be below 1")
    vp = params.varpi_prime
    if vp <= 0:
        raise MixingError(
            f"mixing too strong for requested confidence: varpi={params.varpi} must exceed "
            f"(mu-1)(beta_a_t + beta_a_s) = {mass:.6g}"
        )
    return vp


def mixing_tail(M: float, mu: int, varpi_prime: float) -> float:
    return M * math.sqrt(math.log(4.0 / varpi_prime) / (2.0 * mu))


def mixing_round_bound(training_error: float, rc_on_S0: RcEstimate | float,
                       params: MixingParams, observed_losses=None) -> dict:
    """Single-round bound with the independent-block tail term."""
    vp = _checked_varpi_prime(params)
    if observed_losses is not None:
        top = float(np.max(observed_losses))
        if top > params.M:
            raise MixingError(f"observed loss {top:.6g} exceeds the declared bound M={params.M}")
    rc = rc_on_S0.value if isinstance(rc_on_S0, RcEstimate) else float(rc_on_S0)
    return {"bound": training_error + 2.0 * rc + mixing_tail(params.M, params.mu, vp),
            "varpi_prime": vp}


def mixing_window(mu: int, V_K: float, K: int) -> float:
    """Largest admissible varpi': 4 exp(-2 mu (1 + 2 V_K) / K)."""
    return 4.0 * math.exp(-2.0 * mu * (1.0 + 2.0 * V_K) / K)


def mixing_confidence(mu: int, V_K: float, K: int, varpi_prime: float) -> float:
    return 1.0 - 2.0 * mu * (1.0 + 2.0 * V_K) / (K * math.log(4.0 / varpi_prime))


def validation_blocks(kcv: KcvResult, q: int, a: int, mu: int) -> np.ndarray:
    """Sample row indices of the kept blocks inside round q's validation fold."""
    fold = kcv.folds.fold(q)
    scheme = build_blocks(fold.shape[0], a, mu)
    return fold[scheme.flat() - 1]


def mixing_cv_bound(kcv: KcvResult, cls: EmpiricalModelClass, sample: Sample,
                    params: MixingParams, V_K: float | None = None, rc_draws: int = 2000,
                    seed: int = 0) -> BoundReport:
    """CV-error bound for beta-mixing data, confidence 1 - 2mu(1+2V)/(K log(4/varpi')).

    The complexity term is the empirical Rademacher complexity on the kept
    validation blocks, averaged over rounds.
    """
    K = kcv.K
    vp = _checked_varpi_prime(params)
    losses = cls.losses(sample)
    top = float(losses.max())
    if top > params.M:
        raise MixingError(f"observed loss {top:.6g} exceeds the declared bound M={params.M}")
    u = round_deviations(cls, sample, kcv)
    v_est = autocov_V(u).V
    v_used = 0.0 if K == 2 else (v_est if V_K is None else float(V_K))
    upper = mixing_window(params.mu, v_used, K)
    if vp > upper:
        raise MixingError(
            f"varpi'={vp:.6g} outside the admissible window (0, {upper:.6g}] "
            f"= (0, 4 exp(-2 mu (1 + 2 V_K) / K)] with mu={params.mu}, V_K={v_used:.6g}, K={K}"
        )
    rcs = [empirical_rademacher(cls, sample.X[validation_blocks(kcv, q, params.a_s, params.mu)],
                                rc_draws, seed)
           for q in range(K)]
    rc = float(np.mean([r.value for r in rcs]))
    tail = mixing_tail(params.M, params.mu, vp)
    conf = mixing_confidence(params.mu, v_used, K, vp)
    atr = kcv.avg_training_error
    return BoundReport(
        lam=kcv.lam,
        upper_bound=atr + 2.0 * rc + tail,
        confidence=min(1.0, max(0.0, conf)),
        kappa=1.0 - conf,
        avg_training_error=atr,
        rc_term=2.0 * rc,
        varsigma=tail,
        regime="bounded-mixing",
        varpi=params.varpi,
        params_echo=params.to_dict(),
        extras={
            "cv_error": kcv.cv_error,
            "varpi_prime": vp,
            "window": [0.0, upper],
            "V_K": v_used,
            "V_K_estimate": v_est,
            "rc_per_round": [r.value for r in rcs],
            "K": K,
            "n": sample.n,
            "max_observed_loss": top,
        },
    )
