"""K-fold cross-validation errors and empirical model classes."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from ._seeding import derive_seed
from .data import FoldAssignment, Sample, partition_folds
from .lasso import CoefficientVector, SolverOptions, empirical_error, fit_lasso, lasso_path


@dataclass(frozen=True)
class RoundResult:
    training_error: float
    prediction_error: float
    model: CoefficientVector


@dataclass(frozen=True)
class KcvResult:
    folds: FoldAssignment
    per_round: tuple[RoundResult, ...]
    lam: float

    @property
    def K(self) -> int:
        return self.folds.K

    @property
    def training_errors(self) -> np.ndarray:
        return np.array([r.training_error for r in self.per_round])

    @property
    def prediction_errors(self) -> np.ndarray:
        return np.array([r.prediction_error for r in self.per_round])

    @property
    def cv_error(self) -> float:
        return float(np.mean(self.prediction_errors))

    @property
    def avg_training_error(self) -> float:
        return float(np.mean(self.training_errors))

    @property
    def models(self) -> list[CoefficientVector]:
        return [r.model for r in self.per_round]

    @property
    def all_converged(self) -> bool:
        return all(r.model.converged for r in self.per_round)


@dataclass(frozen=True)
class EmpiricalModelClass:
    """Finite set of coefficient vectors standing in for a model class."""

    members: np.ndarray
    source: Literal["kcv", "bootstrap", "manual"]
    lam: float = 0.0
    unconverged: int = 0

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.members, dtype=np.float64))
        if m.size == 0 or m.shape[0] == 0:
            raise ValueError("an empirical class needs at least one member")
        object.__setattr__(self, "members", m)

    def __len__(self) -> int:
        return self.members.shape[0]

    @property
    def p(self) -> int:
        return self.members.shape[1]

    def scaled(self, alpha: float) -> "EmpiricalModelClass":
        return EmpiricalModelClass(alpha * self.members, self.source, self.lam, self.unconverged)

    def with_member(self, beta) -> "EmpiricalModelClass":
        return EmpiricalModelClass(np.vstack([self.members, beta]), self.source, self.lam,
                                   self.unconverged)

    def losses(self, sample: Sample) -> np.ndarray:
        """Per-point squared errors, one row per member."""
        r = sample.y[None, :] - self.members @ sample.X.T
        return r * r


def run_round(sample: Sample, folds: FoldAssignment, q: int, lam: float,
              options: SolverOptions | None = None) -> RoundResult:
    train = sample.subset(folds.complement(q))
    valid = sample.subset(folds.fold(q))
    model = fit_lasso(train, lam, options)
    return RoundResult(
        training_error=empirical_error(model.beta, train),
        prediction_error=empirical_error(model.beta, valid),
        model=model,
    )


def run_kcv(sample: Sample, K: int, lam: float, seed: int,
            options: SolverOptions | None = None,
            folds: FoldAssignment | None = None) -> KcvResult:
    """K-fold CV: round ``q`` trains on every fold but ``q`` and validates on ``q``."""
    if folds is None:
        folds = partition_folds(sample.n, K, seed)
    elif folds.n != sample.n or folds.K != K:
        raise ValueError("fold assignment does not match the sample and K")
    rounds = tuple(run_round(sample, folds, q, lam, options) for q in range(K))
    return KcvResult(folds=folds, per_round=rounds, lam=float(lam))


def kcv_path(sample: Sample, K: int, lambda_grid, seed: int,
             options: SolverOptions | None = None,
             folds: FoldAssignment | None = None) -> list[KcvResult]:
    """``run_kcv`` at every grid penalty on one fold assignment, warm-started per round."""
    if folds is None:
        folds = partition_folds(sample.n, K, seed)
    grid = list(lambda_grid)
    per_lambda: list[list[RoundResult]] = [[] for _ in grid]
    for q in range(K):
        train = sample.subset(folds.complement(q))
        valid = sample.subset(folds.fold(q))
        for i, model in enumerate(lasso_path(train, grid, options)):
            per_lambda[i].append(RoundResult(
                training_error=empirical_error(model.beta, train),
                prediction_error=empirical_error(model.beta, valid),
                model=model,
            ))
    return [KcvResult(folds=folds, per_round=tuple(r), lam=float(lam))
            for r, lam in zip(per_lambda, grid)]


def empirical_class_from_kcv(result: KcvResult) -> EmpiricalModelClass:
    return EmpiricalModelClass(
        np.vstack([m.beta for m in result.models]), source="kcv", lam=result.lam,
        unconverged=sum(not m.converged for m in result.models),
    )


def empirical_class_from_bootstrap(sample: Sample, lam: float, reps: int = 25, seed: int = 0,
                                   options: SolverOptions | None = None,
                                   resample: bool = True) -> EmpiricalModelClass:
    """Lasso fits on ``reps`` with-replacement resamples of size n.

    ``resample=False`` fits the full sample each time, mainly for testing.
    """
    if reps < 1:
        raise ValueError(f"reps must be at least 1, got {reps}")
    rng = np.random.default_rng(derive_seed(seed, "bootstrap"))
    members = []
    unconverged = 0
    for _ in range(reps):
        if resample:
            rows = rng.integers(0, sample.n, size=sample.n)
            fit = fit_lasso(sample.subset(rows), lam, options)
        else:
            fit = fit_lasso(sample, lam, options)
        members.append(fit.beta)
        unconverged += not fit.converged
    return EmpiricalModelClass(np.vstack(members), source="bootstrap", lam=float(lam),
                               unconverged=unconverged)
