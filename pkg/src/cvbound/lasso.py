"""Cyclic coordinate descent for the lasso and the squared-error loss.

The objective is ``(1/n) * ||y - X b||^2 + lam * ||b||_1``.  With the
Gram quantities ``G = X'X/n`` and ``c = X'y/n`` the coordinate update is

    b_j <- S(c_j - sum_{k != j} G_jk b_k, lam/2) / G_jj

where ``S`` is the soft-thresholding operator.  Exact zeros come out of
``S`` directly, so support counts need no threshold.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np

from .data import Sample


@dataclass(frozen=True)
class CoefficientVector:
    beta: np.ndarray
    lam: float
    objective: float
    iterations: int
    converged: bool
    kkt_residual: float
    objective_trace: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.beta)

    @property
    def n_selected(self) -> int:
        return int(np.count_nonzero(self.beta))

    @property
    def l1_norm(self) -> float:
        return float(np.abs(self.beta).sum())


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-8
    max_sweeps: int = 10_000
    kkt_tol: float = 1e-6
    warm_start: Optional[CoefficientVector] = None
    record_objective: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_sweeps < 1:
            raise ValueError(f"max_sweeps must be at least 1, got {self.max_sweeps}")


def soft_threshold(z, t):
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


@numba.njit(cache=True)
def _objective(G, c, yy, lam, beta):
    quad = 0.0
    p = beta.shape[0]
    for j in range(p):
        if beta[j] != 0.0:
            quad += beta[j] * (G[j] @ beta - 2.0 * c[j]) + lam * abs(beta[j])
    return yy + quad


@numba.njit(cache=True)
def _cd(G, c, yy, lam, beta, tol, max_sweeps, trace):
    # Gb is maintained incrementally: Gb = G @ beta.
    p = beta.shape[0]
    Gb = G @ beta
    half = 0.5 * lam
    sweeps = 0
    done = False
    while sweeps < max_sweeps and not done:
        dmax = 0.0
        for j in range(p):
            gjj = G[j, j]
            if gjj <= 0.0:
                continue
            old = beta[j]
            r = c[j] - Gb[j] + gjj * old
            if r > half:
                new = (r - half) / gjj
            elif r < -half:
                new = (r + half) / gjj
            else:
                new = 0.0
            d = new - old
            if d != 0.0:
                beta[j] = new
                for k in range(p):
                    Gb[k] += G[k, j] * d
                if abs(d) > dmax:
                    dmax = abs(d)
        if trace.shape[0] > 0:
            trace[sweeps] = _objective(G, c, yy, lam, beta)
        sweeps += 1
        done = dmax < tol
    return sweeps, done


def kkt_residual(G: np.ndarray, c: np.ndarray, beta: np.ndarray, lam: float) -> float:
    """Largest violation of the lasso subgradient conditions."""
    grad = 2.0 * (c - G @ beta)
    active = beta != 0
    viol = np.zeros_like(beta)
    viol[active] = np.abs(grad[active] - lam * np.sign(beta[active]))
    viol[~active] = np.maximum(np.abs(grad[~active]) - lam, 0.0)
    return float(viol.max(initial=0.0))


def lasso_objective(sample: Sample, beta: np.ndarray, lam: float) -> float:
    r = sample.y - sample.X @ beta
    return float(r @ r / sample.n + lam * np.abs(beta).sum())


def _gram(sample: Sample):
    n = sample.n
    return sample.X.T @ sample.X / n, sample.X.T @ sample.y / n, float(sample.y @ sample.y / n)


def _solve(G, c, yy, lam, beta0, options: SolverOptions) -> CoefficientVector:
    beta = np.array(beta0, dtype=np.float64, copy=True)
    trace = np.empty(options.max_sweeps if options.record_objective else 0)
    sweeps, done = _cd(G, c, yy, float(lam), beta, options.tol, options.max_sweeps, trace)
    kkt = kkt_residual(G, c, beta, lam)
    return CoefficientVector(
        beta=beta,
        lam=float(lam),
        objective=float(_objective(G, c, yy, float(lam), beta)),
        iterations=int(sweeps),
        converged=bool(done and kkt <= options.kkt_tol),
        kkt_residual=kkt,
        objective_trace=trace[:sweeps].copy() if options.record_objective else None,
    )


def fit_lasso(sample: Sample, lam: float, options: SolverOptions | None = None) -> CoefficientVector:
    """Minimise ``(1/n)||y - Xb||^2 + lam ||b||_1`` by cyclic coordinate descent.

    Non-convergence within ``options.max_sweeps`` is reported through
    ``converged=False`` rather than raised.
    """
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    options = options or SolverOptions()
    G, c, yy = _gram(sample)
    if options.warm_start is not None:
        beta0 = options.warm_start.beta
        if beta0.shape != (sample.p,):
            raise ValueError(f"warm start has length {beta0.shape[0]}, expected {sample.p}")
    else:
        beta0 = np.zeros(sample.p)
    return _solve(G, c, yy, lam, beta0, options)


def lambda_max(sample: Sample) -> float:
    """Smallest penalty for which the zero vector solves the problem."""
    return float(2.0 * np.abs(sample.X.T @ sample.y).max() / sample.n)


def lasso_path(sample: Sample, lambda_grid, options: SolverOptions | None = None) -> list[CoefficientVector]:
    """Solutions along an ascending grid, warm-started from large to small penalty.

    The returned list follows the order of ``lambda_grid``.
    """
    grid = np.asarray(lambda_grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("lambda grid must be a nonempty vector")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("lambda grid must be strictly increasing")
    if grid[0] < 0:
        raise ValueError("lambda grid must be nonnegative")
    options = options or SolverOptions()
    G, c, yy = _gram(sample)
    beta = np.zeros(sample.p) if options.warm_start is None else options.warm_start.beta
    out: list[CoefficientVector] = [None] * grid.size
    for i in range(grid.size - 1, -1, -1):
        fit = _solve(G, c, yy, grid[i], beta, options)
        out[i] = fit
        beta = fit.beta
    return out


def loss_per_point(beta: np.ndarray, sample: Sample) -> np.ndarray:
    """Squared error ``(y_i - x_i'beta)^2`` for every row."""
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (sample.p,):
        raise ValueError(f"beta has shape {beta.shape}, expected ({sample.p},)")
    r = sample.y - sample.X @ beta
    return r * r


def empirical_error(beta: np.ndarray, sample: Sample) -> float:
    return float(loss_per_point(beta, sample).mean())
