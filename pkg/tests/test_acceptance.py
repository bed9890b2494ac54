"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL`` line; the lines are also
collected in the terminal summary.  Simulation-backed criteria run at desk
scale (2,000 oracle sets, 30 repetitions).
"""
import itertools
import math
import os

import numpy as np
import pytest
from scipy.signal import lfilter

from cvbound.bounds import cv_bound, dependent_chebyshev, kappa
from cvbound.complexity import empirical_rademacher
from cvbound.cv import EmpiricalModelClass, empirical_class_from_kcv, run_kcv
from cvbound.data import DgpConfig, Sample, generate_dgp, partition_folds
from cvbound.experiments import SimulationConfig, run_simulation1, run_simulation2, select_lambda
from cvbound.lasso import fit_lasso, kkt_residual, lambda_max, lasso_objective
from cvbound.mixing import (MixingError, MixingParams, build_blocks, geometric_beta,
                            mixing_cv_bound, mixing_window)
from cvbound.tails import orlicz_norm, resolve_tail_params

pytestmark = pytest.mark.acceptance

JOBS = os.cpu_count() or 1


def test_01_kappa_subgaussian(criterion):
    k = kappa("subgaussian", theta=1.0, K=2, varpi=0.1, V_K=0.0)
    criterion("1", 0.1085 <= k <= 0.1087, f"kappa={k:.6f} (exact {1 / (4 * math.log(10)):.6f})")


@pytest.fixture(scope="module")
def table_n200():
    return run_simulation2(SimulationConfig(n=200), reps=30, seed_base=0, jobs=JOBS)


@pytest.fixture(scope="module")
def table_n400():
    return run_simulation2(SimulationConfig(n=400), reps=30, seed_base=0, jobs=JOBS)


def test_02a_true_support_retained(criterion, table_n200):
    m = table_n200
    ok = m.retained_cv >= 27 and m.retained_cub >= 27
    criterion("2a", ok, f"retained CV {m.retained_cv}/30, CUB {m.retained_cub}/30 (need >= 27)")


def test_02b_mean_selected_count(criterion, table_n200):
    m = table_n200
    ok = abs(m.avg_selected_cv - 9.01) <= 2.0 and abs(m.avg_selected_cub - 8.12) <= 2.0
    criterion("2b", ok, f"mean count CV {m.avg_selected_cv:.2f} (target 9.01+-2), "
                        f"CUB {m.avg_selected_cub:.2f} (target 8.12+-2)")


def test_02c_cub_not_denser_than_cv(criterion, table_n200):
    m = table_n200
    ok = m.avg_selected_cub <= m.avg_selected_cv + 0.25
    criterion("2c", ok, f"mean count CUB {m.avg_selected_cub:.2f} <= CV {m.avg_selected_cv:.2f} + 0.25")


def test_03_variance_of_selected_count(criterion, table_n400):
    m = table_n400
    ok = m.var_selected_cub <= m.var_selected_cv
    criterion("3", ok, f"var CUB {m.var_selected_cub:.3f} <= var CV {m.var_selected_cv:.3f}")


def test_04_bound_dominates_oracle(criterion):
    wins = 0
    for seed in range(20):
        c = run_simulation1(SimulationConfig(n=200, seed=seed))
        i = int(np.flatnonzero(c.lambda_grid == select_lambda(c.cub, c.lambda_grid))[0])
        wins += bool(c.cub[i] >= c.cat[i])
    criterion("4", wins >= 14, f"CUB >= CAT at lambda_CUB in {wins}/20 seeds (need >= 14)")


def test_05_gap_shrinks_with_n(criterion):
    gaps = []
    for n in (100, 200, 400):
        g = []
        for seed in range(10):
            c = run_simulation1(SimulationConfig(n=n, seed=seed))
            i = int(np.flatnonzero(np.isclose(c.lambda_grid, 0.2))[0])
            g.append(c.cub[i] - c.cat[i])
        gaps.append(float(np.mean(g)))
    ok = gaps[0] > gaps[1] > gaps[2]
    criterion("5", ok, "mean CUB-CAT at n/K=50,100,200: " + ", ".join(f"{x:.3f}" for x in gaps))


def test_06_coverage(criterion):
    covered = 0
    k = None
    for r in range(200):
        sample = generate_dgp(DgpConfig(n=200, seed=10_000 + r))
        kcv = run_kcv(sample, 2, 0.2, seed=r)
        cls = empirical_class_from_kcv(kcv)
        params = resolve_tail_params("subgaussian", cls, sample, kcv.folds)
        rep = cv_bound(kcv, cls, sample, params, varpi=0.1, seed=r)
        covered += kcv.cv_error <= rep.upper_bound
        k = rep.kappa
    frac = covered / 200
    need = (1 - k) - 0.05
    criterion("6", frac >= need, f"coverage {frac:.3f} >= {need:.3f}")


def _prox_grad(X, y, lam, iters=200_000, tol=1e-15):
    """FISTA with adaptive restart on (1/n)||y - Xb||^2 + lam ||b||_1."""
    n = X.shape[0]
    G = X.T @ X / n
    c = X.T @ y / n
    step = 1.0 / (2.0 * np.linalg.eigvalsh(G)[-1])
    b = np.zeros(X.shape[1])
    z, t = b.copy(), 1.0
    for _ in range(iters):
        g = 2.0 * (G @ z - c)
        u = z - step * g
        nb = np.sign(u) * np.maximum(np.abs(u) - step * lam, 0.0)
        if np.dot(z - nb, nb - b) > 0:
            t = 1.0
        nt = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
        z = nb + (t - 1.0) / nt * (nb - b)
        if np.max(np.abs(nb - b)) < tol:
            b = nb
            break
        b, t = nb, nt
    return b


def test_07_lasso_matches_proximal_gradient(criterion, rng):
    worst_obj, worst_kkt = 0.0, 0.0
    for _ in range(50):
        n, p = int(rng.integers(8, 40)), int(rng.integers(1, 7))
        X = rng.standard_normal((n, p))
        y = X @ rng.normal(0, 2, p) + rng.standard_normal(n)
        s = Sample(y, X)
        lam = float(rng.uniform(0.01, 1.0)) * lambda_max(s)
        fit = fit_lasso(s, lam)
        ref = _prox_grad(X, y, lam)
        worst_obj = max(worst_obj, abs(fit.objective - lasso_objective(s, ref, lam)))
        G, c = X.T @ X / n, X.T @ y / n
        worst_kkt = max(worst_kkt, kkt_residual(G, c, fit.beta, lam))
    ok = worst_obj <= 1e-8 and worst_kkt <= 1e-6
    criterion("7", ok, f"max |objective gap| {worst_obj:.2e}, max KKT residual {worst_kkt:.2e}")


def test_08_dependent_chebyshev_validity(criterion):
    phi, n, reps = 0.5, 50, 100_000
    rng = np.random.default_rng(8)
    gamma0 = 1.0 / (1.0 - phi * phi)
    # Stationary start, then x_t = phi x_{t-1} + e_t.
    e = rng.standard_normal((reps, n))
    e[:, 0] *= math.sqrt(gamma0)
    x = lfilter([1.0], [1.0, -phi], e, axis=1)
    dev = np.abs(x.mean(axis=1))
    V = sum(phi ** lag for lag in range(1, n))
    eps_grid = np.linspace(0.05, 1.0, 20)
    fails = [float(eps) for eps in eps_grid
             if np.mean(dev <= eps) < dependent_chebyshev(gamma0, V, n, float(eps))]
    worst = min(np.mean(dev <= eps) - dependent_chebyshev(gamma0, V, n, float(eps))
                for eps in eps_grid)
    criterion("8", not fails, f"20 eps values, min(empirical - bound) = {worst:.4f}, "
                              f"violations at {fails}")


def _exact_rc(members, X):
    m = X.shape[0]
    preds = X @ members.T
    total = math.fsum(
        np.abs(np.asarray(w) @ preds).max() * 2.0 / m
        for w in itertools.product((-1.0, 1.0), repeat=m)
    )
    return total / 2 ** m


def test_09_rademacher_enumeration(criterion, rng):
    worst = 0.0
    for i in range(20):
        m, p, size = int(rng.integers(2, 13)), int(rng.integers(1, 5)), int(rng.integers(1, 6))
        members = rng.standard_normal((size, p))
        X = rng.standard_normal((m, p))
        cls = EmpiricalModelClass(members, source="random")
        est = empirical_rademacher(cls, X, draws=2000, seed=i)
        z = abs(est.value - _exact_rc(members, X)) / max(est.std_error, 1e-300)
        worst = max(worst, z)
    criterion("9", worst <= 4.0, f"max |MC - exact| / SE over 20 classes = {worst:.2f}")


def test_10_block_index_algebra(criterion):
    bad = []
    for a in range(1, 6):
        for mu in range(1, 7):
            for extra in (0, 1, a):
                s = build_blocks(2 * a * mu + extra, a, mu)
                flat = s.flat()
                ok = len(s.kept_indices) == mu and len(np.unique(flat)) == flat.size == a * mu
                for i, run in enumerate(s.kept_indices, start=1):
                    expect = np.arange(2 * (i - 1) * a + 1, (2 * i - 1) * a + 1)
                    ok &= np.array_equal(run, expect)
                ok &= flat.max() <= 2 * a * mu
                if not ok:
                    bad.append((a, mu, extra))
    criterion("10", not bad, f"a in 1..5, mu in 1..6: mismatches {bad}")


def test_11_orlicz_closed_forms(criterion):
    worst = 0.0
    for nu in (1, 2):
        for c in (1e-3, 0.5, 1.0, 3.0, 250.0):
            for size in (1, 7, 500):
                z = c * np.where(np.arange(size) % 2, 1.0, -1.0)
                worst = max(worst, abs(orlicz_norm(z, nu) - c / math.log(2) ** (1 / nu)))
    criterion("11", worst <= 1e-6, f"max deviation from c/(ln 2)^(1/nu): {worst:.2e}")


def test_12_mixing_window(criterion):
    K, a = 4, 2
    sample = generate_dgp(DgpConfig(n=128, p=5, beta_nonzero=(1.0, 2.0), seed=12))
    folds = partition_folds(sample.n, K, seed=0, shuffle=False)
    kcv = run_kcv(sample, K, 0.2, seed=0, folds=folds)
    cls = empirical_class_from_kcv(kcv)
    beta = geometric_beta(1e-3, 0.5)
    wrong = []
    for mu in (3, 5, 8):
        for V in (0.0, 0.25, 0.5):
            w = mixing_window(mu, V, K)
            mass = (mu - 1) * 2 * beta(a)
            for target in (0.5 * w, w * (1 - 1e-9), w * (1 + 1e-9), min(1.0 - mass, 1.5 * w)):
                varpi = target + mass
                if varpi > 1:
                    continue
                params = MixingParams(beta, M=1e4, mu=mu, a_t=a, a_s=a, varpi=varpi)
                try:
                    mixing_cv_bound(kcv, cls, sample, params, V_K=V, rc_draws=50)
                    raised = False
                except MixingError:
                    raised = True
                if raised != (params.varpi_prime > w):
                    wrong.append((mu, V, target))
    criterion("12", not wrong, f"3x3 (mu, V) grid: misclassified {wrong}")
