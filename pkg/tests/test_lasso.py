import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cvbound.data import Sample
from cvbound.lasso import (SolverOptions, empirical_error, fit_lasso, kkt_residual, lambda_max,
                           lasso_objective, lasso_path, loss_per_point, soft_threshold)


def _sample(rng, n=30, p=5):
    X = rng.standard_normal((n, p))
    y = X @ rng.normal(0, 2, p) + rng.standard_normal(n)
    return Sample(y, X)


def test_soft_threshold():
    np.testing.assert_array_equal(soft_threshold(np.array([-3.0, -0.5, 0.0, 0.5, 3.0]), 1.0),
                                  [-2.0, 0.0, 0.0, 0.0, 2.0])


def test_single_regressor_closed_form():
    # x'x/n = 1, x'y/n = 1: beta = S(1, lam/2) = 0.5 at lam = 1.
    X = np.array([[1.0], [-1.0], [1.0], [-1.0]])
    y = np.array([1.0, -1.0, 1.0, -1.0])
    fit = fit_lasso(Sample(y, X), 1.0)
    assert fit.beta[0] == pytest.approx(0.5, abs=1e-12)
    assert fit.converged


def test_zero_solution_at_lambda_max(rng):
    s = _sample(rng)
    lm = lambda_max(s)
    assert fit_lasso(s, lm).n_selected == 0
    assert fit_lasso(s, 1.5 * lm).n_selected == 0
    assert fit_lasso(s, 0.99 * lm).n_selected >= 1


def test_lambda_zero_is_least_squares(rng):
    s = _sample(rng, n=40, p=4)
    ols = np.linalg.lstsq(s.X, s.y, rcond=None)[0]
    np.testing.assert_allclose(fit_lasso(s, 0.0, SolverOptions(tol=1e-12)).beta, ols, atol=1e-8)


def test_objective_and_kkt_reported(rng):
    s = _sample(rng)
    fit = fit_lasso(s, 0.3)
    assert fit.objective == pytest.approx(lasso_objective(s, fit.beta, 0.3), rel=1e-10)
    G, c = s.X.T @ s.X / s.n, s.X.T @ s.y / s.n
    assert kkt_residual(G, c, fit.beta, 0.3) == pytest.approx(fit.kkt_residual)
    assert fit.kkt_residual <= 1e-6


def test_objective_trace_monotone(rng):
    s = _sample(rng, n=25, p=6)
    fit = fit_lasso(s, 0.1, SolverOptions(record_objective=True))
    assert fit.objective_trace.size == fit.iterations
    assert np.all(np.diff(fit.objective_trace) <= 1e-12)


def test_nonconvergence_is_reported_not_raised(rng):
    s = _sample(rng, n=20, p=6)
    fit = fit_lasso(s, 0.01, SolverOptions(max_sweeps=1, tol=1e-14))
    assert not fit.converged
    assert fit.iterations == 1


def test_negative_lambda_rejected(rng):
    with pytest.raises(ValueError, match="nonnegative"):
        fit_lasso(_sample(rng), -0.1)


def test_path_matches_cold_fits(rng):
    s = _sample(rng, n=40, p=8)
    grid = [0.05, 0.1, 0.3, 0.6]
    path = lasso_path(s, grid)
    assert [f.lam for f in path] == grid
    for f in path:
        assert f.objective == pytest.approx(fit_lasso(s, f.lam).objective, abs=1e-10)
    l1 = [f.l1_norm for f in path]
    assert l1 == sorted(l1, reverse=True)


def test_path_requires_increasing_grid(rng):
    with pytest.raises(ValueError, match="increasing"):
        lasso_path(_sample(rng), [0.3, 0.1])


def test_warm_start_shape_checked(rng):
    s = _sample(rng)
    other = fit_lasso(_sample(rng, p=3), 0.1)
    with pytest.raises(ValueError, match="warm start"):
        fit_lasso(s, 0.1, SolverOptions(warm_start=other))


def test_loss_per_point(rng):
    s = _sample(rng)
    b = rng.standard_normal(s.p)
    np.testing.assert_allclose(loss_per_point(b, s), (s.y - s.X @ b) ** 2)
    assert empirical_error(b, s) == pytest.approx(np.mean((s.y - s.X @ b) ** 2))
    with pytest.raises(ValueError, match="shape"):
        loss_per_point(b[:-1], s)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), frac=st.floats(0.01, 0.95))
def test_kkt_holds_on_random_problems(seed, frac):
    s = _sample(np.random.default_rng(seed), n=20, p=6)
    fit = fit_lasso(s, frac * lambda_max(s))
    assert fit.converged
    assert fit.kkt_residual <= 1e-6
