import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cvbound._seeding import derive_seed
from cvbound.data import (DataError, DgpConfig, FoldAssignment, Sample, center, generate_dgp,
                          load_sample, partition_folds, save_sample)


def test_derive_seed_is_stable_and_key_sensitive():
    assert derive_seed(5, "dgp") == derive_seed(5, "dgp")
    assert derive_seed(5, "dgp") != derive_seed(5, "folds")
    assert derive_seed(5, "dgp") != derive_seed(6, "dgp")
    assert 0 <= derive_seed(2**40, "x", 3) < 2**63


def test_sample_validation():
    with pytest.raises(DataError, match="rows"):
        Sample(np.zeros(3), np.zeros((4, 2)))
    with pytest.raises(DataError, match="at least 2"):
        Sample(np.zeros(1), np.zeros((1, 2)))
    with pytest.raises(DataError, match="non-finite"):
        Sample(np.array([0.0, np.nan]), np.zeros((2, 1)))


def test_dgp_shapes_and_reproducibility():
    cfg = DgpConfig(n=50, p=12, seed=4)
    a, b = generate_dgp(cfg), generate_dgp(cfg)
    assert a.X.shape == (50, 12)
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(a.y, b.y)
    assert not np.array_equal(a.y, generate_dgp(DgpConfig(n=50, p=12, seed=5)).y)


def test_dgp_correlation_and_noise():
    s = generate_dgp(DgpConfig(n=20_000, p=6, beta_nonzero=(3.0, 4.0), seed=1))
    C = np.corrcoef(s.X, rowvar=False)
    off = C[~np.eye(6, dtype=bool)]
    assert 0.45 <= off.min() and off.max() <= 0.55
    np.testing.assert_allclose(s.X.var(axis=0), 1.0, atol=0.05)
    resid = s.y - s.X[:, :2] @ np.array([3.0, 4.0])
    assert abs(resid.std() - 1.0) < 0.03


def test_dgp_config_rejects_bad_values():
    with pytest.raises(ValueError):
        DgpConfig(n=10, p=3)  # more true coefficients than regressors
    with pytest.raises(ValueError):
        DgpConfig(n=10, correlation=1.5)


@settings(max_examples=40, deadline=None)
@given(k=st.integers(2, 6), m=st.integers(1, 20), seed=st.integers(0, 2**32))
def test_partition_is_balanced_and_disjoint(k, m, seed):
    f = partition_folds(k * m, k, seed)
    rows = np.concatenate([f.fold(q) for q in range(k)])
    assert sorted(rows.tolist()) == list(range(k * m))
    for q in range(k):
        assert f.fold(q).size == m
        assert np.intersect1d(f.fold(q), f.complement(q)).size == 0


def test_partition_rejects_uneven_split():
    with pytest.raises(ValueError, match="divisible"):
        partition_folds(10, 3, 0)


def test_contiguous_folds():
    f = partition_folds(12, 3, 0, shuffle=False)
    np.testing.assert_array_equal(f.fold(1), np.arange(4, 8))


def test_fold_assignment_requires_equal_sizes():
    with pytest.raises(ValueError, match="equal sizes"):
        FoldAssignment(np.array([1, 1, 2]), 2)


def test_csv_round_trip(tmp_path):
    s = generate_dgp(DgpConfig(n=10, p=5, beta_nonzero=(1.0,), seed=2))
    for header in (False, True):
        path = tmp_path / f"s{header}.csv"
        save_sample(s, path, header=header)
        back = load_sample(path, header=header)
        np.testing.assert_array_equal(back.X, s.X)
        np.testing.assert_array_equal(back.y, s.y)


@pytest.mark.parametrize("text, match", [
    ("", "no rows"),
    ("1,2\n3\n", "line 2 has 1 columns"),
    ("1,2\n3,abc\n", "line 2, column 2: non-numeric"),
    ("1,2\n3,inf\n", "non-finite"),
    ("1\n2\n", "at least one regressor"),
])
def test_csv_errors_name_the_location(tmp_path, text, match):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(DataError, match=match):
        load_sample(path)


def test_missing_file(tmp_path):
    with pytest.raises(DataError, match="no such file"):
        load_sample(tmp_path / "nope.csv")


def test_center_and_standardize(small_sample):
    c = center(small_sample)
    np.testing.assert_allclose(c.X.mean(axis=0), 0.0, atol=1e-12)
    assert abs(c.y.mean()) < 1e-12
    z = center(small_sample, scale=True)
    np.testing.assert_allclose(z.X.std(axis=0), 1.0)
