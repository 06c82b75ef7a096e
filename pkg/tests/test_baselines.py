import numpy as np
import pytest
from hypothesis import given, strategies as st

from ggh.baselines import (IMPUTERS, complete_columns, complete_rows, iterative_impute,
                           knn_impute, matrix_factorization_impute, mean_impute, soft_impute)
from ggh.data import DataError, SplitPlan, from_array


def _rmse(a, b):
    return float(np.sqrt(np.mean((np.asarray(a) - np.asarray(b)) ** 2)))


def _rank_one(seed=0, n=40, m=10, rate=0.3):
    rng = np.random.default_rng(seed)
    M = np.outer(rng.uniform(0.5, 1.5, n), rng.uniform(0.5, 1.5, m))
    mask = rng.random(M.shape) < rate
    X = M.copy()
    X[mask] = np.nan
    return M, X, mask


def _table(n=30, seed=0, missing_col=2, rate=0.3):
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(n, 5))
    mask = np.zeros_like(V, dtype=bool)
    mask[:, missing_col] = rng.random(n) < rate
    return from_array(V, [f"f{j}" for j in range(4)] + ["y"], "y", missing_mask=mask)


# dropping ---------------------------------------------------------------------

def test_complete_columns_drops_the_masked_column():
    d = _table()
    out = complete_columns(d)
    assert out.column_names == ["f0", "f1", "f3", "y"]
    assert out.column_names[out.target_index] == "y"
    assert not out.missing_mask.any()


def test_complete_columns_identity_without_missing():
    d = _table(rate=0.0)
    out = complete_columns(d)
    np.testing.assert_array_equal(out.values, d.values)
    assert out.column_names == d.column_names


def test_complete_columns_refuses_to_drop_the_target():
    with pytest.raises(DataError):
        _table(missing_col=4)
    d = _table(rate=0.0)
    d.missing_mask[3, d.target_index] = True  # bypass construction checks
    with pytest.raises(DataError):
        complete_columns(d)


def test_complete_rows_drops_incomplete_training_rows_only():
    d = _table(n=20, rate=0.5)
    plan = SplitPlan(np.arange(14), np.arange(14, 17), np.arange(17, 20), 0)
    out, new_plan = complete_rows(d, plan)
    bad_train = np.flatnonzero(d.missing_mask[:14].any(axis=1))
    assert out.n_rows == 20 - len(bad_train)
    assert len(new_plan.train) == 14 - len(bad_train)
    np.testing.assert_array_equal(out.values[new_plan.test], d.values[plan.test])
    assert not out.missing_mask[new_plan.train].any()


def test_complete_rows_identity_and_error():
    d = _table(rate=0.0)
    out, plan = complete_rows(d)
    np.testing.assert_array_equal(out.values, d.values)
    assert plan is None
    d = _table(rate=1.0)
    with pytest.raises(DataError):
        complete_rows(d)


# mean / knn -------------------------------------------------------------------

def test_mean_impute_hand_example():
    r = mean_impute(np.array([[1.0], [np.nan], [3.0]]))
    assert r.values[1, 0] == 2.0
    np.testing.assert_array_equal(r.imputed[:, 0], [False, True, False])


def test_mean_impute_identity_and_all_missing_error():
    X = np.arange(6.0).reshape(3, 2)
    np.testing.assert_array_equal(mean_impute(X).values, X)
    with pytest.raises(DataError):
        mean_impute(np.array([[1.0, np.nan], [2.0, np.nan]]))


def test_knn_tie_goes_to_lower_row_id():
    X = np.array([[0.0, 0.0, np.nan], [1.0, 0.0, 5.0], [-1.0, 0.0, 7.0]])
    assert knn_impute(X, k=1).values[0, 2] == 5.0
    X2 = X[[0, 2, 1]]
    assert knn_impute(X2, k=1).values[0, 2] == 7.0


def test_knn_duplicate_row_wins():
    X = np.array([[0.3, 0.7, np.nan], [5.0, 5.0, 1.0], [0.3, 0.7, 9.0], [0.31, 0.7, 4.0]])
    assert knn_impute(X, k=1).values[0, 2] == 9.0
    # an exact match takes all the weight with inverse-distance weighting
    assert knn_impute(X, k=3).values[0, 2] == 9.0


def test_knn_beats_mean_on_linear_structure():
    rng = np.random.default_rng(3)
    a = rng.uniform(-1, 1, 20)
    M = np.column_stack([a, 2 * a, -a + 0.5])
    mask = np.zeros_like(M, dtype=bool)
    mask[::3, 1] = True
    X = M.copy()
    X[mask] = np.nan
    e_knn = _rmse(knn_impute(X, k=2).values[mask], M[mask])
    e_mean = _rmse(mean_impute(X).values[mask], M[mask])
    assert e_knn < e_mean


def test_knn_rejects_bad_arguments():
    with pytest.raises(ValueError):
        knn_impute(np.zeros((2, 2)), k=0)
    with pytest.raises(ValueError):
        knn_impute(np.zeros((2, 2)), weighting="gaussian")


# low rank ---------------------------------------------------------------------

def test_mf_recovers_rank_one():
    M, X, mask = _rank_one()
    r = matrix_factorization_impute(X, rank=1, lr=0.05, epochs=300, seed=0)
    assert _rmse(r.values[mask], M[mask]) < 1e-2


def test_mf_full_rank_capacity():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(6, 3))
    r = matrix_factorization_impute(X, rank=3, lr=0.05, epochs=2000, reg=0.0, seed=0)
    assert r.trace[-1] < 1e-6
    assert r.trace[-1] < r.trace[0]


def test_mf_deterministic_under_seed():
    _, X, _ = _rank_one(2)
    a = matrix_factorization_impute(X, rank=1, epochs=20, seed=5)
    b = matrix_factorization_impute(X, rank=1, epochs=20, seed=5)
    np.testing.assert_array_equal(a.values, b.values)
    c = matrix_factorization_impute(X, rank=1, epochs=20, seed=6)
    assert not np.array_equal(a.values, c.values)


def test_soft_impute_recovers_rank_one():
    M, X, mask = _rank_one()
    r = soft_impute(X, lam=0.01, max_iters=2000, tol=1e-12)
    assert _rmse(r.values[mask], M[mask]) < 1e-2


def test_soft_impute_zero_lambda_full_observation_is_identity():
    X = np.random.default_rng(4).normal(size=(7, 4))
    r = soft_impute(X, lam=0.0, max_iters=1)
    np.testing.assert_array_equal(r.values, X)
    assert len(r.trace) == 1


def test_soft_impute_objective_never_increases():
    _, X, _ = _rank_one(5)
    r = soft_impute(X, lam=0.05, max_iters=300, tol=0.0)
    steps = np.diff(r.trace)
    assert np.all(steps <= 1e-12 * np.abs(r.trace[:-1]))


def test_mice_recovers_linear_column():
    rng = np.random.default_rng(6)
    A = rng.normal(size=(50, 3))
    M = np.column_stack([A, 2 * A[:, 0] - A[:, 1] + 0.5 * A[:, 2] + 1.0])
    mask = np.zeros_like(M, dtype=bool)
    mask[:, 3] = rng.random(50) < 0.3
    X = M.copy()
    X[mask] = np.nan
    r = iterative_impute(X, rounds=3)
    assert _rmse(r.values[mask], M[mask]) < 1e-8


def test_mice_zero_rounds_is_mean_fill():
    _, X, _ = _rank_one(7)
    np.testing.assert_array_equal(iterative_impute(X, rounds=0).values, mean_impute(X).values)


def test_mice_deltas_shrink():
    rng = np.random.default_rng(8)
    A = rng.normal(size=(200, 2))
    M = np.column_stack([A, A[:, 0] + 0.5 * A[:, 1] + 0.1 * rng.normal(size=200),
                         A[:, 1] - 0.3 * A[:, 0] + 0.1 * rng.normal(size=200)])
    mask = np.zeros_like(M, dtype=bool)
    mask[:, 2] = rng.random(200) < 0.3
    mask[:, 3] = rng.random(200) < 0.3
    X = M.copy()
    X[mask] = np.nan
    tr = iterative_impute(X, rounds=8).trace
    assert all(b <= a for a, b in zip(tr, tr[1:]))


# shared contracts -------------------------------------------------------------

@given(st.integers(0, 10_000), st.sampled_from(sorted(IMPUTERS)))
def test_observed_cells_bit_exact_and_deterministic(seed, name):
    _, X, mask = _rank_one(seed, n=12, m=5)
    if mask.all(axis=0).any():
        return
    a = IMPUTERS[name](X, seed)
    b = IMPUTERS[name](X, seed)
    np.testing.assert_array_equal(a.values[~mask], X[~mask])
    np.testing.assert_array_equal(a.imputed, mask)
    np.testing.assert_array_equal(a.values, b.values)
    assert np.isfinite(a.values).all()


def test_data_matrix_input_uses_its_mask():
    d = _table()
    r = mean_impute(d)
    np.testing.assert_array_equal(r.imputed, d.missing_mask)


def test_csv_export_writes_mask_sidecar(tmp_path):
    r = mean_impute(np.array([[1.0, np.nan], [3.0, 4.0]]))
    r.to_csv(tmp_path / "imp.csv", ["a", "b"])
    assert (tmp_path / "imp.csv").read_text().splitlines() == ["a,b", "1.0,4.0", "3.0,4.0"]
    assert (tmp_path / "imp.imputed-mask.csv").read_text().splitlines() == ["a,b", "0,1", "0,0"]
