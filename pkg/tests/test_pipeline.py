import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from railbench.pipeline import (
    CvReport,
    ModelSpec,
    ScaledRegressor,
    Scaler,
    grid_search,
    kfold,
    mae,
    mse,
    nested_cv,
    nonnested_cv,
    select_for_outer_fold,
)
from railbench.models import KNNRegressor


def noisy(n=36, seed=0, q=2):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 3, (n, 2))
    Y = np.column_stack([X[:, 0] ** 2 + rng.normal(0, 0.1, n), np.sin(3 * X[:, 1])])[:, :q]
    return X, Y


# -- scaler ----------------------------------------------------------------

def test_scaler_example_column():
    s = Scaler().fit([[1.0], [2.0], [3.0]])
    assert s.mu_[0] == 2.0
    assert s.sigma_[0] == pytest.approx(math.sqrt(2 / 3), abs=1e-15)
    np.testing.assert_allclose(s.transform([[1.0], [2.0], [3.0]])[:, 0], [-1.2247, 0, 1.2247], atol=5e-5)
    np.testing.assert_allclose(s.transform([[1.0], [3.0]])[:, 0], [-math.sqrt(1.5), math.sqrt(1.5)], atol=1e-15)


def test_scaler_constant_column_maps_to_zero():
    np.testing.assert_array_equal(Scaler().fit_transform([[5.0], [5.0], [5.0]]), [[0.0], [0.0], [0.0]])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 30))
def test_scaler_properties(seed, n):
    rng = np.random.default_rng(seed)
    X = rng.normal(3, 7, (n, 3))
    s = Scaler().fit(X)
    Z = s.transform(X)
    assert np.all(np.abs(Z.mean(axis=0)) < 1e-10)
    assert np.all(np.abs(Z.var(axis=0) - 1) < 1e-8)
    np.testing.assert_allclose(s.inverse_transform(Z), X, rtol=0, atol=1e-12 * max(1.0, np.abs(X).max()))


def test_scaler_uses_training_statistics_only():
    s = Scaler().fit([[0.0], [2.0]])
    np.testing.assert_array_equal(s.transform([[4.0]]), [[3.0]])


def test_scaler_width_mismatch():
    s = Scaler().fit(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        s.transform(np.zeros((3, 3)))


# -- metrics ---------------------------------------------------------------

@pytest.mark.parametrize("y, yhat, m_abs, m_sq", [
    ([1, 2], [1, 2], 0.0, 0.0),
    ([0, 2], [1, 1], 1.0, 1.0),
    ([0, 4], [0, 0], 2.0, 8.0),
])
def test_metric_examples(y, yhat, m_abs, m_sq):
    assert mae(y, yhat) == m_abs
    assert mse(y, yhat) == m_sq


def test_metric_errors():
    with pytest.raises(ValueError):
        mae([1, 2], [1])
    with pytest.raises(ValueError):
        mse([], [])


def test_constant_residual_spot_check():
    y = np.arange(5.0)
    assert mse(y, y + 0.3) == pytest.approx(mae(y, y + 0.3) ** 2)


# -- folds -----------------------------------------------------------------

@pytest.mark.parametrize("n, k, sizes", [(528, 6, [88] * 6), (12, 6, [2] * 6), (10, 4, [3, 3, 2, 2])])
def test_kfold_sizes(n, k, sizes):
    assert kfold(n, k, seed=0).sizes == sizes


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 200), st.integers(2, 12), st.integers(0, 2**32))
def test_kfold_partitions(n, k, seed):
    if k > n:
        return
    plan = kfold(n, k, seed)
    allidx = np.concatenate(plan.folds)
    assert sorted(allidx) == list(range(n))
    assert max(plan.sizes) - min(plan.sizes) <= 1
    assert all(np.array_equal(a, b) for a, b in zip(plan.folds, kfold(n, k, seed).folds))
    for i in range(k):
        assert len(np.intersect1d(plan.train_indices(i), plan.folds[i])) == 0


@pytest.mark.parametrize("n, k", [(5, 6), (5, 1)])
def test_kfold_errors(n, k):
    with pytest.raises(ValueError):
        kfold(n, k)


# -- grid search -----------------------------------------------------------

def test_grid_search_singleton():
    X, Y = noisy()
    spec = ModelSpec("knnr", {"k": 3})
    assert grid_search([spec], X, Y, kfold(len(X), 4, 0)).best is spec


def test_grid_search_prefers_k1_on_noiseless_data():
    X = np.linspace(0, 1, 40)[:, None]
    y = 2.0 * X[:, 0]
    grid = [ModelSpec("knnr", {"k": len(X) * 3 // 4}), ModelSpec("knnr", {"k": 1})]
    assert grid_search(grid, X, y, kfold(len(X), 4, 0)).best.params == {"k": 1}


def test_grid_search_ties_keep_first():
    X, Y = noisy()
    grid = [ModelSpec("knnr", {"k": 2}), ModelSpec("knnr", {"k": 2, "weighting": "uniform"})]
    res = grid_search(grid, X, Y, kfold(len(X), 4, 0))
    assert res.scores[0] == res.scores[1]
    assert res.best_index == 0


def test_grid_search_disqualifies_failing_candidate():
    X, Y = noisy(n=20)
    grid = [ModelSpec("knnr", {"k": 100}), ModelSpec("knnr", {"k": 2})]
    res = grid_search(grid, X, Y, kfold(len(X), 4, 0))
    assert res.best_index == 1 and 0 in res.errors and np.isinf(res.scores[0])
    with pytest.raises(RuntimeError):
        grid_search(grid[:1], X, Y, kfold(len(X), 4, 0))


def test_unknown_family():
    with pytest.raises(ValueError):
        ModelSpec("forest")


# -- evaluation schemes ----------------------------------------------------

def manual_outer_cv(spec, X, Y, k, seed):
    plan = kfold(len(X), k, seed)
    pred = np.zeros_like(Y)
    for i in range(k):
        tr, te = plan.train_indices(i), plan.folds[i]
        model = ScaledRegressor(KNNRegressor(**spec.params)).fit(X[tr], Y[tr])
        pred[te] = model.predict(X[te])
    return pred


def test_nested_singleton_equals_plain_cv():
    X, Y = noisy()
    spec = ModelSpec("knnr", {"k": 3})
    rep = nested_cv({"knnr": [spec]}, X=X, Y=Y, outer_k=6, seed=4, target_names=["a", "b"])
    pred = manual_outer_cv(spec, X, Y, 6, 4)
    np.testing.assert_array_equal(rep.predictions["knnr"], pred)
    assert rep.results["knnr"]["a"]["mse"] == 100 * mse(Y[:, 0], pred[:, 0])
    other = nonnested_cv({"knnr": [spec]}, X=X, Y=Y, k=6, seed=4, target_names=["a", "b"])
    assert other.results == rep.results


def test_pooled_metrics_equal_direct_formula():
    X, Y = noisy()
    grid = {"knnr": [ModelSpec("knnr", {"k": k}) for k in (1, 3, 5)]}
    for rep in (nested_cv(grid, X=X, Y=Y, seed=1), nonnested_cv(grid, X=X, Y=Y, seed=1)):
        pred = rep.predictions["knnr"]
        for j, name in enumerate(rep.target_names):
            direct_abs = 100 * float(np.sum(np.abs(Y[:, j] - pred[:, j])) / len(Y))
            direct_sq = 100 * float(np.sum((Y[:, j] - pred[:, j]) ** 2) / len(Y))
            assert rep.results["knnr"][name]["mae"] == pytest.approx(direct_abs, rel=1e-12)
            assert rep.results["knnr"][name]["mse"] == pytest.approx(direct_sq, rel=1e-12)


def test_reports_are_byte_identical_across_runs():
    X, Y = noisy()
    grid = {"knnr": [ModelSpec("knnr", {"k": k}) for k in (1, 3)],
            "krr": [ModelSpec("krr", {"lam": 0.1})]}
    assert nested_cv(grid, X=X, Y=Y, seed=2).to_json() == nested_cv(grid, X=X, Y=Y, seed=2).to_json()


def test_report_schema_and_round_trip():
    X, Y = noisy()
    rep = nonnested_cv({"knnr": [ModelSpec("knnr", {"k": 3})]}, X=X, Y=Y, seed=0)
    d = json.loads(rep.to_json())
    assert d["scheme"] == "non-nested"
    assert {"seed", "grids", "results", "selections", "fold_sizes"} <= set(d)
    assert len(d["selections"]["knnr"]) == 10
    assert CvReport.from_json(rep.to_json()).to_json() == rep.to_json()


def test_report_rejects_malformed():
    with pytest.raises(ValueError):
        CvReport.from_json('{"scheme": "nested"}')
    with pytest.raises(ValueError):
        CvReport.from_dict({"scheme": "bogus", "seed": 0, "k": 2, "target_names": [],
                            "results": {}, "selections": {}})


def test_failing_family_is_marked_disqualified():
    X, Y = noisy(n=24)
    rep = nested_cv({"knnr": [ModelSpec("knnr", {"k": 500})], "krr": [ModelSpec("krr", {})]}, X=X, Y=Y)
    assert rep.results["knnr"] is None and "knnr" in rep.disqualified
    assert rep.results["krr"] is not None


def test_nested_needs_enough_rows():
    X, Y = noisy(n=5)
    with pytest.raises(ValueError):
        nested_cv({"knnr": [ModelSpec("knnr", {"k": 1})]}, X=X, Y=Y, outer_k=6)


def test_parallel_matches_serial():
    X, Y = noisy()
    grid = {"knnr": [ModelSpec("knnr", {"k": k}) for k in (1, 3)], "krr": [ModelSpec("krr", {})]}
    assert nested_cv(grid, X=X, Y=Y, n_jobs=2).to_json() == nested_cv(grid, X=X, Y=Y, n_jobs=1).to_json()


def test_selection_ignores_held_out_targets():
    X, Y = noisy(n=48)
    grid = [ModelSpec("knnr", {"k": k}) for k in (1, 2, 4, 8)]
    outer = kfold(len(X), 6, 3)
    rng = np.random.default_rng(0)
    for i in range(6):
        chosen = select_for_outer_fold(grid, X, Y, outer, i)
        Yp = Y.copy()
        te = outer.folds[i]
        Yp[te] = Y[rng.permutation(te)] * 10 + 5
        assert select_for_outer_fold(grid, X, Yp, outer, i) == chosen


class RecordingScaler(Scaler):
    """Scaler that logs which rows it was fit on and which rows it transformed."""

    log = []

    def fit(self, X, y=None):
        super().fit(X)
        self.fit_rows_ = {tuple(r) for r in np.asarray(X)}
        return self

    def transform(self, X):
        RecordingScaler.log.append((self.fit_rows_, {tuple(r) for r in np.asarray(X)}))
        return super().transform(X)


def test_scaler_never_sees_evaluation_rows():
    X, Y = noisy(n=30)
    RecordingScaler.log = []
    grid = {"knnr": [ModelSpec("knnr", {"k": k}) for k in (1, 3)]}
    nested_cv(grid, X=X, Y=Y, seed=0, scaler=RecordingScaler())
    assert RecordingScaler.log
    every_row = {tuple(r) for r in X}
    for fit_rows, transformed in RecordingScaler.log:
        assert fit_rows != every_row
        assert transformed == fit_rows or not (transformed & fit_rows)


@pytest.mark.parametrize("family, params", [
    ("gbr", {"max_depth": 2, "learning_rate": 0.1}),
    ("cbr", {"depth": 2, "learning_rate": 0.1}),
    ("abr", {"base_tree_depth": 2}),
])
def test_shared_staged_fits_score_like_separate_fits(family, params):
    X, Y = noisy(n=30)
    grid = [ModelSpec(family, {"n_estimators": n, **params}) for n in (3, 8, 5)]
    plan = kfold(len(X), 4, 1)
    res = grid_search(grid, X, Y, plan)
    for c, spec in enumerate(grid):
        scores = [mse(Y[te], spec.build().fit(X[tr], Y[tr]).predict(X[te])) for tr, te in plan.split()]
        assert res.scores[c] == np.mean(scores)
