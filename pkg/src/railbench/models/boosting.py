"""Tree ensembles: gradient boosting, oblivious (CatBoost-style) boosting and
AdaBoost.R2."""

from __future__ import annotations

import numpy as np

from ._base import PerOutputRegressor, check_predict_input
from ._tree import FeatureBins, build_oblivious_trees, build_tree, build_trees


class _StagedBoosting(PerOutputRegressor):
    """Squared-loss boosting: start at the target mean, then add shrunken
    trees fit to the current residuals.

    Outputs are boosted independently; their trees are grown in one batch
    per stage.
    """

    def _fit_single(self, X, y):
        self._install(self._boost(X, y[None, :])[0])

    def _fit_outputs(self, X, Y):
        members = []
        for state in self._boost(X, np.ascontiguousarray(Y.T)):
            est = self._fitted_clone(X.shape[1])
            est._install(state)
            members.append(est)
        return members

    def _install(self, state):
        self.init_, self.trees_, self.train_score_ = state

    def _boost(self, X, Y):
        """Boost every row of ``Y`` (q, n); returns (init, trees, train_score) per row."""
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        init = [float(y.mean()) for y in Y]
        F = np.array([np.full(len(y), c) for y, c in zip(Y, init)])
        trees = [[] for _ in Y]
        scores = [[float(np.mean((y - f) ** 2))] for y, f in zip(Y, F)]
        bins = FeatureBins(X)
        for _ in range(self.n_estimators):
            for j, tree in enumerate(self._grow(X, Y - F, bins)):
                F[j] = F[j] + self.learning_rate * tree.predict(X)
                trees[j].append(tree)
                scores[j].append(float(np.mean((Y[j] - F[j]) ** 2)))
        return [(c, t, np.array(s)) for c, t, s in zip(init, trees, scores)]

    def _predict_single(self, X):
        out = np.full(len(X), self.init_)
        for tree in self.trees_:
            out += self.learning_rate * tree.predict(X)
        return out

    def staged_predict(self, X):
        """Yield the prediction after each stage, as ``n_estimators=1, 2, ...`` would give."""
        X = check_predict_input(self, X)
        members = self.estimators_ or [self]
        outs = [np.full(len(X), m.init_) for m in members]
        for stage in range(len(members[0].trees_)):
            for o, m in zip(outs, members):
                o += m.learning_rate * m.trees_[stage].predict(X)
            pred = np.column_stack(outs)
            yield pred.ravel() if self._y_1d else pred


class GradientBoostingRegressor(_StagedBoosting):
    """Gradient boosted regression trees under squared loss.

    Leaf values are residual means, so every stage is a least-squares fit of
    the negative gradient.

    Parameters
    ----------
    n_estimators : int
    learning_rate : float in (0, 1]
    max_depth : int
        0 gives a root-only tree, i.e. a constant model.
    min_samples_leaf : int
    """

    def __init__(self, n_estimators=100, learning_rate=0.1, max_depth=3, min_samples_leaf=1):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf

    def _grow(self, X, R, bins):
        return build_trees(X, R, max_depth=self.max_depth, min_samples_leaf=self.min_samples_leaf, bins=bins)


class ObliviousBoostingRegressor(_StagedBoosting):
    """Gradient boosting over symmetric trees (one split rule per level).

    Stands in for CatBoost on purely numeric inputs: no ordered target
    statistics are needed, only the tree shape is kept.
    """

    def __init__(self, n_estimators=100, learning_rate=0.1, depth=4):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.depth = depth

    def _grow(self, X, R, bins):
        return build_oblivious_trees(X, R, self.depth, bins=bins)


def weighted_median(predictions: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Row-wise weighted median of ``predictions`` (samples x estimators).

    Picks the smallest prediction whose cumulative weight reaches half of the
    total weight.
    """
    predictions = np.atleast_2d(predictions)
    order = np.argsort(predictions, axis=1, kind="stable")
    cdf = np.cumsum(np.asarray(weights, dtype=float)[order], axis=1)
    idx = np.argmax(cdf >= 0.5 * cdf[:, -1:], axis=1)
    rows = np.arange(len(predictions))
    return predictions[rows, order[rows, idx]]


class AdaBoostR2Regressor(PerOutputRegressor):
    """Drucker's AdaBoost.R2 with weighted regression trees.

    Each round fits a tree to the current sample weights, scores every sample
    by its loss relative to the largest error, and shrinks the weights of well
    predicted samples by ``beta ** (1 - loss)`` with
    ``beta = mean_loss / (1 - mean_loss)``. Prediction is the weighted median
    of the members with weights ``log(1 / beta)``.

    Parameters
    ----------
    n_estimators : int
    base_tree_depth : int
    loss : {"linear", "square", "exponential"}
    sampling : {"weighted", "bootstrap"}
        "weighted" passes the weights to the tree; "bootstrap" instead trains
        on a weighted resample drawn with ``seed`` (Drucker's original form).
    seed : int
    """

    def __init__(self, n_estimators=50, base_tree_depth=3, loss="linear", sampling="weighted", seed=0):
        self.n_estimators = n_estimators
        self.base_tree_depth = base_tree_depth
        self.loss = loss
        self.sampling = sampling
        self.seed = seed

    def _sample_loss(self, err):
        if self.loss == "linear":
            return err
        if self.loss == "square":
            return err ** 2
        if self.loss == "exponential":
            return 1.0 - np.exp(-err)
        raise ValueError(f"unknown loss {self.loss!r}")

    def _fit_single(self, X, y):
        if self.sampling not in ("weighted", "bootstrap"):
            raise ValueError(f"unknown sampling {self.sampling!r}")
        n = len(y)
        rng = np.random.default_rng(self.seed)
        w = np.full(n, 1.0 / n)
        bins = FeatureBins(X)
        self.trees_, weights, errors, self.sample_weights_ = [], [], [], [w.copy()]
        for t in range(self.n_estimators):
            if self.sampling == "weighted":
                tree = build_tree(X, y, w, max_depth=self.base_tree_depth, bins=bins)
            else:
                idx = rng.choice(n, size=n, replace=True, p=w)
                tree = build_tree(X[idx], y[idx], max_depth=self.base_tree_depth)
            abs_err = np.abs(tree.predict(X) - y)
            max_err = abs_err.max()
            loss = self._sample_loss(abs_err / max_err) if max_err > 0 else np.zeros(n)
            mean_loss = float(np.dot(w, loss))
            if mean_loss <= 0:
                self.trees_.append(tree)
                weights.append(1.0)
                errors.append(0.0)
                break
            if mean_loss >= 0.5:
                if t == 0:
                    self.trees_.append(tree)
                    weights.append(1.0)
                    errors.append(mean_loss)
                break
            beta = mean_loss / (1.0 - mean_loss)
            w = w * beta ** (1.0 - loss)
            w = w / w.sum()
            self.trees_.append(tree)
            weights.append(float(np.log(1.0 / beta)))
            errors.append(mean_loss)
            self.sample_weights_.append(w.copy())
        self.estimator_weights_ = np.array(weights)
        self.estimator_errors_ = np.array(errors)
        self.sample_weights_ = np.array(self.sample_weights_)

    def _predict_single(self, X):
        preds = np.column_stack([t.predict(X) for t in self.trees_])
        return weighted_median(preds, self.estimator_weights_)

    def staged_predict(self, X):
        """Yield the prediction after each of ``n_estimators`` rounds.

        Rounds after an early stop repeat the final prediction, which is what
        a fit with that many rounds would return.
        """
        X = check_predict_input(self, X)
        members = self.estimators_ or [self]
        preds = [np.column_stack([t.predict(X) for t in m.trees_]) for m in members]
        for stage in range(1, self.n_estimators + 1):
            out = np.column_stack([weighted_median(p[:, :stage], m.estimator_weights_[:stage])
                                   for p, m in zip(preds, members)])
            yield out.ravel() if self._y_1d else out
