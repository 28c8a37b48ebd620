from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from ._base import check_predict_input, check_xy, format_output


class KNNRegressor(RegressorMixin, BaseEstimator):
    """k-nearest-neighbour regression in Euclidean distance.

    Natively multi-output. Distance ties are resolved by training row index.
    With ``weighting="inverse-distance"`` an exact match (distance 0) takes the
    average of the zero-distance neighbours.
    """

    def __init__(self, k=5, weighting="uniform"):
        self.k = k
        self.weighting = weighting

    def fit(self, X, y):
        X, Y, was_1d = check_xy(X, y)
        if not 1 <= self.k <= len(X):
            raise ValueError(f"k={self.k} must lie in [1, {len(X)}]")
        if self.weighting not in ("uniform", "inverse-distance"):
            raise ValueError(f"unknown weighting {self.weighting!r}")
        self.n_features_in_ = X.shape[1]
        self.X_fit_, self.y_fit_, self._y_1d = X, Y, was_1d
        return self

    def kneighbors(self, X):
        X = check_predict_input(self, X)
        d2 = ((X[:, None, :] - self.X_fit_[None, :, :]) ** 2).sum(axis=2)
        idx = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
        return np.sqrt(np.take_along_axis(d2, idx, axis=1)), idx

    def predict(self, X):
        dist, idx = self.kneighbors(X)
        neigh = self.y_fit_[idx]  # m x k x q
        if self.weighting == "uniform":
            pred = neigh.mean(axis=1)
        else:
            exact = dist == 0
            with np.errstate(divide="ignore"):
                w = np.where(exact.any(axis=1, keepdims=True), exact.astype(float), 1.0 / dist)
            pred = (w[:, :, None] * neigh).sum(axis=1) / w.sum(axis=1, keepdims=True)
        return format_output(pred, self._y_1d)
