from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin, clone
from sklearn.utils.validation import check_array, check_is_fitted


class Scaler(TransformerMixin, BaseEstimator):
    """Zero-mean, unit-variance standardization per feature.

    Uses the population standard deviation (divisor n). Features with zero
    spread are mapped to 0.
    """

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.mu_ = X.mean(axis=0)
        self.sigma_ = X.std(axis=0)
        self.n_features_in_ = X.shape[1]
        return self

    def _check(self, X):
        check_is_fitted(self)
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, scaler was fit with {self.n_features_in_}")
        return X

    def transform(self, X):
        X = self._check(X)
        safe = np.where(self.sigma_ > 0, self.sigma_, 1.0)
        return np.where(self.sigma_ > 0, (X - self.mu_) / safe, 0.0)

    def inverse_transform(self, X):
        X = self._check(X)
        return X * self.sigma_ + self.mu_


class ScaledRegressor(RegressorMixin, BaseEstimator):
    """Standardize the inputs, then delegate to ``regressor``.

    The scaler is fit on whatever data ``fit`` receives, so inside a
    cross-validation split it only ever sees the training portion.
    """

    def __init__(self, regressor, scaler=None):
        self.regressor = regressor
        self.scaler = scaler

    def fit(self, X, y):
        self.scaler_ = clone(self.scaler) if self.scaler is not None else Scaler()
        Xs = self.scaler_.fit_transform(X)
        self.regressor_ = clone(self.regressor).fit(Xs, y)
        self.n_features_in_ = self.scaler_.n_features_in_
        return self

    def predict(self, X):
        check_is_fitted(self)
        return self.regressor_.predict(self.scaler_.transform(X))
