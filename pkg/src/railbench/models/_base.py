"""Shared estimator plumbing: input checks, per-output wrapping, JSON state."""

from __future__ import annotations

import json

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, clone
from sklearn.utils.validation import check_array, check_is_fitted


def check_xy(X, y):
    """Validate a training pair. Returns (X 2-D float, y 2-D float, was_1d)."""
    X = check_array(X, dtype=np.float64, ensure_min_samples=2)
    y_arr = np.asarray(y, dtype=np.float64)
    was_1d = y_arr.ndim == 1
    y_arr = check_array(y_arr.reshape(-1, 1) if was_1d else y_arr, dtype=np.float64, ensure_min_samples=2)
    if y_arr.shape[0] != X.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y_arr.shape[0]}")
    return X, y_arr, was_1d


def check_predict_input(est, X):
    check_is_fitted(est)
    X = check_array(X, dtype=np.float64)
    if X.shape[1] != est.n_features_in_:
        raise ValueError(f"X has {X.shape[1]} features, model was fit with {est.n_features_in_}")
    return X


def format_output(pred: np.ndarray, was_1d: bool) -> np.ndarray:
    return pred.ravel() if was_1d else pred


class PerOutputRegressor(RegressorMixin, BaseEstimator):
    """Base for learners that are single-output at heart.

    A 2-D target with q > 1 columns is handled by q clones, each trained on
    one column and kept in ``estimators_``. Subclasses implement
    ``_fit_single(X, y)`` and ``_predict_single(X)`` for a 1-D target, and
    may override ``_fit_outputs`` to train the clones together.
    """

    def fit(self, X, y):
        X, Y, was_1d = check_xy(X, y)
        self.n_features_in_ = X.shape[1]
        self._y_1d = was_1d
        self.n_outputs_ = Y.shape[1]
        if self.n_outputs_ == 1:
            self.estimators_ = []
            self._fit_single(X, Y[:, 0])
        else:
            self.estimators_ = self._fit_outputs(X, Y)
        self.fitted_ = True
        return self

    def _fit_outputs(self, X, Y) -> list:
        return [clone(self).fit(X, Y[:, j]) for j in range(Y.shape[1])]

    def _fitted_clone(self, n_features: int):
        """Unfitted single-output clone marked fitted; the caller sets the state."""
        est = clone(self)
        est.n_features_in_, est._y_1d, est.n_outputs_ = n_features, True, 1
        est.estimators_, est.fitted_ = [], True
        return est

    def predict(self, X):
        X = check_predict_input(self, X)
        if self.estimators_:
            pred = np.column_stack([e._predict_single(X) for e in self.estimators_])
        else:
            pred = self._predict_single(X)[:, None]
        return format_output(pred, self._y_1d)


# -- JSON state ----------------------------------------------------------

def _encode(value):
    from ._tree import ObliviousTree, Tree

    if isinstance(value, (Tree, ObliviousTree)):
        return {"__tree__": type(value).__name__, "data": value.to_dict()}
    if isinstance(value, BaseEstimator):
        return model_to_dict(value)
    if isinstance(value, np.ndarray):
        return {"__ndarray__": value.tolist(), "dtype": str(value.dtype), "shape": list(value.shape)}
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {"__dict__": {k: _encode(v) for k, v in value.items()}}
    if isinstance(value, (list, tuple)):
        return [_encode(v) for v in value]
    return value


def _decode(value):
    from ._tree import ObliviousTree, Tree

    if isinstance(value, dict):
        if "__tree__" in value:
            return {"Tree": Tree, "ObliviousTree": ObliviousTree}[value["__tree__"]].from_dict(value["data"])
        if "__ndarray__" in value:
            return np.array(value["__ndarray__"], dtype=value["dtype"]).reshape(value["shape"])
        if "__dict__" in value:
            return {k: _decode(v) for k, v in value["__dict__"].items()}
        if "class" in value and "params" in value:
            return model_from_dict(value)
    if isinstance(value, list):
        return [_decode(v) for v in value]
    return value


def model_to_dict(est: BaseEstimator) -> dict:
    """Estimator class name, constructor params and every fitted attribute."""
    state = {k: _encode(v) for k, v in vars(est).items()
             if k.endswith("_") and not k.startswith("__") or k == "_y_1d"}
    params = {k: _encode(v) for k, v in est.get_params(deep=False).items()}
    return {"class": type(est).__name__, "params": params, "state": state}


def model_from_dict(data: dict) -> BaseEstimator:
    from . import ESTIMATORS

    cls = ESTIMATORS[data["class"]]
    params = {k: _decode(v) for k, v in data["params"].items()}
    for k, v in params.items():
        if isinstance(v, list):
            params[k] = tuple(v)
    est = cls(**params)
    for k, v in data.get("state", {}).items():
        setattr(est, k, _decode(v))
    return est


def model_to_json(est: BaseEstimator) -> str:
    return json.dumps(model_to_dict(est), sort_keys=True)


def model_from_json(text: str) -> BaseEstimator:
    return model_from_dict(json.loads(text))
