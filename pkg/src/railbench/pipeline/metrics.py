from __future__ import annotations

import numpy as np


def _pair(y, yhat):
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape:
        raise ValueError(f"length mismatch: {y.shape} vs {yhat.shape}")
    if y.size == 0:
        raise ValueError("empty input")
    return y, yhat


def mae(y, yhat, axis=None):
    """Mean absolute error; ``axis=0`` gives one value per output column."""
    y, yhat = _pair(y, yhat)
    return np.mean(np.abs(y - yhat), axis=axis)


def mse(y, yhat, axis=None):
    y, yhat = _pair(y, yhat)
    return np.mean((y - yhat) ** 2, axis=axis)
