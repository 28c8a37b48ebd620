from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from ._base import check_predict_input, check_xy, format_output

_ACTIVATIONS = {
    "tanh": (np.tanh, lambda a: 1.0 - a * a),
    "relu": (lambda z: np.maximum(z, 0.0), lambda a: (a > 0).astype(float)),
}


def init_params(layer_sizes, seed):
    """Uniform weights in +-1/sqrt(fan_in), zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def forward(weights, biases, X, activation="tanh"):
    """Layer outputs, input first. Hidden layers use ``activation``; the
    output layer is linear."""
    act = _ACTIVATIONS[activation][0]
    outs = [X]
    for layer, (W, b) in enumerate(zip(weights, biases)):
        z = outs[-1] @ W + b
        outs.append(z if layer == len(weights) - 1 else act(z))
    return outs


def mlp_loss(weights, biases, X, Y, activation="tanh", reduction="mean"):
    """Half squared error summed over outputs, then averaged (``"mean"``) or
    summed (``"sum"``) over samples."""
    err = forward(weights, biases, X, activation)[-1] - Y
    total = 0.5 * (err * err).sum()
    return total / len(X) if reduction == "mean" else total


def mlp_gradients(weights, biases, X, Y, activation="tanh", reduction="mean"):
    """Backpropagated gradients of :func:`mlp_loss`.

    Returns ``(loss, grad_weights, grad_biases)``.
    """
    deriv = _ACTIVATIONS[activation][1]
    outs = forward(weights, biases, X, activation)
    scale = 1.0 / len(X) if reduction == "mean" else 1.0
    err = outs[-1] - Y
    loss = 0.5 * (err * err).sum() * scale
    delta = err * scale
    gw, gb = [None] * len(weights), [None] * len(weights)
    for layer in range(len(weights) - 1, -1, -1):
        gw[layer] = outs[layer].T @ delta
        gb[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ weights[layer].T) * deriv(outs[layer])
    return loss, gw, gb


class MLPRegressor(RegressorMixin, BaseEstimator):
    """Feed-forward network trained by plain mini-batch gradient descent.

    Natively multi-output. Targets are standardized internally (per output,
    statistics of the training set) unless ``standardize_targets=False``;
    predictions are always returned in the original units.

    Parameters
    ----------
    hidden_layers : tuple of int
    activation : {"tanh", "relu"}
    learning_rate : float
    epochs : int
    batch_size : int
        Values >= n give full-batch descent.
    init_seed : int
        Seeds both the weight initialization and the per-epoch shuffles.
    standardize_targets : bool
    """

    def __init__(self, hidden_layers=(32,), activation="tanh", learning_rate=0.05, epochs=300,
                 batch_size=32, init_seed=0, standardize_targets=True):
        self.hidden_layers = hidden_layers
        self.activation = activation
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.init_seed = init_seed
        self.standardize_targets = standardize_targets

    def fit(self, X, y):
        X, Y, was_1d = check_xy(X, y)
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("need learning_rate > 0, batch_size >= 1, epochs >= 0")
        if self.standardize_targets:
            self.y_mean_ = Y.mean(axis=0)
            sd = Y.std(axis=0)
            self.y_scale_ = np.where(sd > 0, sd, 1.0)
        else:
            self.y_mean_ = np.zeros(Y.shape[1])
            self.y_scale_ = np.ones(Y.shape[1])
        T = (Y - self.y_mean_) / self.y_scale_

        sizes = [X.shape[1], *self.hidden_layers, Y.shape[1]]
        weights, biases = init_params(sizes, self.init_seed)
        rng = np.random.default_rng(self.init_seed)
        n = len(X)
        bs = min(self.batch_size, n)
        curve = []
        for _ in range(self.epochs):
            order = rng.permutation(n)
            for start in range(0, n, bs):
                batch = order[start:start + bs]
                _, gw, gb = mlp_gradients(weights, biases, X[batch], T[batch], self.activation)
                for layer in range(len(weights)):
                    weights[layer] -= self.learning_rate * gw[layer]
                    biases[layer] -= self.learning_rate * gb[layer]
            curve.append(mlp_loss(weights, biases, X, T, self.activation))
        self.coefs_, self.intercepts_ = weights, biases
        self.loss_curve_ = np.array(curve)
        self.n_features_in_ = X.shape[1]
        self._y_1d = was_1d
        return self

    def predict(self, X):
        X = check_predict_input(self, X)
        out = forward(self.coefs_, self.intercepts_, X, self.activation)[-1]
        return format_output(out * self.y_scale_ + self.y_mean_, self._y_1d)
