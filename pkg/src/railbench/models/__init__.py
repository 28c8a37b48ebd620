"""Regressor families, all following the scikit-learn estimator protocol.

``FAMILIES`` maps the short family name used on the command line to its
estimator class, whether its inputs are standardized, and the default
hyperparameter grid searched during model selection.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from ._base import PerOutputRegressor, model_from_dict, model_from_json, model_to_dict, model_to_json
from .boosting import AdaBoostR2Regressor, GradientBoostingRegressor, ObliviousBoostingRegressor, weighted_median
from .kernels import KernelRidgeRegressor, SupportVectorRegressor, kernel_matrix, smo_svr, svr_dual_objective
from .mlp import MLPRegressor, forward, init_params, mlp_gradients, mlp_loss
from .neighbors import KNNRegressor

ESTIMATORS = {cls.__name__: cls for cls in (
    AdaBoostR2Regressor, GradientBoostingRegressor, ObliviousBoostingRegressor,
    SupportVectorRegressor, MLPRegressor, KNNRegressor, KernelRidgeRegressor,
)}


def expand_grid(**axes) -> list[dict]:
    """Cartesian product of the keyword axes, last axis varying fastest."""
    keys = list(axes)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(axes[k] for k in keys))]


@dataclass(frozen=True)
class Family:
    name: str
    label: str
    estimator: type
    scaled: bool
    grid: tuple
    fast_grid: tuple
    staged_param: str | None = None  # candidates differing only here share one fit

    def candidates(self, preset: str = "default") -> list[dict]:
        return [dict(p) for p in (self.grid if preset == "default" else self.fast_grid)]


FAMILIES = {f.name: f for f in (
    Family("abr", "ABR", AdaBoostR2Regressor, False,
           tuple(expand_grid(n_estimators=[50, 100], base_tree_depth=[3, 4], loss=["linear", "square"])),
           tuple(expand_grid(n_estimators=[10], base_tree_depth=[2, 3])), staged_param="n_estimators"),
    Family("gbr", "GBR", GradientBoostingRegressor, False,
           tuple(expand_grid(n_estimators=[50, 100, 200], max_depth=[2, 3], learning_rate=[0.05, 0.1])),
           tuple(expand_grid(n_estimators=[20], max_depth=[2, 3], learning_rate=[0.1])), staged_param="n_estimators"),
    Family("cbr", "CBR", ObliviousBoostingRegressor, False,
           tuple(expand_grid(n_estimators=[100, 200], learning_rate=[0.05, 0.1], depth=[4, 6])),
           tuple(expand_grid(n_estimators=[20], learning_rate=[0.1], depth=[3, 4])), staged_param="n_estimators"),
    Family("svr", "SVR", SupportVectorRegressor, True,
           tuple(expand_grid(c=[1.0, 10.0, 100.0], epsilon=[0.01, 0.1])),
           tuple(expand_grid(c=[1.0, 10.0], epsilon=[0.1]))),
    Family("mlp", "MLP", MLPRegressor, True,
           tuple(expand_grid(hidden_layers=[(16,), (32,), (16, 16)], learning_rate=[0.01, 0.05])),
           tuple(expand_grid(hidden_layers=[(8,)], learning_rate=[0.05], epochs=[50]))),
    Family("knnr", "KNNR", KNNRegressor, True,
           tuple(expand_grid(k=[1, 3, 5, 7])),
           tuple(expand_grid(k=[1, 3]))),
    Family("krr", "KRR", KernelRidgeRegressor, True,
           tuple(expand_grid(lam=[1e-3, 1e-2, 1e-1, 1.0], gamma=[0.5, 2.0])),
           tuple(expand_grid(lam=[1e-2, 1e-1]))),
)}

FAMILY_ORDER = tuple(FAMILIES)

__all__ = [
    "AdaBoostR2Regressor", "ESTIMATORS", "FAMILIES", "FAMILY_ORDER", "Family", "GradientBoostingRegressor",
    "KNNRegressor", "KernelRidgeRegressor", "MLPRegressor", "ObliviousBoostingRegressor", "PerOutputRegressor",
    "SupportVectorRegressor", "expand_grid", "forward", "init_params", "kernel_matrix", "mlp_gradients",
    "mlp_loss", "model_from_dict", "model_from_json", "model_to_dict", "model_to_json", "smo_svr",
    "svr_dual_objective", "weighted_median",
]
