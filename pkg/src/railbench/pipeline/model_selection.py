"""Fold planning, inner grid search and the two evaluation schemes.

Nested: an outer k-fold loop estimates generalization error while an inner
k-fold loop, run only on the outer-training rows, picks hyperparameters.
Non-nested: one k-fold plan both picks hyperparameters and reports the
score of the pick, which is the optimistic protocol nested CV guards
against.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from joblib import Parallel, delayed

from ..models import FAMILIES
from ..seeding import derive_seed
from .metrics import mae, mse
from .preprocessing import ScaledRegressor


@dataclass(frozen=True)
class FoldPlan:
    """k disjoint test folds covering range(n). Usable as a scikit-learn ``cv``."""

    n: int
    k: int
    seed: int
    folds: tuple

    def split(self, X=None, y=None, groups=None):
        for i in range(self.k):
            yield self.train_indices(i), self.folds[i]

    def train_indices(self, i: int) -> np.ndarray:
        return np.sort(np.concatenate([f for j, f in enumerate(self.folds) if j != i]))

    def get_n_splits(self, X=None, y=None, groups=None) -> int:
        return self.k

    @property
    def sizes(self) -> list[int]:
        return [len(f) for f in self.folds]


def kfold(n: int, k: int, seed: int = 0) -> FoldPlan:
    """Shuffle ``range(n)`` with ``seed`` and cut it into k contiguous chunks.

    The first ``n % k`` chunks get one extra index.
    """
    if k < 2 or k > n:
        raise ValueError(f"need 2 <= k <= n, got k={k}, n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    base, extra = divmod(n, k)
    folds, start = [], 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append(np.sort(perm[start:start + size]))
        start += size
    return FoldPlan(n, k, int(seed), tuple(folds))


def _plain(value):
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


@dataclass
class ModelSpec:
    """A family name plus the hyperparameters of one candidate."""

    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; known: {', '.join(FAMILIES)}")

    def build(self, scaler=None):
        fam = FAMILIES[self.family]
        est = fam.estimator(**self.params)
        return ScaledRegressor(est, scaler) if fam.scaled else est

    def to_dict(self) -> dict:
        return {k: _plain(v) for k, v in self.params.items()}


def default_grids(families: Sequence[str] | None = None, preset: str = "default") -> dict[str, list[ModelSpec]]:
    names = families or list(FAMILIES)
    return {name: [ModelSpec(name, p) for p in FAMILIES[name].candidates(preset)] for name in names}


def _fit_predict(spec: ModelSpec, X, Y, train, test, scaler=None, stages=None):
    """Validation predictions of ``spec``; with ``stages``, a list of them,
    one per stage count, read off a single fit of the largest count."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        model = spec.build(scaler).fit(X[train], Y[train])
        if stages is None:
            preds = [model.predict(X[test])]
        else:
            staged = list(model.staged_predict(X[test]))
            preds = [staged[min(s, len(staged)) - 1] for s in stages]
    preds = [np.asarray(p, dtype=float).reshape(len(test), -1) for p in preds]
    for p in preds:
        if not np.all(np.isfinite(p)):
            raise FloatingPointError("non-finite predictions")
    return preds if stages is not None else preds[0]


def _shared_fits(grid: Sequence[ModelSpec]) -> list[list[int]]:
    """Group candidates that differ only in their family's stage count.

    A boosted model with n stages is the first n stages of a longer fit, so
    each group needs one fit of its largest member.
    """
    groups = {}
    for c, spec in enumerate(grid):
        staged = FAMILIES[spec.family].staged_param
        if staged is None or staged not in spec.params:
            groups[("single", c)] = [c]
            continue
        rest = tuple(sorted((k, repr(v)) for k, v in spec.params.items() if k != staged))
        groups.setdefault((spec.family, rest), []).append(c)
    return list(groups.values())


@dataclass
class SearchResult:
    best_index: int
    best: ModelSpec
    scores: np.ndarray  # mean validation MSE per candidate, inf if disqualified
    errors: dict


def grid_search(grid: Sequence[ModelSpec], X, Y, plan: FoldPlan, scaler=None) -> SearchResult:
    """Candidate with the lowest mean validation MSE over the folds of ``plan``.

    MSE is averaged over all output columns. Ties keep the earliest candidate.
    A candidate that fails on any fold is disqualified; if all fail the last
    error is raised.
    """
    if len(grid) == 0:
        raise ValueError("empty grid")
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float).reshape(len(X), -1)
    scores = np.full(len(grid), np.inf)
    errors = {}
    for group in _shared_fits(grid):
        fold_scores = {c: [] for c in group}
        try:
            if len(group) == 1:
                for train, test in plan.split():
                    pred = _fit_predict(grid[group[0]], X, Y, train, test, scaler)
                    fold_scores[group[0]].append(float(mse(Y[test], pred)))
            else:
                staged = FAMILIES[grid[group[0]].family].staged_param
                counts = [grid[c].params[staged] for c in group]
                longest = grid[group[int(np.argmax(counts))]]
                for train, test in plan.split():
                    preds = _fit_predict(longest, X, Y, train, test, scaler, stages=counts)
                    for c, pred in zip(group, preds):
                        fold_scores[c].append(float(mse(Y[test], pred)))
        except Exception as exc:  # noqa: BLE001 - disqualify, keep searching
            for c in group:
                errors[c] = exc
            continue
        for c in group:
            scores[c] = float(np.mean(fold_scores[c]))
    if not np.isfinite(scores).any():
        raise RuntimeError(f"every candidate failed: {errors}") from errors[max(errors)]
    best = int(np.argmin(scores))
    return SearchResult(best, grid[best], scores, errors)


@dataclass
class CvReport:
    """Per-family, per-KPI pooled MAE/MSE, scaled by 100 (percent units)."""

    scheme: str
    seed: int
    k: int
    inner_k: int | None
    target_names: list
    grids: dict
    fold_sizes: list
    results: dict
    selections: dict
    disqualified: dict = field(default_factory=dict)
    predictions: dict = field(default=None, compare=False, repr=False)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "seed": self.seed,
            "k": self.k,
            "inner_k": self.inner_k,
            "units": "percent (metric x 100)",
            "target_names": list(self.target_names),
            "grids": self.grids,
            "fold_sizes": self.fold_sizes,
            "results": self.results,
            "selections": self.selections,
            "disqualified": self.disqualified,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "CvReport":
        missing = {"scheme", "seed", "k", "target_names", "results", "selections"} - set(d)
        if missing:
            raise ValueError(f"report is missing {sorted(missing)}")
        if d["scheme"] not in ("nested", "non-nested"):
            raise ValueError(f"unknown scheme {d['scheme']!r}")
        return cls(d["scheme"], d["seed"], d["k"], d.get("inner_k"), list(d["target_names"]),
                   d.get("grids", {}), d.get("fold_sizes", []), d["results"], d["selections"],
                   d.get("disqualified", {}))

    @classmethod
    def from_json(cls, text: str) -> "CvReport":
        return cls.from_dict(json.loads(text))

    def metric(self, family: str, kpi: str, metric: str) -> float | None:
        cell = self.results.get(family)
        return None if cell is None else cell[kpi][metric]


def _pooled_results(Y, pred, target_names):
    m_abs, m_sq = mae(Y, pred, axis=0), mse(Y, pred, axis=0)
    return {t: {"mae": 100.0 * float(a), "mse": 100.0 * float(s)}
            for t, a, s in zip(target_names, m_abs, m_sq)}


def _as_arrays(data, X, Y, target_names):
    if data is not None:
        X, Y = data.X, data.Y
        target_names = target_names or list(data.target_names)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float).reshape(len(X), -1)
    if target_names is None:
        target_names = [f"y{j}" for j in range(Y.shape[1])]
    if len(target_names) != Y.shape[1]:
        raise ValueError("target_names does not match the number of outputs")
    return X, Y, list(target_names)


def select_for_outer_fold(grid, X, Y, outer: FoldPlan, fold: int, inner_k: int = 4, scaler=None):
    """Hyperparameter choice for one outer fold, made from its training rows only."""
    train = outer.train_indices(fold)
    if len(grid) == 1:
        return grid[0]
    inner = kfold(len(train), inner_k, derive_seed(outer.seed, fold))
    return grid_search(grid, X[train], Y[train], inner, scaler).best


def _nested_family(grid, X, Y, outer, inner_k, scaler):
    pred = np.zeros_like(Y)
    chosen = []
    for i, (train, test) in enumerate(outer.split()):
        spec = select_for_outer_fold(grid, X, Y, outer, i, inner_k, scaler)
        pred[test] = _fit_predict(spec, X, Y, train, test, scaler)
        chosen.append(spec.to_dict())
    return pred, chosen


def _nonnested_family(grid, X, Y, plan, scaler):
    best_score, best = np.inf, None
    for spec in grid:
        pred = np.zeros_like(Y)
        fold_scores = []
        try:
            for train, test in plan.split():
                pred[test] = _fit_predict(spec, X, Y, train, test, scaler)
                fold_scores.append(float(mse(Y[test], pred[test])))
        except Exception:  # noqa: BLE001 - disqualified candidate
            continue
        score = float(np.mean(fold_scores))
        if score < best_score:
            best_score, best = score, (pred, spec)
    if best is None:
        raise RuntimeError("every candidate failed")
    return best[0], [best[1].to_dict()] * plan.k


def _run(scheme, grids, X, Y, target_names, plan, inner_k, scaler, n_jobs):
    grids = grids or default_grids()
    names = list(grids)

    def job(name):
        try:
            if scheme == "nested":
                return _nested_family(grids[name], X, Y, plan, inner_k, scaler)
            return _nonnested_family(grids[name], X, Y, plan, scaler)
        except Exception as exc:  # noqa: BLE001 - reported per family
            return exc

    if n_jobs == 1:
        outcomes = [job(n) for n in names]
    else:
        outcomes = Parallel(n_jobs=n_jobs)(delayed(job)(n) for n in names)

    results, selections, disqualified, predictions = {}, {}, {}, {}
    for name, out in zip(names, outcomes):
        if isinstance(out, Exception):
            results[name], selections[name] = None, []
            disqualified[name] = f"{type(out).__name__}: {out}"
            continue
        pred, chosen = out
        results[name] = _pooled_results(Y, pred, target_names)
        selections[name] = chosen
        predictions[name] = pred
    return CvReport(
        scheme=scheme, seed=plan.seed, k=plan.k, inner_k=inner_k if scheme == "nested" else None,
        target_names=target_names, grids={n: [s.to_dict() for s in grids[n]] for n in names},
        fold_sizes=plan.sizes, results=results, selections=selections, disqualified=disqualified,
        predictions=predictions,
    )


def nested_cv(grids: Mapping[str, Sequence[ModelSpec]] | None = None, data=None, *, X=None, Y=None,
              outer_k: int = 6, inner_k: int = 4, seed: int = 0, target_names=None, scaler=None,
              n_jobs: int = 1) -> CvReport:
    """Nested cross-validation of every family in ``grids``.

    Pass either ``data`` (a :class:`~railbench.dataset.Dataset`) or ``X``/``Y``.
    Outer-fold predictions are pooled before MAE/MSE are computed.
    """
    X, Y, target_names = _as_arrays(data, X, Y, target_names)
    if len(X) < outer_k:
        raise ValueError(f"{len(X)} rows cannot fill {outer_k} outer folds")
    plan = kfold(len(X), outer_k, seed)
    return _run("nested", grids, X, Y, target_names, plan, inner_k, scaler, n_jobs)


def nonnested_cv(grids: Mapping[str, Sequence[ModelSpec]] | None = None, data=None, *, X=None, Y=None,
                 k: int = 10, seed: int = 0, target_names=None, scaler=None, n_jobs: int = 1) -> CvReport:
    """Select on k-fold CV MSE and report the selected candidate's own CV score."""
    X, Y, target_names = _as_arrays(data, X, Y, target_names)
    plan = kfold(len(X), k, seed)
    return _run("non-nested", grids, X, Y, target_names, plan, None, scaler, n_jobs)
