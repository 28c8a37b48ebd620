"""Array-backed regression trees used by the boosting ensembles.

Splits are found by an exact scan over the sorted unique values of each
feature, thresholds sit at midpoints, and the criterion is the weighted
sum of squared errors of the children. Ties go to the lowest feature index
and then the lowest threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_GAIN_EPS = 1e-12


@dataclass
class Tree:
    """Binary tree in flat arrays; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depths = np.zeros(self.node_count, dtype=int)
        for i in range(self.node_count):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        while True:
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                return node
            idx = np.flatnonzero(inner)
            go_left = X[idx, f[idx]] <= self.threshold[node[idx]]
            node[idx] = np.where(go_left, self.left[node[idx]], self.right[node[idx]])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("feature", "threshold", "left", "right", "value")}

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(np.asarray(d["feature"], dtype=np.int64), np.asarray(d["threshold"], dtype=float),
                   np.asarray(d["left"], dtype=np.int64), np.asarray(d["right"], dtype=np.int64),
                   np.asarray(d["value"], dtype=float))


def _weighted_sse(sw, swy, swy2):
    """SSE around the weighted mean from the three weighted sums; 0 if empty."""
    return np.where(sw > 0, swy2 - swy * swy / np.where(sw > 0, sw, 1.0), 0.0)


def _first_min(sse, tol, axis=-1):
    """Lowest index whose value is within ``tol`` of the minimum, so that
    rounding noise cannot override the tie rule."""
    return np.argmax(sse <= np.min(sse, axis=axis, keepdims=True) + tol, axis=axis)


class FeatureBins:
    """Sorted unique values of each feature and every row's rank among them.

    Node statistics are then per-value sums, so the exact scan costs
    O(rows + unique values) per feature and the sort happens once per fit.
    """

    def __init__(self, X: np.ndarray):
        self.values, self.codes = [], []
        for f in range(X.shape[1]):
            u, c = np.unique(X[:, f], return_inverse=True)
            self.values.append(u)
            self.codes.append(c.ravel())


def _node_stats(nid, m, y, w):
    sw = np.bincount(nid, weights=w, minlength=m)
    swy = np.bincount(nid, weights=w * y, minlength=m)
    swy2 = np.bincount(nid, weights=w * y * y, minlength=m)
    return sw, swy, swy2


def _level_splits(bins, rows, nid, m, yr, wr, min_samples_leaf):
    """Best split of each of ``m`` nodes at once.

    Entry e is sample ``rows[e]`` with target ``yr[e]`` and weight ``wr[e]``
    sitting in node ``nid[e]``. Returns arrays (feature, threshold,
    children_sse); feature is -1 where no split lowers the node SSE.
    """
    sw, swy, swy2 = _node_stats(nid, m, yr, wr)
    n_node = np.bincount(nid, minlength=m)
    parent = _weighted_sse(sw, swy, swy2)
    tol = _GAIN_EPS * np.maximum(1.0, np.abs(parent))
    best_f = np.full(m, -1)
    best_t = np.zeros(m)
    best_sse = np.full(m, np.inf)
    for f, (vals, codes) in enumerate(zip(bins.values, bins.codes)):
        size = len(vals)
        if size < 2:
            continue
        key = nid * size + codes[rows]
        shape = (m, size)
        cnt = np.bincount(key, minlength=m * size).reshape(shape)
        cn = cnt.cumsum(1)
        cw = np.bincount(key, weights=wr, minlength=m * size).reshape(shape).cumsum(1)
        cwy = np.bincount(key, weights=wr * yr, minlength=m * size).reshape(shape).cumsum(1)
        cwy2 = np.bincount(key, weights=wr * yr * yr, minlength=m * size).reshape(shape).cumsum(1)
        # a split after value b is only distinct if b is present in the node;
        # its threshold is the midpoint to the next present value
        right_n = n_node[:, None] - cn
        valid = (cnt > 0) & (cn >= min_samples_leaf) & (right_n >= min_samples_leaf) & (right_n > 0)
        sse = (_weighted_sse(cw, cwy, cwy2)
               + _weighted_sse(sw[:, None] - cw, swy[:, None] - cwy, swy2[:, None] - cwy2))
        sse = np.where(valid, sse, np.inf)
        ok = valid.any(axis=1)
        i = _first_min(sse, tol[:, None], axis=1)
        cand = sse[np.arange(m), i]
        present = np.where(cnt > 0, np.arange(size), size)
        next_present = np.minimum.accumulate(present[:, ::-1], axis=1)[:, ::-1]
        nxt = next_present[np.arange(m), np.minimum(i + 1, size - 1)]
        better = ok & (cand < best_sse - tol)
        best_f = np.where(better, f, best_f)
        best_t = np.where(better, 0.5 * (vals[i] + vals[np.minimum(nxt, size - 1)]), best_t)
        best_sse = np.where(better, cand, best_sse)
    gain = (best_f >= 0) & (parent - best_sse > tol)
    return np.where(gain, best_f, -1), best_t, best_sse


def best_split(X, y, w, min_samples_leaf=1):
    """Best (feature, threshold, children_sse) for one node, or None.

    A split is only returned when it lowers the node's weighted SSE.
    """
    X = np.asarray(X, dtype=float)
    n = len(X)
    f, t, sse = _level_splits(FeatureBins(X), np.arange(n), np.zeros(n, dtype=np.int64), 1,
                              np.asarray(y, dtype=float), np.asarray(w, dtype=float), min_samples_leaf)
    return None if f[0] < 0 else (int(f[0]), float(t[0]), float(sse[0]))


def _stack_targets(Y, W):
    """(q, n) targets and weights flattened output-major into entries."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    q, n = Y.shape
    W = np.ones((q, n)) if W is None else np.broadcast_to(np.asarray(W, dtype=float), (q, n))
    return Y.ravel(), W.ravel(), np.tile(np.arange(n), q), np.repeat(np.arange(q), n)


def build_trees(X, Y, weights=None, max_depth=3, min_samples_leaf=1, bins=None) -> list[Tree]:
    """One CART regression tree per row of ``Y`` (shape (q, n)).

    The q trees are independent; growing them together, breadth-first,
    only batches the work. Leaves hold weighted means. ``bins`` may carry a
    :class:`FeatureBins` of ``X`` reused across many calls.
    """
    bins = bins or FeatureBins(X)
    yv, wv, rows, out = _stack_targets(Y, weights)
    q = int(out[-1]) + 1
    trees = [dict(feature=[-1], threshold=[0.0], left=[-1], right=[-1], value=[0.0]) for _ in range(q)]
    frontier = [(j, 0) for j in range(q)]  # (output, node) of each open node
    nid = out.copy()  # frontier position of each entry
    for depth in range(max_depth + 1):
        m = len(frontier)
        sw, swy, _ = _node_stats(nid, m, yv, wv)
        for k, (j, node) in enumerate(frontier):
            trees[j]["value"][node] = float(swy[k] / sw[k]) if sw[k] > 0 else float(yv[nid == k].mean())
        if depth == max_depth:
            break
        f, t, _ = _level_splits(bins, rows, nid, m, yv, wv, min_samples_leaf)
        f = np.where(np.bincount(nid, minlength=m) >= 2 * min_samples_leaf, f, -1)
        child = np.full((m, 2), -1)
        new_frontier = []
        for k, (j, node) in enumerate(frontier):
            if f[k] < 0:
                continue
            tr = trees[j]
            tr["feature"][node], tr["threshold"][node] = int(f[k]), float(t[k])
            for side, link in ((0, "left"), (1, "right")):
                child[k, side] = len(new_frontier)
                tr[link][node] = len(tr["feature"])
                new_frontier.append((j, len(tr["feature"])))
                for key, blank in (("feature", -1), ("threshold", 0.0), ("left", -1), ("right", -1), ("value", 0.0)):
                    tr[key].append(blank)
        if not new_frontier:
            break
        keep = f[nid] >= 0
        rows, nid, yv, wv = rows[keep], nid[keep], yv[keep], wv[keep]
        goes_right = X[rows, f[nid]] > t[nid]
        nid = child[nid, goes_right.astype(np.int64)]
        frontier = new_frontier
    return [Tree(np.array(tr["feature"], dtype=np.int64), np.array(tr["threshold"], dtype=float),
                 np.array(tr["left"], dtype=np.int64), np.array(tr["right"], dtype=np.int64),
                 np.array(tr["value"], dtype=float)) for tr in trees]


def build_tree(X, y, sample_weight=None, max_depth=3, min_samples_leaf=1, bins=None) -> Tree:
    """CART regression tree with weighted-mean leaves; see :func:`build_trees`."""
    w = None if sample_weight is None else np.asarray(sample_weight, dtype=float)[None, :]
    return build_trees(X, np.asarray(y, dtype=float)[None, :], w, max_depth, min_samples_leaf, bins)[0]


@dataclass
class ObliviousTree:
    """Symmetric tree: level l tests ``X[:, features[l]] > thresholds[l]``.

    The leaf index is the bit pattern of the level outcomes, level 0 being the
    least significant bit.
    """

    features: np.ndarray
    thresholds: np.ndarray
    leaf_values: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        leaf = np.zeros(len(X), dtype=np.int64)
        for level, (f, t) in enumerate(zip(self.features, self.thresholds)):
            leaf |= (X[:, f] > t).astype(np.int64) << level
        return leaf

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.leaf_values[self.apply(X)]

    def to_dict(self) -> dict:
        return {"features": self.features.tolist(), "thresholds": self.thresholds.tolist(),
                "leaf_values": self.leaf_values.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ObliviousTree":
        return cls(np.asarray(d["features"], dtype=np.int64), np.asarray(d["thresholds"], dtype=float),
                   np.asarray(d["leaf_values"], dtype=float))


def build_oblivious_trees(X, Y, depth, bins=None) -> list[ObliviousTree]:
    """One symmetric tree per row of ``Y`` (shape (q, n)).

    Each tree grows level by level, choosing the one (feature, threshold)
    that minimizes its SSE summed over every current leaf, and stops early
    when no level split lowers that total.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    q, n = Y.shape
    bins = bins or FeatureBins(X)
    leaf = np.zeros((q, n), dtype=np.int64)
    features = [[] for _ in range(q)]
    thresholds = [[] for _ in range(q)]
    current = np.array([_weighted_sse(float(n), y.sum(), (y * y).sum()) for y in Y])
    active = np.ones(q, dtype=bool)
    yv, y2v = Y.ravel(), (Y * Y).ravel()
    for level in range(depth):
        n_leaves = 1 << level
        tol = _GAIN_EPS * np.maximum(1.0, np.abs(current))
        best_f = np.full(q, -1)
        best_t = np.zeros(q)
        best_sse = np.full(q, np.inf)
        base = (np.arange(q)[:, None] * n_leaves + leaf).ravel()
        for f, (vals, codes) in enumerate(zip(bins.values, bins.codes)):
            size = len(vals)
            if size < 2:
                continue
            # per (output, leaf, value) sums, cumulated along the value axis
            key = base * size + np.tile(codes, q)
            shape = (q, n_leaves, size)
            cw = np.bincount(key, minlength=q * n_leaves * size).reshape(shape).cumsum(2)
            cwy = np.bincount(key, weights=yv, minlength=q * n_leaves * size).reshape(shape).cumsum(2)
            cwy2 = np.bincount(key, weights=y2v, minlength=q * n_leaves * size).reshape(shape).cumsum(2)
            lw, lwy, lwy2 = cw[..., :-1], cwy[..., :-1], cwy2[..., :-1]
            rw, rwy, rwy2 = cw[..., -1:] - lw, cwy[..., -1:] - lwy, cwy2[..., -1:] - lwy2
            sse = (_weighted_sse(lw, lwy, lwy2) + _weighted_sse(rw, rwy, rwy2)).sum(axis=1)
            i = _first_min(sse, tol[:, None], axis=1)
            cand = sse[np.arange(q), i]
            better = cand < best_sse - tol
            best_f = np.where(better, f, best_f)
            best_t = np.where(better, 0.5 * (vals[i] + vals[i + 1]), best_t)
            best_sse = np.where(better, cand, best_sse)
        active &= (best_f >= 0) & (current - best_sse > tol)
        if not active.any():
            break
        for j in np.flatnonzero(active):
            features[j].append(int(best_f[j]))
            thresholds[j].append(float(best_t[j]))
            leaf[j] |= (X[:, best_f[j]] > best_t[j]).astype(np.int64) << level
            current[j] = best_sse[j]
    trees = []
    for j in range(q):
        n_leaves = 1 << len(features[j])
        counts = np.bincount(leaf[j], minlength=n_leaves)
        sums = np.bincount(leaf[j], weights=Y[j], minlength=n_leaves)
        values = np.divide(sums, counts, out=np.zeros(n_leaves), where=counts > 0)
        trees.append(ObliviousTree(np.array(features[j], dtype=np.int64),
                                   np.array(thresholds[j], dtype=float), values))
    return trees


def build_oblivious_tree(X, y, depth, bins=None) -> ObliviousTree:
    """Symmetric regression tree; see :func:`build_oblivious_trees`."""
    return build_oblivious_trees(X, np.asarray(y, dtype=float)[None, :], depth, bins)[0]
