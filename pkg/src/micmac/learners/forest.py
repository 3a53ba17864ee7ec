"""Random forest of Gini decision trees, used for importance-based preselection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from micmac.seeding import rng_for


@dataclass(frozen=True, eq=False)
class Tree:
    feature: np.ndarray  # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # fraction of class 1 in the node
    depth: np.ndarray
    importance: np.ndarray  # unnormalized weighted impurity decrease per feature

    @property
    def max_depth(self) -> int:
        return int(self.depth.max())

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=int)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            cur = node[rows]
            go_left = X[rows, self.feature[cur]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] >= 0
        return self.value[node]


def _gini(n1, n):
    p = n1 / n
    return 2.0 * p * (1.0 - p)


def grow_tree(X: np.ndarray, y: np.ndarray, rng: np.random.Generator, max_depth: int,
              max_features: int) -> Tree:
    """Grow one tree on (X, y); splits at midpoints between distinct sorted values.

    A node becomes a leaf when it is pure, reaches ``max_depth``, or none of its
    sampled features admits a split.
    """
    n, p = X.shape
    m = min(max_features, p)
    feature, threshold, left, right, value, depth = [], [], [], [], [], []
    importance = np.zeros(p)

    def new_node(d, v):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(v)
        depth.append(d)
        return len(feature) - 1

    root_idx = np.arange(n)
    stack = [(root_idx, 0, new_node(0, y.mean()))]
    while stack:
        idx, d, node = stack.pop()
        yi = y[idx]
        nn = len(idx)
        n1 = int(yi.sum())
        if d >= max_depth or n1 == 0 or n1 == nn:
            continue
        feats = rng.choice(p, m, replace=False)
        Xs = X[np.ix_(idx, feats)]
        order = np.argsort(Xs, axis=0, kind="stable")
        xs = np.take_along_axis(Xs, order, 0)
        ys = yi[order]
        left1 = np.cumsum(ys, axis=0)[:-1]
        nl = np.arange(1, nn, dtype=float)[:, None]
        nr = nn - nl
        right1 = n1 - left1
        cost = nl * _gini(left1, nl) + nr * _gini(right1, nr)
        cost[xs[1:] <= xs[:-1]] = np.inf
        flat = int(np.argmin(cost.T))
        fj, pos = divmod(flat, nn - 1)
        best = cost[pos, fj]
        if not np.isfinite(best):
            continue
        lo, hi = xs[pos, fj], xs[pos + 1, fj]
        thr = lo + (hi - lo) / 2.0
        if not lo <= thr < hi:
            thr = lo
        f = int(feats[fj])
        importance[f] += nn * _gini(n1, nn) - best
        col = X[idx, f]
        li, ri = idx[col <= thr], idx[col > thr]
        feature[node] = f
        threshold[node] = thr
        left[node] = new_node(d + 1, y[li].mean())
        right[node] = new_node(d + 1, y[ri].mean())
        stack.append((ri, d + 1, right[node]))
        stack.append((li, d + 1, left[node]))

    return Tree(np.array(feature), np.array(threshold), np.array(left), np.array(right),
                np.array(value), np.array(depth), importance)


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: tuple
    n_features: int
    kind: str = "rf"

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.mean([t.predict_proba(X) for t in self.trees], axis=0)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_proba(X) > 0.5).astype(int)

    def feature_importances(self) -> np.ndarray:
        """Mean impurity decrease, normalized per tree and then overall to sum to 1."""
        total = np.zeros(self.n_features)
        for t in self.trees:
            s = t.importance.sum()
            if s > 0:
                total += t.importance / s
        s = total.sum()
        return total / s if s > 0 else total


def fit_forest(X: np.ndarray, y: np.ndarray, n_trees: int = 100, max_depth: int = 10,
               max_features: int | None = None, seed: int = 0) -> ForestModel:
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    n, p = X.shape
    if max_features is None:
        max_features = math.ceil(math.sqrt(p))
    trees = []
    for t in range(n_trees):
        rng = rng_for(seed, t)
        boot = rng.integers(0, n, n)
        trees.append(grow_tree(X[boot], y[boot], rng, max_depth, max_features))
    return ForestModel(tuple(trees), p)
