"""Random forest of gini-split decision trees with bootstrap resampling.

Each tree trains on a bootstrap resample and considers a random
sqrt(n_features) subset of features at every split.  The forest score for a
row is the fraction of trees whose leaf majority votes genuine.
"""

from __future__ import annotations

import numpy as np

_LEAF = -1


class Tree:
    """Flat-array binary tree: internal nodes route on feature/threshold,
    leaves carry the majority vote (1 = genuine)."""

    __slots__ = ("feature", "threshold", "left", "right", "vote")

    def __init__(self, feature, threshold, left, right, vote):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.vote = np.asarray(vote, dtype=np.float64)

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Vectorized routing of all rows to their leaf votes."""
        node = np.zeros(x.shape[0], dtype=np.int64)
        active = self.feature[node] != _LEAF
        while active.any():
            idx = np.flatnonzero(active)
            n = node[idx]
            goes_left = x[idx, self.feature[n]] <= self.threshold[n]
            node[idx] = np.where(goes_left, self.left[n], self.right[n])
            active = self.feature[node] != _LEAF
        return self.vote[node]


def _gini_split(values: np.ndarray, labels: np.ndarray):
    """Best threshold for one feature by gini impurity; returns
    (impurity, threshold) or None when the feature is constant."""
    order = np.argsort(values, kind="stable")
    v = values[order]
    lab = labels[order]
    n = len(v)
    # Candidate cuts between distinct consecutive values.
    distinct = np.flatnonzero(v[1:] > v[:-1])
    if len(distinct) == 0:
        return None
    ones_left = np.cumsum(lab)[distinct]
    n_left = distinct + 1.0
    n_right = n - n_left
    ones_right = lab.sum() - ones_left
    p_left = ones_left / n_left
    p_right = ones_right / n_right
    gini = (
        n_left * (2.0 * p_left * (1.0 - p_left))
        + n_right * (2.0 * p_right * (1.0 - p_right))
    ) / n
    best = int(np.argmin(gini))
    cut = distinct[best]
    threshold = 0.5 * (v[cut] + v[cut + 1])
    return float(gini[best]), float(threshold)


def _build_tree(x: np.ndarray, y: np.ndarray, n_candidates: int,
                min_samples_split: int, rng: np.random.Generator) -> Tree:
    feature, threshold, left, right, vote = [], [], [], [], []

    def new_node():
        feature.append(_LEAF)
        threshold.append(0.0)
        left.append(_LEAF)
        right.append(_LEAF)
        vote.append(0.0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(len(y)))]
    n_features = x.shape[1]
    while stack:
        node, idx = stack.pop()
        labels = y[idx]
        ones = labels.sum()
        if ones >= len(labels) - ones:
            vote[node] = 1.0  # ties vote genuine, matching the decision rule
        if len(idx) < min_samples_split or ones == 0 or ones == len(labels):
            continue
        candidates = rng.choice(n_features, size=n_candidates, replace=False)
        best = None
        for f in candidates:
            split = _gini_split(x[idx, f], labels)
            if split is None:
                continue
            impurity, cut = split
            if best is None or impurity < best[0]:
                best = (impurity, int(f), cut)
        if best is None:
            continue
        _, f, cut = best
        goes_left = x[idx, f] <= cut
        feature[node] = f
        threshold[node] = cut
        left[node] = new_node()
        right[node] = new_node()
        stack.append((right[node], idx[~goes_left]))
        stack.append((left[node], idx[goes_left]))
    return Tree(feature, threshold, left, right, vote)


class ForestState:
    """A fitted forest; score = genuine-vote fraction across trees."""

    def __init__(self, trees):
        self.trees = list(trees)

    def scores(self, x: np.ndarray) -> np.ndarray:
        votes = np.zeros(x.shape[0])
        for tree in self.trees:
            votes += tree.predict(x)
        return votes / len(self.trees)


def fit_forest(x: np.ndarray, y01: np.ndarray, n_trees: int = 100,
               max_features: str = "sqrt", bootstrap: bool = True,
               min_samples_split: int = 2, seed: int = 0) -> ForestState:
    rng = np.random.default_rng(seed)
    n, d = x.shape
    if max_features == "sqrt":
        n_candidates = max(1, int(round(np.sqrt(d))))
    else:
        n_candidates = min(d, int(max_features))
    trees = []
    for _ in range(n_trees):
        if bootstrap:
            idx = rng.integers(0, n, size=n)
            xb, yb = x[idx], y01[idx]
        else:
            xb, yb = x, y01
        trees.append(_build_tree(xb, yb, n_candidates, min_samples_split, rng))
    return ForestState(trees)
