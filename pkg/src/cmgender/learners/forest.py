"""Random forest of Gini-impurity decision trees.

Each split is a ``x[feature] >= threshold`` test: rows satisfying it go
right. Leaves predict the majority class, ties going to male (+1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class DecisionTree:
    # internal nodes have feature >= 0; leaves have feature == -1 and value = +/-1
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def depth(self) -> int:
        best = 0
        stack = [(0, 0)]
        while stack:
            node, d = stack.pop()
            if self.feature[node] >= 0:
                stack += [(self.left[node], d + 1), (self.right[node], d + 1)]
            else:
                best = max(best, d)
        return best

    def predict_signs(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        node = np.zeros(len(X), dtype=np.int64)
        while True:
            feat = self.feature[node]
            active = np.flatnonzero(feat >= 0)
            if active.size == 0:
                return self.value[node].astype(int)
            nd = node[active]
            go_right = X[active, feat[active]] >= self.threshold[nd]
            node[active] = np.where(go_right, self.right[nd], self.left[nd])

    def to_dict(self) -> dict:
        return {"feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
                "left": self.left.tolist(), "right": self.right.tolist(),
                "value": self.value.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        return cls(np.asarray(d["feature"], dtype=np.int64),
                   np.asarray(d["threshold"], dtype=float),
                   np.asarray(d["left"], dtype=np.int64),
                   np.asarray(d["right"], dtype=np.int64),
                   np.asarray(d["value"], dtype=np.int64))

    def __eq__(self, other) -> bool:
        return isinstance(other, DecisionTree) and all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("feature", "threshold", "left", "right", "value"))


def gini(n_pos, n):
    """Gini impurity of a node with ``n_pos`` positives among ``n`` rows."""
    p = n_pos / n
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


def _majority(y: np.ndarray) -> int:
    return 1 if np.sum(y > 0) * 2 >= len(y) else -1


def best_split(X: np.ndarray, y: np.ndarray, features: np.ndarray):
    """Lowest weighted-Gini split over ``features``.

    Returns ``(feature, threshold, impurity)`` or ``None`` when no feature
    separates the rows. Ties go to the earlier feature in ``features``, then
    to the smaller threshold.
    """
    n = len(y)
    if n < 2 or len(features) == 0:
        return None
    sub = X[:, features]
    order = np.argsort(sub, axis=0, kind="stable")
    xs = np.take_along_axis(sub, order, axis=0)
    ps = (y[order] > 0).astype(np.int64)
    cum = np.cumsum(ps, axis=0)[:-1]  # positives among the first r rows, r = 1..n-1
    total_pos = int(np.sum(y > 0))
    ln = np.arange(1, n, dtype=float)[:, None]
    rn = n - ln
    lp = cum.astype(float)
    rp = total_pos - lp
    gl = 1.0 - (lp / ln) ** 2 - ((ln - lp) / ln) ** 2
    gr = 1.0 - (rp / rn) ** 2 - ((rn - rp) / rn) ** 2
    w = (ln * gl + rn * gr) / n
    valid = xs[1:] != xs[:-1]
    w = np.where(valid, w, np.inf)
    flat = np.argmin(w.T)  # feature-major so earlier features win ties
    f_pos, r = divmod(int(flat), n - 1)
    if not np.isfinite(w[r, f_pos]):
        return None
    return int(features[f_pos]), float(xs[r + 1, f_pos]), float(w[r, f_pos])


def build_tree(X: np.ndarray, y: np.ndarray, max_depth: int | None = None,
               mtry: int | None = None, rng: np.random.Generator | None = None) -> DecisionTree:
    """Grow one tree on (X, y), y in {+1, -1}.

    At every node ``mtry`` features are drawn without replacement from the
    features that are not constant on that node; ``mtry=None`` uses all of
    them in index order (no randomness needed).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    D = X.shape[1]
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        yn = y[idx]
        value[node] = _majority(yn)
        n_pos = int(np.sum(yn > 0))
        if n_pos in (0, len(yn)) or (max_depth is not None and depth >= max_depth) or D == 0:
            continue
        Xn = X[idx]
        nonconst = np.flatnonzero(Xn.max(axis=0) != Xn.min(axis=0))
        if nonconst.size == 0:
            continue
        if mtry is None or mtry >= nonconst.size:
            cand = nonconst
        else:
            cand = _draw(nonconst, mtry, rng)
        split = best_split(Xn, yn, cand)
        if split is None:
            continue
        f, t, _ = split
        go_right = Xn[:, f] >= t
        feature[node], threshold[node] = f, t
        l, r = new_node(), new_node()
        left[node], right[node] = l, r
        # right pushed first so the left subtree is numbered first
        stack.append((r, idx[go_right], depth + 1))
        stack.append((l, idx[~go_right], depth + 1))

    return DecisionTree(np.asarray(feature, dtype=np.int64), np.asarray(threshold),
                        np.asarray(left, dtype=np.int64), np.asarray(right, dtype=np.int64),
                        np.asarray(value, dtype=np.int64))


def _draw(pool: np.ndarray, k: int, rng: np.random.Generator | None) -> np.ndarray:
    if rng is None:
        return pool[:k]
    return pool[rng.permutation(pool.size)[:k]]


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: tuple[DecisionTree, ...]
    dim_: int
    params: dict

    kind = "rf"

    @property
    def dim(self) -> int:
        return self.dim_

    def votes(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.sum([t.predict_signs(X) for t in self.trees], axis=0)

    def decision(self, X: np.ndarray) -> np.ndarray:
        return self.votes(X).astype(float)

    def predict_signs(self, X: np.ndarray) -> np.ndarray:
        return np.where(self.votes(X) >= 0, 1, -1)

    def to_dict(self) -> dict:
        return {"dim": self.dim_, "params": self.params,
                "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d: dict) -> "ForestModel":
        return cls(tuple(DecisionTree.from_dict(t) for t in d["trees"]), int(d["dim"]),
                   dict(d["params"]))

    def __eq__(self, other) -> bool:
        return (isinstance(other, ForestModel) and self.dim_ == other.dim_
                and self.trees == other.trees)


def resolve_mtry(mtry, D: int) -> int:
    if mtry in (None, "sqrt"):
        return max(1, math.ceil(math.sqrt(D)))
    return int(mtry)


def fit_random_forest(X: np.ndarray, y: np.ndarray, trees: int = 100,
                      max_depth: int | None = None, mtry="sqrt", seed: int = 0,
                      bootstrap: bool = True) -> ForestModel:
    """Bagged Gini trees. Tree ``t`` draws from ``default_rng([seed, t])``,
    so the forest is a pure function of its inputs."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    n, D = X.shape
    if trees < 1:
        raise ValueError("need at least one tree")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise ValueError("random forest needs both classes in the training data")
    m = resolve_mtry(mtry, D)
    if D and m > D:
        raise ValueError(f"mtry={m} exceeds dimension {D}")
    out = []
    for t in range(trees):
        rng = np.random.default_rng([seed, t])
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        out.append(build_tree(X[rows], y[rows], max_depth, m, rng))
    params = {"trees": trees, "max_depth": max_depth, "mtry": m, "seed": seed,
              "bootstrap": bootstrap}
    return ForestModel(tuple(out), D, params)
