"""CART trees stored as flat node arrays.

One builder serves both classification trees (Gini impurity on 0/1 labels)
and the regression trees fitted to logistic-loss gradients in boosting. Both
criteria reduce to maximizing ``sum_c S_c**2 / n_c`` over the two children,
where ``S_c`` is the per-child target sum (plus, for Gini, the sum of the
complementary indicator).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import CorruptModel, EmptyTable

LEAF = -1


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.node_count, dtype=np.int64)
        for i in range(self.node_count):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Index of the leaf reached by every row of X."""
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(len(X), dtype=np.int64)
        active = np.arange(len(X))
        while active.size:
            cur = node[active]
            feat = self.feature[cur]
            inner = feat != LEAF
            active, cur, feat = active[inner], cur[inner], feat[inner]
            if not active.size:
                break
            go_left = X[active, feat] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self, value_key: str = "positive_fraction") -> dict:
        def build(i):
            if self.feature[i] == LEAF:
                return {value_key: float(self.value[i]), "n_samples": int(self.n_samples[i])}
            return {
                "column_index": int(self.feature[i]),
                "threshold": float(self.threshold[i]),
                "left": build(self.left[i]),
                "right": build(self.right[i]),
            }
        return build(0)

    @classmethod
    def from_dict(cls, root: dict, value_key: str = "positive_fraction") -> "Tree":
        feature, threshold, left, right, value, n_samples = [], [], [], [], [], []

        def add(node):
            i = len(feature)
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            value.append(0.0)
            n_samples.append(0)
            if "column_index" in node:
                feature[i] = int(node["column_index"])
                threshold[i] = float(node["threshold"])
                left[i] = add(node["left"])
                right[i] = add(node["right"])
            else:
                value[i] = float(node[value_key])
                n_samples[i] = int(node["n_samples"])
            return i

        try:
            add(root)
        except (KeyError, TypeError, ValueError) as e:
            raise CorruptModel(f"bad tree node: {e}") from None
        return cls(
            np.array(feature, dtype=np.int64), np.array(threshold, dtype=np.float64),
            np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
            np.array(value, dtype=np.float64), np.array(n_samples, dtype=np.int64),
        )


def _best_split(X, target, rows, features, min_leaf, gini):
    """Best (score, feature, threshold) over the candidate features, or None.

    Candidates are visited in ascending column order and only a strictly
    better score replaces the incumbent, so ties go to the lowest column
    index and, within a column, the lowest threshold.
    """
    n = len(rows)
    t_node = target[rows]
    best = None
    lo, hi = min_leaf - 1, n - min_leaf  # left child = sorted[: i + 1], i in [lo, hi)
    if hi <= lo:
        return None
    n_left = np.arange(lo + 1, hi + 1, dtype=np.float64)
    n_right = n - n_left
    for f in features:
        x = X[rows, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        if xs[0] == xs[-1]:
            continue
        csum = np.cumsum(t_node[order])
        total = csum[-1]
        s_left = csum[lo:hi]
        s_right = total - s_left
        if gini:
            score = (s_left ** 2 + (n_left - s_left) ** 2) / n_left \
                + (s_right ** 2 + (n_right - s_right) ** 2) / n_right
        else:
            score = s_left ** 2 / n_left + s_right ** 2 / n_right
        valid = xs[lo:hi] < xs[lo + 1:hi + 1]
        if not valid.any():
            continue
        score = np.where(valid, score, -np.inf)
        i = int(np.argmax(score))
        if best is None or score[i] > best[0]:
            a, b = xs[lo + i], xs[lo + i + 1]
            thr = (a + b) / 2.0
            if not (a <= thr < b):
                thr = a
            best = (float(score[i]), int(f), float(thr))
    return best


def build_tree(
    X: np.ndarray,
    target: np.ndarray,
    *,
    gini: bool,
    min_leaf: int = 1,
    max_depth: Optional[int] = None,
    mtry: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    leaf_value: Optional[Callable[[np.ndarray], float]] = None,
) -> Tree:
    """Grow a tree greedily, depth first, left child before right.

    With ``gini`` the target must be 0/1 and a node stops growing once pure.
    ``mtry`` columns are drawn without replacement at every node (all columns
    when None). ``leaf_value(rows)`` overrides the default leaf value, the
    mean target of the node.
    """
    X = np.asarray(X, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    n, d = X.shape
    if n == 0:
        raise EmptyTable("cannot grow a tree on zero rows")
    if mtry is None or mtry >= d:
        mtry = d
    if mtry < d and rng is None:
        raise ValueError("rng required when mtry < d")
    all_features = np.arange(d)

    feature, threshold, left, right, value, n_samples = [], [], [], [], [], []

    def new_node(rows):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(leaf_value(rows)) if leaf_value else float(target[rows].mean()))
        n_samples.append(len(rows))
        return len(feature) - 1

    root = new_node(np.arange(n))
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, rows, depth = stack.pop()
        m = len(rows)
        if m < 2 * min_leaf or (max_depth is not None and depth >= max_depth):
            continue
        if gini:
            pos = target[rows].sum()
            if pos == 0 or pos == m:
                continue
        feats = all_features if mtry == d else np.sort(rng.choice(d, size=mtry, replace=False))
        split = _best_split(X, target, rows, feats, min_leaf, gini)
        if split is None:
            continue
        _, f, thr = split
        go_left = X[rows, f] <= thr
        lrows, rrows = rows[go_left], rows[~go_left]
        feature[node] = f
        threshold[node] = thr
        left[node] = new_node(lrows)
        right[node] = new_node(rrows)
        # push right first so the left subtree is grown first
        stack.append((right[node], rrows, depth + 1))
        stack.append((left[node], lrows, depth + 1))

    return Tree(
        np.array(feature, dtype=np.int64), np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
        np.array(value, dtype=np.float64), np.array(n_samples, dtype=np.int64),
    )
