"""CART decision trees and a bagged random forest with gini importance.

Split search maximizes gini gain over a fresh random feature subset at each
node. Candidate thresholds are midpoints of adjacent distinct sorted values;
ties break toward the lowest feature index, then the lowest threshold, so a
fitted tree is reproducible against an exhaustive search.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import svgplot


def gini(histogram) -> float:
    """Gini impurity 1 - sum(p_c^2) of a class-count histogram."""
    counts = np.asarray(histogram, dtype=float)
    total = counts.sum()
    if total <= 0:
        raise ValueError("empty histogram")
    p = counts / total
    return float(1.0 - np.sum(p * p))


@dataclass
class TreeNode:
    # leaf payload
    class_histogram: np.ndarray | None = None
    # internal payload
    feature_index: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.class_histogram is not None

    def leaf_proba(self) -> np.ndarray:
        h = self.class_histogram
        return h / h.sum()


def _best_split(X, Y, n_classes, feature_subset, min_leaf):
    """Best (score, feature, threshold) over the subset; None when no valid
    candidate exists. Score is sum(count^2)/n per side, a monotone transform
    of negative weighted child impurity that is exact on integer class
    counts. Gini decrease is never negative, and zero-gain splits are taken
    (a consistent dataset is always memorized, XOR included)."""
    n = len(Y)
    parent_counts = np.bincount(Y, minlength=n_classes).astype(float)
    best = None  # (score, feature, threshold)
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), Y] = 1.0
    for f in feature_subset:
        order = np.argsort(X[:, f], kind="stable")
        v = X[order, f]
        distinct = np.flatnonzero(v[:-1] != v[1:])  # split after position i
        if distinct.size == 0:
            continue
        cum = np.cumsum(onehot[order], axis=0)  # class counts of left side
        n_left = distinct + 1
        n_right = n - n_left
        valid = (n_left >= min_leaf) & (n_right >= min_leaf)
        if not np.any(valid):
            continue
        pos = distinct[valid]
        left_counts = cum[pos]
        right_counts = parent_counts - left_counts
        score = (np.sum(left_counts**2, axis=1) / (pos + 1)
                 + np.sum(right_counts**2, axis=1) / (n - pos - 1))
        k = int(np.argmax(score))  # first max = lowest threshold
        if best is None or score[k] > best[0]:
            thr = (v[pos[k]] + v[pos[k] + 1]) / 2.0
            best = (float(score[k]), int(f), float(thr))
    return best


def fit_tree(X, Y, max_features: int, rng: np.random.Generator,
             min_leaf: int = 1, max_depth: int | None = None,
             n_classes: int | None = None) -> TreeNode:
    """Grow a CART classification tree.

    A fresh feature subset of size ``max_features`` is drawn from ``rng`` at
    each node; growth stops on purity, fewer than ``2 * min_leaf`` rows,
    ``max_depth``, or when no candidate split exists in the drawn subset.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=np.int64)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("X must be a non-empty 2-D matrix")
    if max_features < 1:
        raise ValueError("max_features must be >= 1")
    if n_classes is None:
        n_classes = int(Y.max()) + 1
    n_features = X.shape[1]
    m = min(max_features, n_features)

    def grow(rows, depth):
        y = Y[rows]
        hist = np.bincount(y, minlength=n_classes).astype(float)
        pure = np.count_nonzero(hist) <= 1
        if pure or len(rows) < 2 * min_leaf or (max_depth is not None and depth >= max_depth):
            return TreeNode(class_histogram=hist)
        subset = np.sort(rng.choice(n_features, size=m, replace=False))
        best = _best_split(X[rows], y, n_classes, subset, min_leaf)
        if best is None:
            return TreeNode(class_histogram=hist)
        _, f, thr = best
        go_left = X[rows, f] <= thr
        node = TreeNode(feature_index=f, threshold=thr)
        node.left = grow(rows[go_left], depth + 1)
        node.right = grow(rows[~go_left], depth + 1)
        return node

    return grow(np.arange(len(Y)), 0)


@dataclass
class ForestModel:
    trees: list[TreeNode]
    n_estimators: int
    max_features: int
    seed: int
    feature_names: list[str]
    label_names: list[str]
    oob_indices: list[np.ndarray] = field(default_factory=list)
    min_leaf: int = 1

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def n_classes(self) -> int:
        return len(self.label_names)


def fit_forest(X, Y, n_estimators: int, max_features: int, seed: int,
               min_leaf: int = 1, bootstrap: bool = True,
               feature_names: list[str] | None = None,
               label_names: list[str] | None = None) -> ForestModel:
    """Fit ``n_estimators`` trees on bootstrap samples (per-tree streams seeded
    ``seed + tree index``); out-of-bag row indices are recorded per tree."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=np.int64)
    if n_estimators < 1:
        raise ValueError("n_estimators must be >= 1")
    n, f = X.shape
    n_classes = int(Y.max()) + 1
    if feature_names is None:
        feature_names = [f"x{j}" for j in range(f)]
    if label_names is None:
        label_names = [str(c) for c in range(n_classes)]
    trees, oob = [], []
    for t in range(n_estimators):
        rng = np.random.default_rng(seed + t)
        if bootstrap:
            sample = rng.integers(0, n, size=n)
            held_out = np.setdiff1d(np.arange(n), np.unique(sample))
        else:
            sample = np.arange(n)
            held_out = np.asarray([], dtype=np.int64)
        trees.append(fit_tree(X[sample], Y[sample], min(max_features, f), rng,
                              min_leaf=min_leaf, n_classes=n_classes))
        oob.append(held_out)
    return ForestModel(trees=trees, n_estimators=n_estimators,
                       max_features=min(max_features, f), seed=seed,
                       feature_names=feature_names, label_names=label_names,
                       oob_indices=oob, min_leaf=min_leaf)


def _tree_proba(node: TreeNode, X, out, rows):
    if node.is_leaf:
        out[rows] = node.leaf_proba()
        return
    go_left = X[rows, node.feature_index] <= node.threshold
    _tree_proba(node.left, X, out, rows[go_left])
    _tree_proba(node.right, X, out, rows[~go_left])


def predict_proba(model: ForestModel, X) -> np.ndarray:
    """Mean of per-tree leaf class-frequency vectors; rows sum to 1."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(
            f"expected {model.n_features} columns, got {X.shape}"
        )
    acc = np.zeros((len(X), model.n_classes))
    rows = np.arange(len(X))
    buf = np.empty_like(acc)
    for tree in model.trees:
        _tree_proba(tree, X, buf, rows)
        acc += buf
    return acc / len(model.trees)


def predict(model: ForestModel, X) -> np.ndarray:
    return np.argmax(predict_proba(model, X), axis=1)


def majority_vote(model: ForestModel, X) -> np.ndarray:
    """Plurality over per-tree argmax votes, ties to the lowest class index."""
    X = np.asarray(X, dtype=float)
    votes = np.zeros((len(X), model.n_classes))
    rows = np.arange(len(X))
    buf = np.empty((len(X), model.n_classes))
    for tree in model.trees:
        _tree_proba(tree, X, buf, rows)
        votes[rows, np.argmax(buf, axis=1)] += 1.0
    return np.argmax(votes, axis=1)


@dataclass
class ImportanceReport:
    feature_names: list[str]
    importances: np.ndarray
    all_leaves: bool = False

    def top(self, k: int) -> list[tuple[str, float]]:
        order = np.argsort(-self.importances, kind="stable")[:k]
        return [(self.feature_names[i], float(self.importances[i])) for i in order]

    def to_json(self) -> str:
        return json.dumps(
            {"importances": {n: float(v) for n, v in
                             zip(self.feature_names, self.importances)},
             "all_leaves": self.all_leaves}, indent=2)

    def to_svg(self, k: int = 5, meta: str = "") -> str:
        pairs = self.top(k)
        return svgplot.barh_chart([p[0] for p in pairs], [p[1] for p in pairs],
                                  title=f"top {k} gini importance", meta=meta)


def _accumulate_importance(node: TreeNode, n_root, imp) -> np.ndarray:
    """Post-order walk; returns the node's class histogram while adding each
    split's (node fraction x gain) to its feature."""
    if node.is_leaf:
        return node.class_histogram
    hl = _accumulate_importance(node.left, n_root, imp)
    hr = _accumulate_importance(node.right, n_root, imp)
    h = hl + hr
    n, nl, nr = h.sum(), hl.sum(), hr.sum()
    gain = gini(h) - (nl / n) * gini(hl) - (nr / n) * gini(hr)
    imp[node.feature_index] += (n / n_root) * gain
    return h


def _node_histogram(node: TreeNode) -> np.ndarray:
    if node.is_leaf:
        return node.class_histogram
    return _node_histogram(node.left) + _node_histogram(node.right)


def gini_importance(model: ForestModel) -> ImportanceReport:
    """Mean decrease in impurity per feature, normalized to sum 1.

    All-leaf forests yield a zero report with ``all_leaves`` set. High
    cardinality columns are known to inflate this measure; no bias correction
    is applied.
    """
    total = np.zeros(model.n_features)
    for tree in model.trees:
        imp = np.zeros(model.n_features)
        if not tree.is_leaf:
            _accumulate_importance(tree, _node_histogram(tree).sum(), imp)
        total += imp
    total /= len(model.trees)
    s = total.sum()
    if s <= 0:
        return ImportanceReport(model.feature_names, total, all_leaves=True)
    return ImportanceReport(model.feature_names, total / s)


def _node_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"leaf": [float(v) for v in node.class_histogram]}
    return {"feature": node.feature_index, "threshold": node.threshold,
            "left": _node_to_dict(node.left), "right": _node_to_dict(node.right)}


def _node_from_dict(d: dict) -> TreeNode:
    if "leaf" in d:
        return TreeNode(class_histogram=np.asarray(d["leaf"], dtype=float))
    return TreeNode(feature_index=d["feature"], threshold=d["threshold"],
                    left=_node_from_dict(d["left"]), right=_node_from_dict(d["right"]))


def to_json(model: ForestModel) -> str:
    return json.dumps({
        "kind": "forest",
        "n_estimators": model.n_estimators,
        "max_features": model.max_features,
        "seed": model.seed,
        "min_leaf": model.min_leaf,
        "feature_names": model.feature_names,
        "label_names": model.label_names,
        "oob_indices": [[int(i) for i in o] for o in model.oob_indices],
        "trees": [_node_to_dict(t) for t in model.trees],
    })


def from_json(text: str) -> ForestModel:
    d = json.loads(text)
    return ForestModel(
        trees=[_node_from_dict(t) for t in d["trees"]],
        n_estimators=d["n_estimators"], max_features=d["max_features"],
        seed=d["seed"], feature_names=d["feature_names"],
        label_names=d["label_names"],
        oob_indices=[np.asarray(o, dtype=np.int64) for o in d["oob_indices"]],
        min_leaf=d["min_leaf"])
