"""Path-dependent Shapley attribution for boosted tree ensembles.

Per-tree attributions use the cover-weighted conditional expectation over
decision paths, so the per-class base value plus the attribution row
reconstructs the class margin exactly (local accuracy).
"""

from __future__ import annotations

import numpy as np

from . import gbdt


class _Path:
    __slots__ = ("feature", "zero", "one", "pweight")

    def __init__(self, capacity: int):
        self.feature = np.full(capacity, -1, dtype=np.int64)
        self.zero = np.zeros(capacity)
        self.one = np.zeros(capacity)
        self.pweight = np.zeros(capacity)

    def copy(self) -> "_Path":
        p = _Path(self.feature.size)
        p.feature[:] = self.feature
        p.zero[:] = self.zero
        p.one[:] = self.one
        p.pweight[:] = self.pweight
        return p


def _extend(path: _Path, depth: int, zero: float, one: float, feature: int) -> None:
    path.feature[depth] = feature
    path.zero[depth] = zero
    path.one[depth] = one
    path.pweight[depth] = 1.0 if depth == 0 else 0.0
    for i in range(depth - 1, -1, -1):
        path.pweight[i + 1] += one * path.pweight[i] * (i + 1) / (depth + 1)
        path.pweight[i] = zero * path.pweight[i] * (depth - i) / (depth + 1)


def _unwind(path: _Path, depth: int, index: int) -> None:
    one = path.one[index]
    zero = path.zero[index]
    carry = path.pweight[depth]
    for i in range(depth - 1, -1, -1):
        if one != 0.0:
            tmp = path.pweight[i]
            path.pweight[i] = carry * (depth + 1) / ((i + 1) * one)
            carry = tmp - path.pweight[i] * zero * (depth - i) / (depth + 1)
        else:
            path.pweight[i] = path.pweight[i] * (depth + 1) / (zero * (depth - i))
    for i in range(index, depth):
        path.feature[i] = path.feature[i + 1]
        path.zero[i] = path.zero[i + 1]
        path.one[i] = path.one[i + 1]


def _unwound_sum(path: _Path, depth: int, index: int) -> float:
    one = path.one[index]
    zero = path.zero[index]
    carry = path.pweight[depth]
    total = 0.0
    for i in range(depth - 1, -1, -1):
        if one != 0.0:
            tmp = carry * (depth + 1) / ((i + 1) * one)
            total += tmp
            carry = path.pweight[i] - tmp * zero * (depth - i) / (depth + 1)
        else:
            total += path.pweight[i] * (depth + 1) / (zero * (depth - i))
    return total


def _recurse(tree: gbdt.Tree, x: np.ndarray, phi: np.ndarray, node: int,
             path: _Path, depth: int, zero: float, one: float, feature: int) -> None:
    path = path.copy()
    _extend(path, depth, zero, one, feature)
    if tree.feature[node] < 0:
        leaf_value = tree.value[node]
        for i in range(1, depth + 1):
            w = _unwound_sum(path, depth, i)
            phi[path.feature[i]] += w * (path.one[i] - path.zero[i]) * leaf_value
        return
    split_feature = int(tree.feature[node])
    left, right = int(tree.left[node]), int(tree.right[node])
    hot, cold = (left, right) if x[split_feature] <= tree.threshold[node] else (right, left)
    node_cover = tree.cover[node]
    incoming_zero = 1.0
    incoming_one = 1.0
    for k in range(1, depth + 1):
        if path.feature[k] == split_feature:
            incoming_zero = path.zero[k]
            incoming_one = path.one[k]
            _unwind(path, depth, k)
            depth -= 1
            break
    _recurse(tree, x, phi, hot, path, depth + 1,
             incoming_zero * tree.cover[hot] / node_cover, incoming_one, split_feature)
    _recurse(tree, x, phi, cold, path, depth + 1,
             incoming_zero * tree.cover[cold] / node_cover, 0.0, split_feature)


def _tree_depth(tree: gbdt.Tree) -> int:
    depth = 0
    stack = [(0, 0)]
    while stack:
        node, d = stack.pop()
        depth = max(depth, d)
        if tree.feature[node] >= 0:
            stack.append((int(tree.left[node]), d + 1))
            stack.append((int(tree.right[node]), d + 1))
    return depth


def shap_single_tree(tree: gbdt.Tree, x: np.ndarray, n_features: int) -> np.ndarray:
    phi = np.zeros(n_features)
    _recurse(tree, x, phi, 0, _Path(_tree_depth(tree) + 2), 0, 1.0, 1.0, -1)
    return phi


def tree_expected_value(tree: gbdt.Tree) -> float:
    """Cover-weighted mean leaf value (the conditional expectation at the root)."""
    total = 0.0
    stack = [(0, 1.0)]
    while stack:
        node, weight = stack.pop()
        if tree.feature[node] < 0:
            total += weight * tree.value[node]
            continue
        cover = tree.cover[node]
        stack.append((int(tree.left[node]), weight * tree.cover[int(tree.left[node])] / cover))
        stack.append((int(tree.right[node]), weight * tree.cover[int(tree.right[node])] / cover))
    return total


def tree_shap(ensemble: gbdt.BoostedEnsemble, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Attributions for one input row.

    Returns (phi, base): phi has shape (K, F), base has shape (K,), and
    base[k] + phi[k].sum() equals the class margin F_k(x).
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    n_features = ensemble.n_features or x.size
    k = ensemble.n_classes
    phi = np.zeros((k, n_features))
    base = ensemble.base_score.astype(np.float64).copy()
    for kk in range(k):
        for tree in ensemble.trees[kk][: ensemble.best_iteration]:
            phi[kk] += shap_single_tree(tree, x, n_features)
            base[kk] += tree_expected_value(tree)
    return phi, base


def mean_abs_attribution(ensemble: gbdt.BoostedEnsemble, x: np.ndarray,
                         max_rows: int = 128, seed: int = 0) -> np.ndarray:
    """Mean |phi| per class and feature over (at most max_rows) input rows."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if n > max_rows:
        rng = np.random.default_rng(seed)
        rows = np.sort(rng.choice(n, size=max_rows, replace=False))
        x = x[rows]
    total = np.zeros((ensemble.n_classes, ensemble.n_features or x.shape[1]))
    for row in x:
        phi, _ = tree_shap(ensemble, row)
        total += np.abs(phi)
    return total / x.shape[0]
