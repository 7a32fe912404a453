"""Histogram-based multi-class gradient boosting with softmax probabilities.

One regression tree per class per round, fit to the gradient/Hessian of the
class-weighted cross-entropy. Split gain follows the regularized Newton
objective; leaf values are -G/(H + lambda) scaled by the learning rate.
Early stopping monitors weighted cross-entropy on an internal stratified
holdout carved from the training rows, keeping outer validation untouched.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..fusion import Scaler
from .objective import ClassWeights, grad_hess, softmax, weighted_ce


@dataclass
class TrainConfig:
    n_trees: int = 2000
    learning_rate: float = 0.05
    max_depth: int = 8
    min_child_weight: float = 2.0
    subsample: float = 0.9
    colsample: float = 0.8
    l2_lambda: float = 2.0
    early_stopping_rounds: int = 20
    n_bins: int = 256
    seed: int = 42

    def __post_init__(self):
        if min(self.n_trees, self.learning_rate, self.max_depth, self.min_child_weight,
               self.l2_lambda, self.early_stopping_rounds, self.n_bins) <= 0:
            raise ValueError("all TrainConfig values must be positive")
        if not (0 < self.subsample <= 1 and 0 < self.colsample <= 1):
            raise ValueError("subsample and colsample must lie in (0, 1]")


class FeatureBins:
    """Per-feature split candidates from weighted quantiles of training rows.

    Cut values are midpoints between adjacent distinct feature values, so
    binned splits (bin <= b) and raw splits (x <= cuts[b]) agree exactly.
    """

    def __init__(self, cuts: list[np.ndarray]):
        self.cuts = cuts
        self.n_cuts = np.array([c.size for c in cuts], dtype=np.int64)

    @staticmethod
    def build(x: np.ndarray, sample_weight: np.ndarray, n_bins: int) -> "FeatureBins":
        n, f = x.shape
        cuts: list[np.ndarray] = []
        for j in range(f):
            v = x[:, j]
            order = np.argsort(v, kind="stable")
            sv, sw = v[order], sample_weight[order]
            uniq, start = np.unique(sv, return_index=True)
            if uniq.size <= 1:
                cuts.append(np.empty(0))
                continue
            if uniq.size <= n_bins:
                cuts.append((uniq[:-1] + uniq[1:]) / 2.0)
                continue
            cum = np.cumsum(sw)
            # cumulative weight through the last occurrence of each unique value
            upto = cum[np.append(start[1:] - 1, n - 1)]
            targets = upto[-1] * np.arange(1, n_bins) / n_bins
            pos = np.searchsorted(upto, targets, side="left")
            pos = np.unique(np.clip(pos, 0, uniq.size - 2))
            cuts.append((uniq[pos] + uniq[pos + 1]) / 2.0)
        return FeatureBins(cuts)

    def bin_matrix(self, x: np.ndarray) -> np.ndarray:
        n, f = x.shape
        out = np.empty((n, f), dtype=np.int64)
        for j in range(f):
            out[:, j] = np.searchsorted(self.cuts[j], x[:, j], side="left")
        return out


@dataclass
class Tree:
    """Flat-array binary tree; leaves have feature == -1."""

    feature: np.ndarray    # (nodes,) int32
    threshold: np.ndarray  # (nodes,) float64; raw-value cut
    left: np.ndarray       # (nodes,) int32
    right: np.ndarray      # (nodes,) int32
    value: np.ndarray      # (nodes,) float64; leaf output (learning rate applied)
    cover: np.ndarray      # (nodes,) float64; Hessian mass seen in training

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] < 0

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Vectorized routing of raw-feature rows to leaf values."""
        n = x.shape[0]
        out = np.empty(n)
        stack = [(0, np.arange(n))]
        while stack:
            node, rows = stack.pop()
            if rows.size == 0:
                continue
            if self.feature[node] < 0:
                out[rows] = self.value[node]
                continue
            go_left = x[rows, self.feature[node]] <= self.threshold[node]
            stack.append((int(self.right[node]), rows[~go_left]))
            stack.append((int(self.left[node]), rows[go_left]))
        return out

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "cover": self.cover.tolist(),
        }

    @staticmethod
    def from_dict(d: dict) -> "Tree":
        return Tree(
            feature=np.asarray(d["feature"], dtype=np.int32),
            threshold=np.asarray(d["threshold"], dtype=np.float64),
            left=np.asarray(d["left"], dtype=np.int32),
            right=np.asarray(d["right"], dtype=np.int32),
            value=np.asarray(d["value"], dtype=np.float64),
            cover=np.asarray(d["cover"], dtype=np.float64),
        )


class _TreeBuilder:
    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []
        self.cover: list[float] = []
        self.cut_index: list[int] = []  # histogram cut per internal node

    def add_node(self) -> int:
        for arr, fill in ((self.feature, -1), (self.threshold, 0.0), (self.left, -1),
                          (self.right, -1), (self.value, 0.0), (self.cover, 0.0),
                          (self.cut_index, -1)):
            arr.append(fill)
        return len(self.feature) - 1

    def finish(self) -> tuple[Tree, np.ndarray]:
        tree = Tree(
            feature=np.asarray(self.feature, dtype=np.int32),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            left=np.asarray(self.left, dtype=np.int32),
            right=np.asarray(self.right, dtype=np.int32),
            value=np.asarray(self.value, dtype=np.float64),
            cover=np.asarray(self.cover, dtype=np.float64),
        )
        return tree, np.asarray(self.cut_index, dtype=np.int64)


def _best_split(binned, bins: FeatureBins, g_rows, h_rows, rows, feats, stride,
                g_sum, h_sum, lam, mcw):
    """Best (feature, cut) by gain over histogram cut points.

    Ties resolve to the lowest feature index, then the lowest threshold,
    because gains are scanned in ascending (feature, cut) order and only a
    strictly larger gain replaces the incumbent.
    """
    sub = binned[np.ix_(rows, feats)]
    offsets = (np.arange(feats.size) * stride)[None, :]
    flat = (sub + offsets).ravel()
    rep_g = np.repeat(g_rows, feats.size)
    rep_h = np.repeat(h_rows, feats.size)
    hist_g = np.bincount(flat, weights=rep_g, minlength=feats.size * stride)
    hist_h = np.bincount(flat, weights=rep_h, minlength=feats.size * stride)
    hist_g = hist_g.reshape(feats.size, stride)
    hist_h = hist_h.reshape(feats.size, stride)

    gl = np.cumsum(hist_g, axis=1)[:, :-1]
    hl = np.cumsum(hist_h, axis=1)[:, :-1]
    gr = g_sum - gl
    hr = h_sum - hl
    cut_idx = np.arange(stride - 1)[None, :]
    valid = (cut_idx < bins.n_cuts[feats][:, None]) & (hl >= mcw) & (hr >= mcw)
    if not valid.any():
        return None
    parent = g_sum * g_sum / (h_sum + lam)
    gains = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent)
    gains[~valid] = -np.inf
    pos = int(np.argmax(gains))  # first maximum: lowest (feature, cut)
    fi, cut = divmod(pos, stride - 1)
    gain = gains[fi, cut]
    if gain <= 0.0:
        return None
    return int(feats[fi]), int(cut), float(gain)


def _grow_tree(binned, bins: FeatureBins, g, h, rows, feats,
               config: TrainConfig) -> tuple[Tree, np.ndarray]:
    lam = config.l2_lambda
    mcw = config.min_child_weight
    lr = config.learning_rate
    stride = int(bins.n_cuts.max()) + 1 if bins.n_cuts.size else 1
    tb = _TreeBuilder()
    root = tb.add_node()
    stack = [(root, rows, 0)]
    while stack:
        node, node_rows, depth = stack.pop()
        g_rows = g[node_rows]
        h_rows = h[node_rows]
        g_sum = float(g_rows.sum())
        h_sum = float(h_rows.sum())
        tb.cover[node] = h_sum
        split = None
        if depth < config.max_depth and node_rows.size >= 2 and h_sum >= 2 * mcw:
            split = _best_split(binned, bins, g_rows, h_rows, node_rows, feats,
                                stride, g_sum, h_sum, lam, mcw)
        if split is None:
            tb.value[node] = -g_sum / (h_sum + lam) * lr
            continue
        j, cut, _ = split
        tb.feature[node] = j
        tb.threshold[node] = float(bins.cuts[j][cut])
        tb.cut_index[node] = cut
        go_left = binned[node_rows, j] <= cut
        left = tb.add_node()
        right = tb.add_node()
        tb.left[node], tb.right[node] = left, right
        stack.append((right, node_rows[~go_left], depth + 1))
        stack.append((left, node_rows[go_left], depth + 1))
    return tb.finish()


def _predict_binned(tree: Tree, cut_index: np.ndarray, binned: np.ndarray) -> np.ndarray:
    """Training-time routing on pre-binned rows (equivalent to raw routing)."""
    n = binned.shape[0]
    out = np.empty(n)
    stack = [(0, np.arange(n))]
    while stack:
        node, rows = stack.pop()
        if rows.size == 0:
            continue
        if tree.feature[node] < 0:
            out[rows] = tree.value[node]
            continue
        j = tree.feature[node]
        go_left = binned[rows, j] <= cut_index[node]
        stack.append((int(tree.right[node]), rows[~go_left]))
        stack.append((int(tree.left[node]), rows[go_left]))
    return out


@dataclass
class BoostedEnsemble:
    n_classes: int
    base_score: np.ndarray           # (K,)
    trees: list[list[Tree]]          # [class][round]
    config: TrainConfig
    best_iteration: int              # rounds used for prediction
    scaler: Scaler | None = None
    n_features: int = 0
    holdout_ce_history: list[float] = field(default_factory=list)

    def margins(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or (self.n_features and x.shape[1] != self.n_features):
            raise ValueError(f"expected (n, {self.n_features}) input, got {x.shape}")
        out = np.tile(self.base_score, (x.shape[0], 1))
        for k in range(self.n_classes):
            for tree in self.trees[k][: self.best_iteration]:
                out[:, k] += tree.predict(x)
        return out

    def to_dict(self) -> dict:
        return {
            "n_classes": self.n_classes,
            "base_score": self.base_score.tolist(),
            "config": asdict(self.config),
            "best_iteration": self.best_iteration,
            "n_features": self.n_features,
            "scaler": self.scaler.to_dict() if self.scaler else None,
            "holdout_ce_history": self.holdout_ce_history,
            "trees": [[t.to_dict() for t in per_class] for per_class in self.trees],
        }

    @staticmethod
    def from_dict(d: dict) -> "BoostedEnsemble":
        return BoostedEnsemble(
            n_classes=int(d["n_classes"]),
            base_score=np.asarray(d["base_score"], dtype=np.float64),
            trees=[[Tree.from_dict(t) for t in per_class] for per_class in d["trees"]],
            config=TrainConfig(**d["config"]),
            best_iteration=int(d["best_iteration"]),
            scaler=Scaler.from_dict(d["scaler"]) if d.get("scaler") else None,
            n_features=int(d.get("n_features", 0)),
            holdout_ce_history=list(d.get("holdout_ce_history", [])),
        )

    def save(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict()), encoding="utf-8")
        return path

    @staticmethod
    def load(path: Path) -> "BoostedEnsemble":
        return BoostedEnsemble.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def predict_proba(ensemble: BoostedEnsemble, x: np.ndarray) -> np.ndarray:
    return softmax(ensemble.margins(x))


def _stratified_holdout(y: np.ndarray, fraction: float,
                        rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Seeded per-class carve; every class keeps at least one training row."""
    train, hold = [], []
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        perm = idx[rng.permutation(idx.size)]
        n_hold = min(int(round(fraction * idx.size)), idx.size - 1)
        hold.append(perm[:n_hold])
        train.append(perm[n_hold:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(hold))


def _weighted_log_priors(y: np.ndarray, weights: ClassWeights) -> np.ndarray:
    counts = np.bincount(y, minlength=weights.k).astype(np.float64)
    mass = counts * weights.w
    return np.log(mass / mass.sum())


def fit_gbdt(
    x_train: np.ndarray,
    y_train: np.ndarray,
    weights: ClassWeights,
    config: TrainConfig,
    eval_fraction: float = 0.1,
) -> BoostedEnsemble:
    """Train the boosted ensemble; see the module docstring for the recipe.

    eval_fraction sets the internal early-stopping holdout share; 0 disables
    early stopping and trains the full n_trees rounds.
    """
    x = np.ascontiguousarray(x_train, dtype=np.float64)
    y = np.asarray(y_train, dtype=np.int64)
    k = weights.k
    n, f = x.shape
    if n < k:
        raise ValueError(f"need at least {k} rows, got {n}")
    if y.min() < 0 or y.max() >= k:
        raise ValueError("labels outside 0..K-1")
    if np.unique(y).size < k:
        raise ValueError("every class must be present in the training rows")

    rng = np.random.default_rng(config.seed)
    use_holdout = eval_fraction > 0
    if use_holdout:
        tr_idx, ho_idx = _stratified_holdout(y, eval_fraction, rng)
        if ho_idx.size == 0:
            use_holdout = False
    if not use_holdout:
        tr_idx = np.arange(n)
    x_tr, y_tr = x[tr_idx], y[tr_idx]
    if use_holdout:
        x_ho, y_ho = x[ho_idx], y[ho_idx]

    base_score = _weighted_log_priors(y_tr, weights)
    row_weight = weights.per_sample(y_tr)
    bins = FeatureBins.build(x_tr, row_weight, config.n_bins)
    binned = np.ascontiguousarray(bins.bin_matrix(x_tr))
    n_tr = x_tr.shape[0]

    margins_tr = np.tile(base_score, (n_tr, 1))
    trees: list[list[Tree]] = [[] for _ in range(k)]
    ce_history: list[float] = []
    if use_holdout:
        margins_ho = np.tile(base_score, (x_ho.shape[0], 1))
        best_ce = weighted_ce(softmax(margins_ho), y_ho, weights)
        ce_history.append(best_ce)
        best_round = 0
        stale = 0

    m_rows = max(2, int(round(config.subsample * n_tr)))
    m_cols = max(1, int(round(config.colsample * f)))
    all_rows = np.arange(n_tr)
    all_cols = np.arange(f)

    rounds_done = 0
    for _ in range(config.n_trees):
        probs = softmax(margins_tr)
        g, h = grad_hess(probs, y_tr, weights)
        rows = (np.sort(rng.choice(n_tr, size=m_rows, replace=False))
                if config.subsample < 1 else all_rows)
        round_trees = []
        for kk in range(k):
            feats = (np.sort(rng.choice(f, size=m_cols, replace=False))
                     if config.colsample < 1 else all_cols)
            round_trees.append(_grow_tree(binned, bins, g[:, kk], h[:, kk], rows, feats, config))
        for kk, (tree, cut_index) in enumerate(round_trees):
            margins_tr[:, kk] += _predict_binned(tree, cut_index, binned)
            trees[kk].append(tree)
        rounds_done += 1
        if use_holdout:
            for kk in range(k):
                margins_ho[:, kk] += round_trees[kk][0].predict(x_ho)
            ce = weighted_ce(softmax(margins_ho), y_ho, weights)
            ce_history.append(ce)
            if ce < best_ce:
                best_ce, best_round, stale = ce, rounds_done, 0
            else:
                stale += 1
                if stale >= config.early_stopping_rounds:
                    break

    best_iteration = best_round if use_holdout else rounds_done
    trees = [per_class[:best_iteration] for per_class in trees]
    return BoostedEnsemble(
        n_classes=k,
        base_score=base_score,
        trees=trees,
        config=config,
        best_iteration=best_iteration,
        n_features=f,
        holdout_ce_history=ce_history,
    )


