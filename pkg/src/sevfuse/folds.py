"""Stratified k-fold planning at the participant level."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class FoldPlan:
    folds: list[tuple[np.ndarray, np.ndarray]]  # (train_idx, val_idx), sorted
    k: int
    seed: int

    def __eq__(self, other) -> bool:
        if not isinstance(other, FoldPlan) or self.k != other.k or self.seed != other.seed:
            return False
        return all(
            np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
            for a, b in zip(self.folds, other.folds)
        )


def stratified_kfold(labels: np.ndarray, k: int, seed: int) -> FoldPlan:
    """Seeded shuffle within each class, then round-robin fold assignment.

    Per-fold class counts deviate from proportional allocation by at most
    one; validation index sets partition 0..N-1.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if k < 2:
        raise ValueError("need at least 2 folds")
    counts = np.bincount(labels)
    if counts.min(initial=labels.size) < k:
        short = np.flatnonzero(counts < k).tolist()
        raise ValueError(f"classes {short} have fewer than {k} members")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(labels.size, dtype=np.int64)
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(idx.size)]
        fold_of[idx] = np.arange(idx.size) % k
    all_idx = np.arange(labels.size)
    folds = []
    for f in range(k):
        val = all_idx[fold_of == f]
        train = all_idx[fold_of != f]
        folds.append((train, val))
    return FoldPlan(folds=folds, k=k, seed=seed)
