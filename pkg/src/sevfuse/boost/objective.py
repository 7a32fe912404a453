"""Class-weighted softmax cross-entropy objective for multi-class boosting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PROB_FLOOR = 1e-15


@dataclass
class ClassWeights:
    w: np.ndarray  # (K,) positive

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.w.ndim != 1 or np.any(self.w <= 0):
            raise ValueError("class weights must be a 1-D positive vector")

    @property
    def k(self) -> int:
        return self.w.size

    def per_sample(self, labels: np.ndarray) -> np.ndarray:
        return self.w[np.asarray(labels, dtype=np.int64)]


def softmax(margins: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max-shift overflow guard."""
    m = np.asarray(margins, dtype=np.float64)
    squeeze = m.ndim == 1
    if squeeze:
        m = m[None, :]
    shifted = m - m.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=1, keepdims=True)
    return p[0] if squeeze else p


def weighted_ce(probs: np.ndarray, labels: np.ndarray, weights: ClassWeights) -> float:
    """Mean class-weighted cross-entropy: -(1/N) sum_i w_{y_i} log p_{y_i}."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    p_true = np.clip(probs[np.arange(labels.size), labels], PROB_FLOOR, None)
    return float(-(weights.per_sample(labels) * np.log(p_true)).mean())


def grad_hess(probs: np.ndarray, labels: np.ndarray,
              weights: ClassWeights) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample, per-class gradient and diagonal Hessian of the objective.

    g_ik = w_{y_i} (p_ik - 1[y_i = k]); h_ik = w_{y_i} p_ik (1 - p_ik).
    """
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n, k = probs.shape
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels] = 1.0
    w = weights.per_sample(labels)[:, None]
    g = w * (probs - onehot)
    h = w * probs * (1.0 - probs)
    return g, h


def inverse_class_frequency(labels: np.ndarray, n_classes: int) -> ClassWeights:
    """w_k = N / (K * n_k); balanced labels give all-ones weights."""
    labels = np.asarray(labels, dtype=np.int64)
    counts = np.bincount(labels, minlength=n_classes)
    if counts.size > n_classes:
        raise ValueError(f"label outside 0..{n_classes - 1}")
    if np.any(counts == 0):
        missing = np.flatnonzero(counts == 0).tolist()
        raise ValueError(f"classes {missing} absent from training labels")
    return ClassWeights(labels.size / (n_classes * counts.astype(np.float64)))
