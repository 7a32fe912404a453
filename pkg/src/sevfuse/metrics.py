"""Classification, agreement, clinical-utility, and severity metrics."""

from __future__ import annotations

import logging
import warnings
from typing import Callable, Sequence

import numpy as np

log = logging.getLogger(__name__)

# np.trapz was renamed in numpy 2.0
_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def confusion_matrix(y: np.ndarray, pred: np.ndarray, n_classes: int) -> np.ndarray:
    y = np.asarray(y, dtype=np.int64)
    pred = np.asarray(pred, dtype=np.int64)
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y, pred), 1)
    return cm


def per_class_f1(confusion: np.ndarray) -> np.ndarray:
    cm = np.asarray(confusion, dtype=np.float64)
    tp = np.diag(cm)
    support = cm.sum(axis=1)
    predicted = cm.sum(axis=0)
    f1 = np.zeros(cm.shape[0])
    denom = support + predicted
    nonzero = denom > 0
    f1[nonzero] = 2.0 * tp[nonzero] / denom[nonzero]
    return f1


def basic_metrics(y: np.ndarray, pred: np.ndarray, n_classes: int) -> dict:
    """Accuracy, weighted/macro F1, macro recall.

    Weighted F1 weights per-class F1 by true-class support; classes absent
    from both truth and prediction contribute zero to the macro averages.
    """
    y = np.asarray(y, dtype=np.int64)
    pred = np.asarray(pred, dtype=np.int64)
    if y.size == 0 or y.size != pred.size:
        raise ValueError("labels and predictions must be equal-length and non-empty")
    cm = confusion_matrix(y, pred, n_classes)
    f1 = per_class_f1(cm)
    support = cm.sum(axis=1).astype(np.float64)
    recall = np.zeros(n_classes)
    nonzero = support > 0
    recall[nonzero] = np.diag(cm)[nonzero] / support[nonzero]
    return {
        "acc": float(np.trace(cm) / y.size),
        "f1_weighted": float((f1 * support).sum() / support.sum()),
        "f1_macro": float(f1.mean()),
        "recall_macro": float(recall.mean()),
        "per_class_f1": f1,
        "confusion": cm,
    }


def mcc_multiclass(confusion: np.ndarray) -> float:
    """Generalized multi-class correlation from the confusion matrix."""
    cm = np.asarray(confusion, dtype=np.float64)
    n = cm.sum()
    if n <= 0:
        raise ValueError("empty confusion matrix")
    t = cm.sum(axis=1)  # truth marginals
    p = cm.sum(axis=0)  # prediction marginals
    cov_tp = np.trace(cm) * n - float(t @ p)
    cov_tt = n * n - float(t @ t)
    cov_pp = n * n - float(p @ p)
    denom = np.sqrt(cov_tt) * np.sqrt(cov_pp)
    if denom == 0.0:
        warnings.warn("MCC undefined (single-class truth or prediction); returning 0")
        return 0.0
    return float(cov_tp / denom)


def cohens_kappa(confusion: np.ndarray) -> float:
    cm = np.asarray(confusion, dtype=np.float64)
    n = cm.sum()
    if n <= 0:
        raise ValueError("empty confusion matrix")
    p_o = np.trace(cm) / n
    p_e = float(cm.sum(axis=1) @ cm.sum(axis=0)) / (n * n)
    if p_e >= 1.0:
        warnings.warn("kappa undefined (chance agreement is 1); returning 0")
        return 0.0
    return float((p_o - p_e) / (1.0 - p_e))


def binary_auc(y_pos: np.ndarray, scores: np.ndarray) -> float:
    """ROC AUC by trapezoid over the tie-grouped ROC curve."""
    y_pos = np.asarray(y_pos, dtype=bool)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int(y_pos.sum())
    n_neg = y_pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_pos = y_pos[order].astype(np.float64)
    # group boundaries where the score changes
    boundary = np.flatnonzero(np.diff(sorted_scores)) + 1
    cuts = np.concatenate([boundary, [scores.size]])
    tp = np.cumsum(sorted_pos)[cuts - 1]
    fp = cuts - tp
    tpr = np.concatenate([[0.0], tp / n_pos])
    fpr = np.concatenate([[0.0], fp / n_neg])
    return float(_trapezoid(tpr, fpr))


def auc_macro_ovr(y: np.ndarray, proba: np.ndarray) -> float:
    """Macro average of one-vs-rest AUC over classes with both outcomes."""
    y = np.asarray(y, dtype=np.int64)
    proba = np.asarray(proba, dtype=np.float64)
    aucs = []
    for c in range(proba.shape[1]):
        pos = y == c
        if pos.all() or not pos.any():
            warnings.warn(f"class {c} lacks positives or negatives; skipped in macro AUC")
            continue
        aucs.append(binary_auc(pos, proba[:, c]))
    if not aucs:
        raise ValueError("no class had both positives and negatives")
    return float(np.mean(aucs))


def roc_points(y_pos: np.ndarray, scores: np.ndarray) -> list[tuple[float, float, float]]:
    """(fpr, tpr, threshold) at each distinct score, descending."""
    y_pos = np.asarray(y_pos, dtype=bool)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = max(int(y_pos.sum()), 1)
    n_neg = max(int((~y_pos).sum()), 1)
    order = np.argsort(-scores, kind="stable")
    pts = [(0.0, 0.0, float("inf"))]
    tp = fp = 0
    i = 0
    while i < scores.size:
        thr = scores[order[i]]
        while i < scores.size and scores[order[i]] == thr:
            if y_pos[order[i]]:
                tp += 1
            else:
                fp += 1
            i += 1
        pts.append((fp / n_neg, tp / n_pos, float(thr)))
    return pts


def pr_points(y_pos: np.ndarray, scores: np.ndarray) -> list[tuple[float, float, float]]:
    """(recall, precision, threshold) at each distinct score, descending."""
    y_pos = np.asarray(y_pos, dtype=bool)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = max(int(y_pos.sum()), 1)
    order = np.argsort(-scores, kind="stable")
    pts = [(0.0, 1.0, float("inf"))]
    tp = fp = 0
    i = 0
    while i < scores.size:
        thr = scores[order[i]]
        while i < scores.size and scores[order[i]] == thr:
            if y_pos[order[i]]:
                tp += 1
            else:
                fp += 1
            i += 1
        pts.append((tp / n_pos, tp / max(tp + fp, 1), float(thr)))
    return pts


NET_BENEFIT_GRID = tuple(np.round(np.arange(0.10, 0.901, 0.05), 2))


def net_benefit(y_pos: np.ndarray, scores: np.ndarray, p_t: float) -> float:
    """TP/N - (FP/N) * p_t / (1 - p_t), predicting positive when score >= p_t."""
    if not 0.0 < p_t < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    y_pos = np.asarray(y_pos, dtype=bool)
    scores = np.asarray(scores, dtype=np.float64)
    n = y_pos.size
    called = scores >= p_t
    tp = int((called & y_pos).sum())
    fp = int((called & ~y_pos).sum())
    return tp / n - (fp / n) * (p_t / (1.0 - p_t))


def net_benefit_treat_all(prevalence: float, p_t: float) -> float:
    return prevalence - (1.0 - prevalence) * (p_t / (1.0 - p_t))


def expected_severity(proba: np.ndarray, anchors: Sequence[float]) -> np.ndarray:
    """Probability-weighted anchor score per row."""
    proba = np.atleast_2d(np.asarray(proba, dtype=np.float64))
    anchors = np.asarray(anchors, dtype=np.float64)
    if proba.shape[1] != anchors.size:
        raise ValueError("anchor count must match class count")
    return proba @ anchors


def rmse(s: np.ndarray, s_hat: np.ndarray) -> float:
    s = np.asarray(s, dtype=np.float64)
    s_hat = np.asarray(s_hat, dtype=np.float64)
    return float(np.sqrt(np.mean((s_hat - s) ** 2)))


def ccc(s: np.ndarray, s_hat: np.ndarray) -> float:
    """Concordance correlation with population (co)variances."""
    s = np.asarray(s, dtype=np.float64)
    s_hat = np.asarray(s_hat, dtype=np.float64)
    if s.size != s_hat.size or s.size < 2:
        raise ValueError("CCC needs two equal-length vectors of length >= 2")
    mu_s, mu_h = s.mean(), s_hat.mean()
    var_s = float(np.mean((s - mu_s) ** 2))
    var_h = float(np.mean((s_hat - mu_h) ** 2))
    cov = float(np.mean((s - mu_s) * (s_hat - mu_h)))
    denom = var_s + var_h + (mu_s - mu_h) ** 2
    if denom == 0.0:
        return 1.0  # both constant with equal means
    return float(2.0 * cov / denom)


def bootstrap_ci(
    ids: Sequence[str],
    values: tuple[np.ndarray, ...],
    metric: Callable[..., float],
    reps: int = 1000,
    seed: int = 0,
    max_retries: int = 10,
) -> tuple[float, float]:
    """Participant-level bootstrap percentile interval (2.5th, 97.5th).

    values holds one array per metric argument, each with one row per
    participant. Replicates on which the metric is undefined are redrawn up
    to max_retries times, then skipped (count logged).
    """
    n = len(ids)
    rng = np.random.default_rng(seed)
    stats = []
    skipped = 0
    for _ in range(reps):
        stat = None
        for _ in range(max_retries + 1):
            idx = rng.integers(0, n, size=n)
            try:
                candidate = metric(*(v[idx] for v in values))
            except (ValueError, ZeroDivisionError):
                continue
            if np.isfinite(candidate):
                stat = candidate
                break
        if stat is None:
            skipped += 1
        else:
            stats.append(stat)
    if skipped:
        log.warning("bootstrap: %d replicates skipped as undefined", skipped)
    if not stats:
        raise ValueError("metric undefined on every bootstrap replicate")
    lo, hi = np.percentile(stats, [2.5, 97.5])
    return float(lo), float(hi)
