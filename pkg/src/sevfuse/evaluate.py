"""Cross-validated training, seed-ensembled OOF prediction, and reporting."""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import FUSED_DIM, MODALITY_SLICES
from .boost import (
    TrainConfig,
    fit_gbdt,
    fit_logit,
    inverse_class_frequency,
    mean_abs_attribution,
    predict_proba,
    predict_proba_logit,
)
from .corpus import DEP_ANCHORS, DEP_CLASSES, PTSD_ANCHORS, PTSD_CLASSES
from .folds import FoldPlan, stratified_kfold
from .fusion import FusedMatrix, fit_scaler, transform
from . import metrics as M

log = logging.getLogger(__name__)

TASKS = {
    "dep": (DEP_CLASSES, DEP_ANCHORS),
    "ptsd": (PTSD_CLASSES, PTSD_ANCHORS),
}

ABLATION_SUBSETS = ("all", "text", "audio", "face", "audio+text", "audio+face", "text+face")
MODALITY_ORDER = ("audio", "face", "text")


def subset_columns(subset: str, total_dim: int = FUSED_DIM) -> np.ndarray:
    """Column indices of a modality subset, in fused-layout order."""
    name = subset.strip().lower()
    parts = set(MODALITY_ORDER) if name == "all" else {p.strip() for p in name.split("+")}
    unknown = parts - set(MODALITY_ORDER)
    if unknown:
        raise ValueError(f"unknown modality subset: {subset!r}")
    cols: list[np.ndarray] = []
    for mod in MODALITY_ORDER:
        if mod in parts:
            start, stop = MODALITY_SLICES[mod]
            cols.append(np.arange(start, stop))
    out = np.concatenate(cols)
    if total_dim != FUSED_DIM:
        out = out[out < total_dim]
    return out


def column_modality(col: int) -> str:
    for mod, (start, stop) in MODALITY_SLICES.items():
        if start <= col < stop:
            return mod
    return "unknown"


@dataclass
class EvalReport:
    task: str
    subset: str
    n_classes: int
    ids: list[str]
    y: np.ndarray
    oof_proba: np.ndarray
    oof_pred: np.ndarray
    metrics: dict
    per_class_f1: np.ndarray
    confusion: np.ndarray
    ci: dict
    roc: dict
    pr: dict
    net_benefit: dict
    severity: dict
    plan: FoldPlan
    shap_mean_abs: np.ndarray | None = None
    columns: np.ndarray = field(default_factory=lambda: np.arange(FUSED_DIM))


def _fit_predict(algo: str, x_tr, y_tr, weights, cfg: TrainConfig,
                 eval_fraction: float, x_va):
    if algo == "gbdt":
        model = fit_gbdt(x_tr, y_tr, weights, cfg, eval_fraction=eval_fraction)
        return model, predict_proba(model, x_va)
    if algo == "logit":
        model = fit_logit(x_tr, y_tr, weights, l2=cfg.l2_lambda, seed=cfg.seed)
        return model, predict_proba_logit(model, x_va)
    raise ValueError(f"unknown algo: {algo!r}")


def run_cv(
    matrix: FusedMatrix,
    task: str,
    modality_subset: str = "all",
    config: TrainConfig | None = None,
    seeds: Sequence[int] = (42,),
    folds: int = 5,
    fold_seed: int = 42,
    bootstrap_reps: int = 1000,
    bootstrap_seed: int = 1234,
    eval_fraction: float = 0.1,
    shap_rows: int = 0,
    algo: str = "gbdt",
    anchors: Sequence[float] | None = None,
    plan: FoldPlan | None = None,
) -> EvalReport:
    """Stratified CV with per-fold scaling and seed-averaged OOF probabilities."""
    if task not in TASKS:
        raise ValueError(f"unknown task: {task!r}")
    config = config or TrainConfig()
    n_classes, default_anchors = TASKS[task]
    anchors = np.asarray(anchors if anchors is not None else default_anchors, dtype=np.float64)
    if anchors.size != n_classes or np.any(np.diff(anchors) <= 0):
        raise ValueError("severity anchors must be strictly increasing, one per class")
    y = matrix.y_dep if task == "dep" else matrix.y_ptsd
    cols = subset_columns(modality_subset)
    x_all = matrix.X[:, cols].astype(np.float64)
    if plan is None:
        plan = stratified_kfold(y, folds, fold_seed)
    seeds = sorted(int(s) for s in seeds)
    if not seeds:
        raise ValueError("need at least one seed")

    n = matrix.n
    oof = np.zeros((n, n_classes))
    shap_total = np.zeros((n_classes, cols.size))
    shap_batches = 0
    for fold_i, (tr, va) in enumerate(plan.folds):
        scaler = fit_scaler(x_all[tr])
        x_tr = transform(scaler, x_all[tr])
        x_va = transform(scaler, x_all[va])
        try:
            weights = inverse_class_frequency(y[tr], n_classes)
        except ValueError as exc:
            raise RuntimeError(f"fold {fold_i}: {exc}") from exc
        acc = np.zeros((va.size, n_classes))
        for seed in seeds:
            cfg = dataclasses.replace(config, seed=seed)
            try:
                model, proba = _fit_predict(algo, x_tr, y[tr], weights, cfg,
                                            eval_fraction, x_va)
            except Exception as exc:
                raise RuntimeError(f"fold {fold_i}, seed {seed}: {exc}") from exc
            acc += proba
            if shap_rows > 0 and algo == "gbdt":
                shap_total += mean_abs_attribution(model, x_va, max_rows=shap_rows,
                                                   seed=cfg.seed)
                shap_batches += 1
        oof[va] = acc / len(seeds)

    pred = np.argmax(oof, axis=1)
    base = M.basic_metrics(y, pred, n_classes)
    confusion = base.pop("confusion")
    pcf1 = base.pop("per_class_f1")
    report_metrics = {
        **base,
        "mcc": M.mcc_multiclass(confusion),
        "kappa": M.cohens_kappa(confusion),
        "auc_macro_ovr": M.auc_macro_ovr(y, oof),
    }

    ci = {}
    if bootstrap_reps > 0:
        ci["acc"] = M.bootstrap_ci(
            matrix.ids, (y, pred),
            lambda yy, pp: float(np.mean(yy == pp)),
            reps=bootstrap_reps, seed=bootstrap_seed)
        ci["f1_weighted"] = M.bootstrap_ci(
            matrix.ids, (y, pred),
            lambda yy, pp: M.basic_metrics(yy, pp, n_classes)["f1_weighted"],
            reps=bootstrap_reps, seed=bootstrap_seed + 1)
        ci["auc_macro_ovr"] = M.bootstrap_ci(
            matrix.ids, (y, oof), M.auc_macro_ovr,
            reps=bootstrap_reps, seed=bootstrap_seed + 2)

    roc = {c: M.roc_points(y == c, oof[:, c]) for c in range(n_classes)}
    pr = {c: M.pr_points(y == c, oof[:, c]) for c in range(n_classes)}
    nb = {}
    for c in range(n_classes):
        pos = y == c
        prevalence = float(pos.mean())
        nb[c] = [
            (float(p_t), M.net_benefit(pos, oof[:, c], p_t),
             M.net_benefit_treat_all(prevalence, p_t))
            for p_t in M.NET_BENEFIT_GRID
        ]

    s_true = anchors[y]
    s_hat = M.expected_severity(oof, anchors)
    severity = {"rmse": M.rmse(s_true, s_hat), "ccc": M.ccc(s_true, s_hat)}

    return EvalReport(
        task=task,
        subset=modality_subset,
        n_classes=n_classes,
        ids=list(matrix.ids),
        y=y.copy(),
        oof_proba=oof,
        oof_pred=pred,
        metrics=report_metrics,
        per_class_f1=pcf1,
        confusion=confusion,
        ci=ci,
        roc=roc,
        pr=pr,
        net_benefit=nb,
        severity=severity,
        plan=plan,
        shap_mean_abs=(shap_total / shap_batches) if shap_batches else None,
        columns=cols,
    )


def run_ablations(
    matrix: FusedMatrix,
    task: str,
    config: TrainConfig | None = None,
    seeds: Sequence[int] = (42,),
    subsets: Sequence[str] = ABLATION_SUBSETS,
    folds: int = 5,
    fold_seed: int = 42,
    **kwargs,
) -> dict[str, EvalReport]:
    """One run per modality subset under the identical fold plan."""
    y = matrix.y_dep if task == "dep" else matrix.y_ptsd
    plan = stratified_kfold(y, folds, fold_seed)
    return {
        subset: run_cv(matrix, task, subset, config, seeds, folds=folds,
                       fold_seed=fold_seed, plan=plan, **kwargs)
        for subset in subsets
    }


def _fmt(x: float) -> str:
    return repr(float(x))


def pca_projection(x: np.ndarray, n_components: int = 2) -> np.ndarray:
    """Principal components via eigendecomposition of the column covariance.

    Component signs are fixed so the largest-magnitude loading is positive.
    """
    x = np.asarray(x, dtype=np.float64)
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / x.shape[0]
    eigval, eigvec = np.linalg.eigh(cov)
    order = np.argsort(eigval)[::-1][:n_components]
    comps = eigvec[:, order]
    for i in range(comps.shape[1]):
        j = int(np.argmax(np.abs(comps[:, i])))
        if comps[j, i] < 0:
            comps[:, i] = -comps[:, i]
    return centered @ comps


def write_report(report: EvalReport, outdir: Path, top_features: int = 20) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    summary = {
        "task": report.task,
        "subset": report.subset,
        "n": len(report.ids),
        "n_classes": report.n_classes,
        "metrics": report.metrics,
        "ci": {k: list(v) for k, v in report.ci.items()},
        "severity": report.severity,
        "per_class_f1": report.per_class_f1.tolist(),
        "folds": report.plan.k,
        "fold_seed": report.plan.seed,
    }
    (outdir / "report.json").write_text(json.dumps(summary, indent=2), encoding="utf-8")

    lines = [",".join(str(int(v)) for v in row) for row in report.confusion]
    (outdir / "confusion.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    lines = ["class,f1"]
    lines += [f"{c},{_fmt(v)}" for c, v in enumerate(report.per_class_f1)]
    (outdir / "per_class_f1.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    lines = ["id,y,pred," + ",".join(f"p{c}" for c in range(report.n_classes))]
    for i, pid in enumerate(report.ids):
        probs = ",".join(_fmt(v) for v in report.oof_proba[i])
        lines.append(f"{pid},{int(report.y[i])},{int(report.oof_pred[i])},{probs}")
    (outdir / "oof_proba.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    lines = ["class,fpr,tpr,threshold"]
    for c, pts in report.roc.items():
        lines += [f"{c},{_fmt(a)},{_fmt(b)},{_fmt(t)}" for a, b, t in pts]
    (outdir / "roc_points.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    lines = ["class,recall,precision,threshold"]
    for c, pts in report.pr.items():
        lines += [f"{c},{_fmt(a)},{_fmt(b)},{_fmt(t)}" for a, b, t in pts]
    (outdir / "pr_points.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    lines = ["class,threshold,net_benefit,treat_all,treat_none"]
    for c, pts in report.net_benefit.items():
        lines += [f"{c},{_fmt(p)},{_fmt(v)},{_fmt(ta)},0.0" for p, v, ta in pts]
    (outdir / "net_benefit.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    if report.shap_mean_abs is not None:
        totals = report.shap_mean_abs.sum(axis=0)
        top = np.argsort(-totals)[:top_features]
        header = "rank,column,modality,total_mean_abs," + ",".join(
            f"class{c}" for c in range(report.n_classes))
        lines = [header]
        for rank, local in enumerate(top):
            col = int(report.columns[local])
            per_class = ",".join(_fmt(v) for v in report.shap_mean_abs[:, local])
            lines.append(
                f"{rank},{col},{column_modality(col)},{_fmt(totals[local])},{per_class}")
        (outdir / "shap_top_features.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    return outdir


def write_pca_projection(matrix: FusedMatrix, report: EvalReport, outdir: Path) -> Path:
    x = matrix.X[:, report.columns].astype(np.float64)
    scaler = fit_scaler(x)
    proj = pca_projection(transform(scaler, x))
    lines = ["id,y,pc1,pc2"]
    for i, pid in enumerate(report.ids):
        lines.append(f"{pid},{int(report.y[i])},{_fmt(proj[i, 0])},{_fmt(proj[i, 1])}")
    path = Path(outdir) / "pca_projection.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
