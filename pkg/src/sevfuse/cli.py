"""Command-line pipeline: extract features, train/evaluate, ablate, attribute."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import subprocess
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .audio import extract_audio_feature
from .boost import BoostedEnsemble, TrainConfig, fit_gbdt, inverse_class_frequency
from .boost.attrib import mean_abs_attribution
from .corpus import (
    ConfigError,
    Corpus,
    build_label_maps,
    read_transcript_text,
    scan_participants,
)
from .embfile import read_embedding_file
from .evaluate import (
    ABLATION_SUBSETS,
    TASKS,
    column_modality,
    run_ablations,
    run_cv,
    subset_columns,
    write_pca_projection,
    write_report,
)
from .face import extract_face_feature
from .fusion import FusedMatrix, fit_scaler, fuse, read_cache, transform, write_cache
from .synth import make_synthetic_cohort

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3


class DataError(Exception):
    pass


@dataclass
class RunConfig:
    edaic_root: Path | None = None
    daicwoz_root: Path | None = None
    metadata_path: Path | None = None
    phq8_labels_path: Path | None = None
    embeddings_dir: Path | None = None
    cache_dir: Path = Path("cache_fast")
    outdir: Path = Path("runs")
    folds: int = 5
    seeds: tuple[int, ...] = (42,)
    fold_seed: int = 42
    rebuild_cache: bool = False
    task: str = "both"
    modalities: str = "all"
    bootstrap_reps: int = 1000
    shap_rows: int = 32
    face_smooth_window: int = 5
    vad_db: float | None = None
    synthetic: dict | None = None
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.folds < 2:
            raise ConfigError("folds must be at least 2")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        if self.synthetic is None and self.edaic_root is None and self.daicwoz_root is None:
            raise ConfigError("provide data roots or a synthetic cohort spec")

    def tasks(self) -> list[str]:
        return ["dep", "ptsd"] if self.task == "both" else [self.task]

    def to_manifest(self) -> dict:
        d = dataclasses.asdict(self)
        for key, val in d.items():
            if isinstance(val, Path):
                d[key] = str(val)
        d["version"] = __version__
        d["build"] = _git_revision()
        return d


def _git_revision() -> str:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            capture_output=True, text=True, timeout=5, check=False,
        )
        return out.stdout.strip() or "unknown"
    except OSError:
        return "unknown"


def write_manifest(config: RunConfig, outdir: Path) -> None:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    payload = json.dumps(config.to_manifest(), indent=2, sort_keys=True)
    (outdir / "run_manifest.json").write_text(payload, encoding="utf-8")


def parse_synthetic_spec(spec: str) -> dict:
    """Parse "n=400,seed=7,signal=3.0,classes=5,modalities=text+audio"."""
    out: dict = {"n": 400, "classes": 5, "signal": 3.0, "seed": 0, "modalities": "text"}
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise ConfigError(f"bad synthetic spec item: {item!r}")
        key, val = item.split("=", 1)
        key = key.strip().lower()
        if key in ("n", "classes", "seed"):
            out[key] = int(val)
        elif key in ("signal", "signal_strength"):
            out["signal"] = float(val)
        elif key == "modalities":
            out["modalities"] = val.strip().lower()
        else:
            raise ConfigError(f"unknown synthetic spec key: {key!r}")
    return out


def _build_synthetic(config: RunConfig) -> FusedMatrix:
    spec = config.synthetic or {}
    return make_synthetic_cohort(
        n=int(spec.get("n", 400)),
        classes=int(spec.get("classes", 5)),
        signal_strength=float(spec.get("signal", 3.0)),
        seed=int(spec.get("seed", 0)),
        signal_modalities=tuple(str(spec.get("modalities", "text")).split("+")),
    )


def _build_from_roots(config: RunConfig) -> FusedMatrix:
    label_files = [p for p in (config.metadata_path, config.phq8_labels_path) if p]
    if not label_files:
        raise ConfigError("data-root extraction needs --metadata and/or --phq8-labels")
    labels = build_label_maps(label_files)
    roots, corpora = [], []
    if config.edaic_root:
        roots.append(config.edaic_root)
        corpora.append(Corpus.EDAIC)
    if config.daicwoz_root:
        roots.append(config.daicwoz_root)
        corpora.append(Corpus.DAICWOZ)
    records = scan_participants(roots, corpora, labels, config.embeddings_dir)
    skipped = sum(1 for r in records if not r.has_labels())
    if skipped:
        log.info("excluding %d participants without complete labels", skipped)
    usable = [r for r in records if r.has_labels()]
    if not usable:
        raise DataError("no participants with complete labels found")

    rows, ids, y_dep, y_ptsd, masks = [], [], [], [], []
    for rec in usable:
        audio = extract_audio_feature(rec.audio_path, vad_db=config.vad_db)
        face = extract_face_feature(rec.face_csv_path, smooth_window=config.face_smooth_window)
        text_vec = np.zeros(768)
        text_present = False
        if rec.text_embedding_path is not None:
            try:
                text_vec = read_embedding_file(rec.text_embedding_path)
                text_present = True
            except Exception as exc:
                log.warning("unreadable embedding for %s: %s", rec.id, exc)
        elif rec.transcript_path is not None:
            # Transcript without an embedding: text features must come from
            # the embedding exporter; record the modality as absent.
            read_transcript_text(rec.transcript_path)
        rows.append(fuse(audio.vector, face.vector, text_vec))
        ids.append(rec.id)
        y_dep.append(rec.dep_class)
        y_ptsd.append(rec.ptsd_class)
        masks.append((audio.present, face.present, text_present))
        log.debug("participant %s modalities audio=%s face=%s text=%s",
                  rec.id, audio.present, face.present, text_present)
    return FusedMatrix(
        X=np.asarray(rows, dtype=np.float32),
        ids=ids,
        y_dep=np.asarray(y_dep, dtype=np.int64),
        y_ptsd=np.asarray(y_ptsd, dtype=np.int64),
        modality_mask=np.asarray(masks, dtype=bool),
    )


def cmd_extract(config: RunConfig) -> Path:
    cache_dir = Path(config.cache_dir)
    if (cache_dir / "manifest.json").is_file() and not config.rebuild_cache:
        log.info("cache exists at %s; skipping extraction (use --rebuild-cache)", cache_dir)
        return cache_dir
    matrix = _build_synthetic(config) if config.synthetic else _build_from_roots(config)
    if matrix.n == 0:
        raise DataError("extraction produced zero usable participants")
    write_cache(matrix, cache_dir)
    per_mod = matrix.modality_mask.sum(axis=0)
    log.info("cached %d participants (audio=%d, face=%d, text=%d) at %s",
             matrix.n, per_mod[0], per_mod[1], per_mod[2], cache_dir)
    return cache_dir


SUMMARY_COLUMNS = ("ACC", "ACC_lo", "ACC_hi", "F1w", "F1w_lo", "F1w_hi", "AUC", "MCC", "kappa")


def _summary_row(report) -> dict:
    m = report.metrics
    acc_lo, acc_hi = report.ci.get("acc", (m["acc"], m["acc"]))
    f1_lo, f1_hi = report.ci.get("f1_weighted", (m["f1_weighted"], m["f1_weighted"]))
    return {
        "ACC": m["acc"], "ACC_lo": acc_lo, "ACC_hi": acc_hi,
        "F1w": m["f1_weighted"], "F1w_lo": f1_lo, "F1w_hi": f1_hi,
        "AUC": m["auc_macro_ovr"], "MCC": m["mcc"], "kappa": m["kappa"],
    }


def cmd_train_eval(config: RunConfig) -> dict[str, Path]:
    matrix = read_cache(config.cache_dir)
    outdir = Path(config.outdir)
    write_manifest(config, outdir)
    out_paths = {}
    for task in config.tasks():
        report = run_cv(
            matrix,
            task,
            config.modalities,
            config.train,
            config.seeds,
            folds=config.folds,
            fold_seed=config.fold_seed,
            bootstrap_reps=config.bootstrap_reps,
            shap_rows=config.shap_rows,
        )
        task_dir = outdir / task.upper()
        write_report(report, task_dir)
        write_pca_projection(matrix, report, task_dir)

        row = _summary_row(report)
        lines = [",".join(SUMMARY_COLUMNS),
                 ",".join(repr(float(row[c])) for c in SUMMARY_COLUMNS)]
        (task_dir / "summary.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

        model = _fit_full_model(matrix, task, config)
        model.save(task_dir / "model.json")
        out_paths[task] = task_dir
        print(f"[{task.upper()}] acc={row['ACC']:.3f} "
              f"ci=({row['ACC_lo']:.3f},{row['ACC_hi']:.3f}) "
              f"f1w={row['F1w']:.3f} auc={row['AUC']:.3f} "
              f"mcc={row['MCC']:.3f} kappa={row['kappa']:.3f}")
    return out_paths


def _fit_full_model(matrix: FusedMatrix, task: str, config: RunConfig) -> BoostedEnsemble:
    """Whole-cohort model used for downstream attribution."""
    n_classes, _ = TASKS[task]
    cols = subset_columns(config.modalities)
    x = matrix.X[:, cols].astype(np.float64)
    y = matrix.y_dep if task == "dep" else matrix.y_ptsd
    scaler = fit_scaler(x)
    cfg = dataclasses.replace(config.train, seed=config.seeds[0])
    model = fit_gbdt(transform(scaler, x), y, inverse_class_frequency(y, n_classes), cfg)
    model.scaler = scaler
    return model


def cmd_ablate(config: RunConfig) -> dict[str, Path]:
    matrix = read_cache(config.cache_dir)
    outdir = Path(config.outdir)
    write_manifest(config, outdir)
    out_paths = {}
    for task in config.tasks():
        reports = run_ablations(
            matrix, task, config.train, config.seeds,
            subsets=ABLATION_SUBSETS, folds=config.folds, fold_seed=config.fold_seed,
            bootstrap_reps=0,
        )
        lines = ["subset,ACC,F1w"]
        for subset in ABLATION_SUBSETS:
            m = reports[subset].metrics
            lines.append(f"{subset},{repr(float(m['acc']))},{repr(float(m['f1_weighted']))}")
            print(f"[{task.upper()} ablation] {subset:<12} acc={m['acc']:.3f} "
                  f"f1w={m['f1_weighted']:.3f}")
        path = outdir / f"ablation_{task}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        out_paths[task] = path
    return out_paths


def cmd_attribute(config: RunConfig, model_path: Path, top: int = 20) -> Path:
    matrix = read_cache(config.cache_dir)
    model = BoostedEnsemble.load(model_path)
    cols = subset_columns(config.modalities)
    if cols.size != model.n_features:
        raise ConfigError(
            f"model expects {model.n_features} features but subset "
            f"{config.modalities!r} has {cols.size}")
    x = matrix.X[:, cols].astype(np.float64)
    if model.scaler is not None:
        x = transform(model.scaler, x)
    mean_abs = mean_abs_attribution(model, x, max_rows=max(config.shap_rows, 1),
                                    seed=config.seeds[0])
    totals = mean_abs.sum(axis=0)
    by_modality: dict[str, float] = {}
    for local, col in enumerate(cols):
        mod = column_modality(int(col))
        by_modality[mod] = by_modality.get(mod, 0.0) + float(totals[local])

    outdir = Path(config.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_manifest(config, outdir)
    order = np.argsort(-totals)[:top]
    header = "rank,column,modality,total_mean_abs," + ",".join(
        f"class{c}" for c in range(model.n_classes))
    lines = [header]
    for rank, local in enumerate(order):
        col = int(cols[local])
        per_class = ",".join(repr(float(v)) for v in mean_abs[:, local])
        lines.append(f"{rank},{col},{column_modality(col)},"
                     f"{repr(float(totals[local]))},{per_class}")
    (outdir / "attribution_top_features.csv").write_text("\n".join(lines) + "\n",
                                                         encoding="utf-8")
    total_mass = sum(by_modality.values()) or 1.0
    lines = ["modality,mean_abs,share"]
    for mod in ("audio", "face", "text"):
        if mod in by_modality:
            lines.append(f"{mod},{repr(by_modality[mod])},{repr(by_modality[mod] / total_mass)}")
            print(f"[attribution] {mod}: share={by_modality[mod] / total_mass:.3f}")
    (outdir / "attribution_by_modality.csv").write_text("\n".join(lines) + "\n",
                                                        encoding="utf-8")
    return outdir


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sevfuse",
        description="Tri-modal severity classification pipeline",
    )
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--edaic-root", type=Path)
    common.add_argument("--daicwoz-root", type=Path)
    common.add_argument("--metadata", type=Path, dest="metadata")
    common.add_argument("--phq8-labels", type=Path, dest="phq8_labels")
    common.add_argument("--embeddings-dir", type=Path)
    common.add_argument("--cache-dir", type=Path, default=Path("cache_fast"))
    common.add_argument("--outdir", type=Path, default=Path("runs"))
    common.add_argument("--folds", type=int, default=5)
    common.add_argument("--seeds", type=str, default="42",
                        help="comma-separated model seeds, e.g. 42,43")
    common.add_argument("--fold-seed", type=int, default=42)
    common.add_argument("--rebuild-cache", action="store_true")
    common.add_argument("--task", choices=["dep", "ptsd", "both"], default="both")
    common.add_argument("--modalities", type=str, default="all",
                        help="all or a +-joined subset of audio,face,text")
    common.add_argument("--bootstrap-reps", type=int, default=1000)
    common.add_argument("--shap-rows", type=int, default=32)
    common.add_argument("--synthetic", type=str,
                        help="synthetic cohort spec, e.g. n=400,seed=7,signal=3.0")
    common.add_argument("--use-gpu", action="store_true",
                        help="accepted for compatibility; training is CPU-only")
    common.add_argument("--n-trees", type=int)
    common.add_argument("--learning-rate", type=float)
    common.add_argument("--max-depth", type=int)
    common.add_argument("--face-smooth-window", type=int, default=5)
    common.add_argument("--vad-db", type=float,
                        help="energy gate in dB relative to clip max (e.g. -60)")

    sub.add_parser("extract", parents=[common], help="build the fused feature cache")
    sub.add_parser("train-eval", parents=[common], help="cross-validate and report")
    sub.add_parser("ablate", parents=[common], help="modality ablation table")
    attribute = sub.add_parser("attribute", parents=[common],
                               help="feature/modality attribution for a saved model")
    attribute.add_argument("--model", type=Path, required=True)
    attribute.add_argument("--top", type=int, default=20)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    train_kwargs = {}
    if args.n_trees is not None:
        train_kwargs["n_trees"] = args.n_trees
    if args.learning_rate is not None:
        train_kwargs["learning_rate"] = args.learning_rate
    if args.max_depth is not None:
        train_kwargs["max_depth"] = args.max_depth
    if args.use_gpu:
        log.warning("--use-gpu requested but only CPU histogram training is available")
    try:
        seeds = tuple(int(s) for s in str(args.seeds).split(",") if s.strip())
    except ValueError as exc:
        raise ConfigError(f"bad --seeds value: {args.seeds!r}") from exc
    return RunConfig(
        edaic_root=args.edaic_root,
        daicwoz_root=args.daicwoz_root,
        metadata_path=args.metadata,
        phq8_labels_path=args.phq8_labels,
        embeddings_dir=args.embeddings_dir,
        cache_dir=args.cache_dir,
        outdir=args.outdir,
        folds=args.folds,
        seeds=seeds,
        fold_seed=args.fold_seed,
        rebuild_cache=args.rebuild_cache,
        task=args.task,
        modalities=args.modalities,
        bootstrap_reps=args.bootstrap_reps,
        shap_rows=args.shap_rows,
        face_smooth_window=args.face_smooth_window,
        vad_db=args.vad_db,
        synthetic=parse_synthetic_spec(args.synthetic) if args.synthetic else None,
        train=TrainConfig(**train_kwargs),
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = config_from_args(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "extract":
            cmd_extract(config)
        elif args.command == "train-eval":
            cmd_extract(config)
            cmd_train_eval(config)
        elif args.command == "ablate":
            cmd_extract(config)
            cmd_ablate(config)
        elif args.command == "attribute":
            cmd_attribute(config, args.model, top=args.top)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
