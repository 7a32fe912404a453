"""Per-fold standardization, modality concatenation, and the feature cache.

The cache stores raw (unstandardized) fused rows; scalers are fitted per
training fold at train time and never baked into the cache.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import AUDIO_DIM, FACE_DIM, FUSED_DIM, TEXT_DIM

STD_FLOOR = 1e-8
CACHE_FORMAT_VERSION = 1
MATRIX_FILENAME = "X.f32le"
MANIFEST_FILENAME = "manifest.json"


class CacheCorruptError(Exception):
    """Cache payload does not match its manifest; caller may rebuild."""


@dataclass
class Scaler:
    means: np.ndarray
    stds: np.ndarray
    fitted_on: int

    def to_dict(self) -> dict:
        return {
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
            "fitted_on": self.fitted_on,
        }

    @staticmethod
    def from_dict(d: dict) -> "Scaler":
        return Scaler(
            means=np.asarray(d["means"], dtype=np.float64),
            stds=np.asarray(d["stds"], dtype=np.float64),
            fitted_on=int(d["fitted_on"]),
        )


def fuse(audio_vec: np.ndarray, face_vec: np.ndarray, text_vec: np.ndarray) -> np.ndarray:
    """Concatenate [audio | face | text] into a 1536-D row."""
    audio_vec = np.asarray(audio_vec, dtype=np.float64).ravel()
    face_vec = np.asarray(face_vec, dtype=np.float64).ravel()
    text_vec = np.asarray(text_vec, dtype=np.float64).ravel()
    if audio_vec.size != AUDIO_DIM or face_vec.size != FACE_DIM or text_vec.size != TEXT_DIM:
        raise ValueError(
            f"bad block lengths: audio={audio_vec.size}, face={face_vec.size}, text={text_vec.size}"
        )
    row = np.concatenate([audio_vec, face_vec, text_vec])
    if row.size != FUSED_DIM:  # pad/truncate guard; a no-op for exact blocks
        out = np.zeros(FUSED_DIM)
        out[: min(row.size, FUSED_DIM)] = row[:FUSED_DIM]
        row = out
    return row


def fit_scaler(x_train: np.ndarray) -> Scaler:
    """Per-column mean and population std over training rows only."""
    x_train = np.asarray(x_train, dtype=np.float64)
    if x_train.ndim != 2 or x_train.shape[0] < 2:
        raise ValueError("fit_scaler needs at least 2 rows")
    return Scaler(
        means=x_train.mean(axis=0),
        stds=x_train.std(axis=0),
        fitted_on=x_train.shape[0],
    )


def transform(scaler: Scaler, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    cols = x.shape[-1]
    if cols != scaler.means.size:
        raise ValueError(f"column count {cols} does not match scaler width {scaler.means.size}")
    return (x - scaler.means) / np.maximum(scaler.stds, STD_FLOOR)


@dataclass
class FusedMatrix:
    X: np.ndarray          # (n, 1536) float32
    ids: list[str]
    y_dep: np.ndarray      # (n,) int
    y_ptsd: np.ndarray     # (n,) int
    modality_mask: np.ndarray  # (n, 3) bool: audio, face, text present

    def __post_init__(self):
        n = self.X.shape[0]
        if not (len(self.ids) == n == self.y_dep.size == self.y_ptsd.size
                == self.modality_mask.shape[0]):
            raise ValueError("inconsistent row counts in fused matrix")

    @property
    def n(self) -> int:
        return self.X.shape[0]


def write_cache(matrix: FusedMatrix, cache_dir: Path) -> Path:
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    raw = np.ascontiguousarray(matrix.X, dtype="<f4").tobytes()
    (cache_dir / MATRIX_FILENAME).write_bytes(raw)
    manifest = {
        "format_version": CACHE_FORMAT_VERSION,
        "n": matrix.n,
        "dim": FUSED_DIM,
        "ids": list(matrix.ids),
        "y_dep": matrix.y_dep.astype(int).tolist(),
        "y_ptsd": matrix.y_ptsd.astype(int).tolist(),
        "modality_mask": matrix.modality_mask.astype(bool).tolist(),
        "sha256": hashlib.sha256(raw).hexdigest(),
    }
    (cache_dir / MANIFEST_FILENAME).write_text(json.dumps(manifest), encoding="utf-8")
    return cache_dir


def read_cache(cache_dir: Path) -> FusedMatrix:
    cache_dir = Path(cache_dir)
    manifest_path = cache_dir / MANIFEST_FILENAME
    if not manifest_path.is_file():
        raise FileNotFoundError(f"no cache manifest at {manifest_path}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    n = int(manifest["n"])
    dim = int(manifest["dim"])
    if n == 0:
        x = np.zeros((0, dim), dtype=np.float32)
    else:
        raw = (cache_dir / MATRIX_FILENAME).read_bytes()
        if len(raw) != n * dim * 4:
            raise CacheCorruptError(
                f"matrix size {len(raw)}B, expected {n * dim * 4}B in {cache_dir}"
            )
        if hashlib.sha256(raw).hexdigest() != manifest["sha256"]:
            raise CacheCorruptError(f"checksum mismatch in {cache_dir}")
        x = np.frombuffer(raw, dtype="<f4").reshape(n, dim).copy()
    return FusedMatrix(
        X=x,
        ids=[str(s) for s in manifest["ids"]],
        y_dep=np.asarray(manifest["y_dep"], dtype=np.int64),
        y_ptsd=np.asarray(manifest["y_ptsd"], dtype=np.int64),
        modality_mask=np.asarray(manifest["modality_mask"], dtype=bool).reshape(n, 3),
    )
