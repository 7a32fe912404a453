"""Per-frame face tracker CSV aggregation into a 512-D descriptor.

Selected columns (gaze, head pose, AU intensities, AU presences) are
averaged over retained frames; the descriptor is [means | stds] padded
with zeros to exactly 512.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

log = logging.getLogger(__name__)

FACE_DIM = 512

GAZE_COLUMNS = (
    "gaze_0_x", "gaze_0_y", "gaze_0_z",
    "gaze_1_x", "gaze_1_y", "gaze_1_z",
    "gaze_angle_x", "gaze_angle_y",
)
POSE_COLUMNS = ("pose_Tx", "pose_Ty", "pose_Tz", "pose_Rx", "pose_Ry", "pose_Rz")
AU_INTENSITY_COLUMNS = tuple(
    f"AU{n:02d}_r" for n in (1, 2, 4, 5, 6, 7, 9, 10, 12, 14, 15, 17, 20, 23, 25, 26, 45)
)
AU_PRESENCE_COLUMNS = tuple(
    f"AU{n:02d}_c" for n in (1, 2, 4, 5, 6, 7, 9, 10, 12, 14, 15, 17, 20, 23, 25, 26, 28, 45)
)

# Canonical selection, in tracker header order (gaze, pose, AU_r, AU_c).
CANONICAL_COLUMNS = GAZE_COLUMNS + POSE_COLUMNS + AU_INTENSITY_COLUMNS + AU_PRESENCE_COLUMNS


@dataclass
class FaceFrameTable:
    """Retained frames of the selected columns, in canonical order."""

    columns: list[str]
    values: np.ndarray  # (frames, len(columns)) float64
    missing: list[str] = field(default_factory=list)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]


@dataclass
class FaceFeature:
    vector: np.ndarray  # (512,) float64
    present: bool

    @staticmethod
    def absent() -> "FaceFeature":
        return FaceFeature(np.zeros(FACE_DIM), False)


def parse_face_csv(path: Path) -> FaceFrameTable | None:
    """Load a tracker CSV; None signals an absent modality (not fatal).

    Headers are matched after whitespace stripping; rows with success == 0
    are dropped when a success column exists.
    """
    try:
        df = pd.read_csv(path, skipinitialspace=True)
    except (OSError, ValueError, pd.errors.ParserError) as exc:
        log.warning("unreadable face CSV %s: %s", path, exc)
        return None
    df.columns = [str(c).strip() for c in df.columns]
    if "success" in df.columns:
        df = df[pd.to_numeric(df["success"], errors="coerce") == 1]
    present = [c for c in CANONICAL_COLUMNS if c in df.columns]
    missing = [c for c in CANONICAL_COLUMNS if c not in df.columns]
    if not present:
        log.warning("no recognized face columns in %s", path)
        return None
    values = df[present].apply(pd.to_numeric, errors="coerce").to_numpy(dtype=np.float64)
    values = values[~np.isnan(values).any(axis=1)]
    return FaceFrameTable(columns=list(present), values=values, missing=missing)


def smooth_au_columns(table: FaceFrameTable, window: int = 5) -> FaceFrameTable:
    """Centered moving average on AU intensity columns (edges truncated)."""
    if window <= 1 or table.n_frames == 0:
        return table
    values = table.values.copy()
    au_idx = [i for i, c in enumerate(table.columns) if c.endswith("_r")]
    if au_idx:
        smoothed = (
            pd.DataFrame(values[:, au_idx])
            .rolling(window, center=True, min_periods=1)
            .mean()
            .to_numpy()
        )
        values[:, au_idx] = smoothed
    return FaceFrameTable(columns=list(table.columns), values=values, missing=list(table.missing))


def aggregate_face(table: FaceFrameTable | None) -> FaceFeature:
    """Per-column mean then population std, padded/truncated to 512.

    Columns are sorted before reduction so the result is exactly invariant
    to frame order (float summation order is canonical).
    """
    if table is None or table.n_frames == 0:
        return FaceFeature.absent()
    ordered = np.sort(table.values, axis=0)
    means = ordered.mean(axis=0)
    stds = ordered.std(axis=0)
    stacked = np.concatenate([means, stds])
    vec = np.zeros(FACE_DIM)
    n = min(stacked.size, FACE_DIM)
    vec[:n] = stacked[:n]
    return FaceFeature(vec, True)


def extract_face_feature(path: Path | None, smooth_window: int = 1) -> FaceFeature:
    if path is None:
        return FaceFeature.absent()
    table = parse_face_csv(Path(path))
    if table is not None and smooth_window > 1:
        table = smooth_au_columns(table, smooth_window)
    return aggregate_face(table)
