"""Cohort scanning, severity banding, label maps, and transcript cleaning."""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

log = logging.getLogger(__name__)

MISSING = -1

PHQ8_MAX = 24
PCL_MAX = 80

# Band midpoints used as class anchors for expected-severity mapping.
DEP_ANCHORS = (2.0, 7.0, 12.0, 17.0, 22.0)
PTSD_ANCHORS = (10.0, 30.5, 60.5)

DEP_CLASSES = 5
PTSD_CLASSES = 3


class Corpus(Enum):
    EDAIC = "edaic"
    DAICWOZ = "daicwoz"
    SYNTHETIC = "synthetic"


class ConfigError(Exception):
    """Unusable configuration (missing root, unreadable metadata)."""


def map_dep_class(phq8_total: int) -> int:
    """Band a PHQ-8 total (0..24) into a severity class 0..4."""
    if not 0 <= phq8_total <= PHQ8_MAX:
        raise ValueError(f"PHQ-8 total out of range: {phq8_total}")
    if phq8_total <= 4:
        return 0
    if phq8_total <= 9:
        return 1
    if phq8_total <= 14:
        return 2
    if phq8_total <= 19:
        return 3
    return 4


def map_ptsd_class(pcl_total: int) -> int:
    """Band a PCL total (0..80) into a severity class 0..2."""
    if not 0 <= pcl_total <= PCL_MAX:
        raise ValueError(f"PCL total out of range: {pcl_total}")
    if pcl_total <= 20:
        return 0
    if pcl_total <= 40:
        return 1
    return 2


@dataclass
class ParticipantRecord:
    """One interviewee with discovered modality files and banded labels."""

    id: str
    corpus: Corpus
    audio_path: Path | None = None
    face_csv_path: Path | None = None
    transcript_path: Path | None = None
    text_embedding_path: Path | None = None
    phq8_total: int = MISSING
    pcl_total: int = MISSING
    dep_class: int = MISSING
    ptsd_class: int = MISSING

    def has_labels(self) -> bool:
        return self.dep_class >= 0 and self.ptsd_class >= 0


@dataclass
class LabelMaps:
    """id -> raw score maps; MISSING (-1) marks absent labels.

    ptsd_classes holds severity classes accepted directly from metadata for
    ids whose PCL total is unavailable.
    """

    dep_totals: dict[str, int] = field(default_factory=dict)
    pcl_totals: dict[str, int] = field(default_factory=dict)
    ptsd_classes: dict[str, int] = field(default_factory=dict)

    def dep_class_for(self, pid: str) -> tuple[int, int]:
        total = self.dep_totals.get(pid, MISSING)
        if total < 0:
            return MISSING, MISSING
        return total, map_dep_class(total)

    def ptsd_class_for(self, pid: str) -> tuple[int, int]:
        total = self.pcl_totals.get(pid, MISSING)
        if total >= 0:
            return total, map_ptsd_class(total)
        cls = self.ptsd_classes.get(pid, MISSING)
        return MISSING, cls


def _norm_header(name: str) -> str:
    return re.sub(r"[^a-z0-9]", "", name.lower())


def _sniff_delimiter(header_line: str) -> str:
    for delim in ("\t", ";", ","):
        if delim in header_line:
            return delim
    return ","


def _read_table(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8-sig") as fh:
        first = fh.readline()
        if not first:
            return [], []
        delim = _sniff_delimiter(first)
        fh.seek(0)
        rows = list(csv.reader(fh, delimiter=delim))
    return rows[0], rows[1:]


def _to_int(value: str) -> int:
    try:
        return int(round(float(value)))
    except (TypeError, ValueError):
        return MISSING


def load_label_file(path: Path, maps: LabelMaps) -> None:
    """Merge one delimiter-separated label file into the maps.

    Recognized columns (whitespace/case tolerant): a participant id column,
    a PHQ-8 total, a PCL total, and/or a precomputed PTSD severity class.
    """
    header, rows = _read_table(path)
    norm = [_norm_header(h) for h in header]

    def find(*preds) -> int | None:
        for i, name in enumerate(norm):
            if any(p(name) for p in preds):
                return i
        return None

    id_col = find(lambda n: "participant" in n and "id" in n,
                  lambda n: n in ("participant", "id", "pid"))
    dep_col = find(lambda n: "phq" in n and ("total" in n or "score" in n))
    pcl_col = find(lambda n: "pcl" in n and ("total" in n or "score" in n))
    sev_col = find(lambda n: "ptsd" in n and ("severity" in n or "class" in n))

    if id_col is None:
        raise ConfigError(f"no participant id column in {path} (header: {header})")
    if dep_col is None and pcl_col is None and sev_col is None:
        log.warning("no label columns recognized in %s", path)
        return

    for row in rows:
        if id_col >= len(row):
            continue
        pid = row[id_col].strip()
        if not pid:
            continue
        if dep_col is not None and dep_col < len(row):
            v = _to_int(row[dep_col])
            if 0 <= v <= PHQ8_MAX:
                maps.dep_totals[pid] = v
        if pcl_col is not None and pcl_col < len(row):
            v = _to_int(row[pcl_col])
            if 0 <= v <= PCL_MAX:
                maps.pcl_totals[pid] = v
        if sev_col is not None and sev_col < len(row):
            v = _to_int(row[sev_col])
            if 0 <= v < PTSD_CLASSES:
                maps.ptsd_classes[pid] = v


def build_label_maps(paths: Iterable[Path]) -> LabelMaps:
    maps = LabelMaps()
    for path in paths:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"label file not found: {path}")
        load_label_file(path, maps)
    return maps


_AUDIO_SUFFIXES = (".wav",)
_FACE_HINTS = ("openface", "au", "gaze", "pose", "clnf", "features")
_TRANSCRIPT_HINT = "transcript"


def _discover_files(pdir: Path, pid: str) -> dict[str, Path | None]:
    audio = face = transcript = embedding = None
    for f in sorted(pdir.iterdir()):
        if not f.is_file():
            continue
        low = f.name.lower()
        if low.endswith(_AUDIO_SUFFIXES) and audio is None:
            audio = f
        elif _TRANSCRIPT_HINT in low and transcript is None:
            transcript = f
        elif low.endswith(".emb.f32le") and embedding is None:
            embedding = f
        elif low.endswith((".csv", ".txt")) and any(h in low for h in _FACE_HINTS):
            # Prefer files that name the tracker output explicitly.
            if face is None or ("openface" in low and "openface" not in face.name.lower()):
                face = f
    return {"audio": audio, "face": face, "transcript": transcript, "embedding": embedding}


def scan_participants(
    roots: Sequence[Path | str],
    corpora: Sequence[Corpus] | None = None,
    labels: LabelMaps | None = None,
    embeddings_dir: Path | None = None,
) -> list[ParticipantRecord]:
    """Scan roots for participant folders (names ending in "_P").

    Returns one record per folder, in lexicographic id order, with modality
    paths set to discovered files. Label maps, when given, fill raw totals
    and banded classes; ids without labels keep the MISSING sentinel.
    """
    if corpora is not None and len(corpora) != len(roots):
        raise ConfigError("corpora must align with roots")
    records: dict[str, ParticipantRecord] = {}
    for i, root in enumerate(roots):
        root = Path(root)
        if not root.is_dir():
            raise ConfigError(f"data root not found: {root}")
        corpus = corpora[i] if corpora is not None else Corpus.EDAIC
        for pdir in sorted(root.iterdir()):
            if not pdir.is_dir() or not pdir.name.endswith("_P"):
                continue
            pid = pdir.name[:-2]
            try:
                found = _discover_files(pdir, pid)
            except OSError as exc:
                log.warning("unreadable participant folder %s: %s", pdir, exc)
                found = {"audio": None, "face": None, "transcript": None, "embedding": None}
            rec = ParticipantRecord(
                id=pid,
                corpus=corpus,
                audio_path=found["audio"],
                face_csv_path=found["face"],
                transcript_path=found["transcript"],
                text_embedding_path=found["embedding"],
            )
            if rec.text_embedding_path is None and embeddings_dir is not None:
                cand = Path(embeddings_dir) / f"{pid}.emb.f32le"
                if cand.is_file():
                    rec.text_embedding_path = cand
            if labels is not None:
                rec.phq8_total, rec.dep_class = labels.dep_class_for(pid)
                rec.pcl_total, rec.ptsd_class = labels.ptsd_class_for(pid)
            if pid in records:
                log.warning("duplicate participant id %s; keeping first occurrence", pid)
                continue
            records[pid] = rec
    return [records[pid] for pid in sorted(records)]


_PATIENT_SPEAKERS = ("participant", "patient", "subject")
_NON_WORD = re.compile(r"[^a-z0-9\s]+")
_ANNOTATION = re.compile(r"<[^>]*>|\[[^\]]*\]")
_WS = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    """Lowercase, drop annotation tags and punctuation, collapse whitespace."""
    text = _ANNOTATION.sub(" ", text.lower())
    text = _NON_WORD.sub("", text)
    return _WS.sub(" ", text).strip()


def clean_transcript(raw: str) -> str:
    """Reduce a turn-annotated transcript to normalized patient-only text.

    Tab/comma separated layouts with a speaker column keep only patient
    turns; layouts with a text column but no speaker column are treated as
    patient speech per row; anything else is treated as plain patient text
    (with a warning, since the format is unknown).
    """
    lines = raw.splitlines()
    if not lines:
        return ""
    delim = _sniff_delimiter(lines[0])
    header = [_norm_header(h) for h in lines[0].split(delim)]
    speaker_col = next((i for i, h in enumerate(header) if h == "speaker"), None)
    text_col = next((i for i, h in enumerate(header) if h in ("value", "text", "utterance")), None)

    if text_col is None:
        if speaker_col is None and len(header) > 1 and any(h for h in header):
            log.warning("unknown transcript layout; treating whole file as patient speech")
        return normalize_text(raw)

    reader = csv.reader(lines[1:], delimiter=delim)
    turns: list[str] = []
    for row in reader:
        if text_col >= len(row):
            continue
        if speaker_col is not None:
            if speaker_col >= len(row):
                continue
            speaker = row[speaker_col].strip().lower()
            if not any(s in speaker for s in _PATIENT_SPEAKERS):
                continue
        turns.append(row[text_col])
    return normalize_text(" ".join(turns))


def read_transcript_text(path: Path) -> str:
    with open(path, encoding="utf-8", errors="replace") as fh:
        return clean_transcript(fh.read())
