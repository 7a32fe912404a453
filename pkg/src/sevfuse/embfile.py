"""Binary per-participant text embedding files (*.emb.f32le).

Layout: 8-byte magic "SEVFEMB1", uint32 little-endian dimension, then
dimension float32 little-endian values. The training pipeline only reads
these files; any 768-D encoder can produce them.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"SEVFEMB1"
TEXT_DIM = 768


class EmbeddingFormatError(Exception):
    pass


def write_embedding_file(pid: str, vector: np.ndarray, outdir: Path) -> Path:
    vec = np.asarray(vector, dtype="<f4").ravel()
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / f"{pid}.emb.f32le"
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", vec.size))
        fh.write(vec.tobytes())
    return path


def read_embedding_file(path: Path, expect_dim: int | None = TEXT_DIM) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + 4 or blob[: len(MAGIC)] != MAGIC:
        raise EmbeddingFormatError(f"bad magic in {path}")
    (dim,) = struct.unpack("<I", blob[len(MAGIC): len(MAGIC) + 4])
    payload = blob[len(MAGIC) + 4:]
    if len(payload) != 4 * dim:
        raise EmbeddingFormatError(f"size mismatch in {path}: dim={dim}, payload={len(payload)}B")
    if expect_dim is not None and dim != expect_dim:
        raise EmbeddingFormatError(f"expected {expect_dim}-D embedding, got {dim}-D in {path}")
    return np.frombuffer(payload, dtype="<f4").astype(np.float64)
