"""Writers for the unitgrid feature-file and manifest formats.

The binary layout is the toolkit's external interface (little-endian): magic
``SFEA``, version u16 = 1, reserved u16 = 0, dim u32, frames u32, hop_ms f32,
then frames*dim f32 row-major. Manifests are UTF-8 TSV lines of
``utt_id<TAB>relative_path<TAB>duration_ms``.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

FEATURE_MAGIC = b"SFEA"
FEATURE_VERSION = 1
FEATURE_SUFFIX = ".sfea"


def write_feature_file(values: np.ndarray, hop_ms: float, path: Path | str) -> None:
    values = np.ascontiguousarray(values, dtype=np.float32)
    if values.ndim != 2 or values.shape[1] < 1:
        raise ValueError(f"feature matrix must be (frames, dim>=1), got {values.shape}")
    if not np.isfinite(values).all():
        raise ValueError("feature values must be finite")
    frames, dim = values.shape
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<HHIIf", FEATURE_VERSION, 0, dim, frames, float(hop_ms)))
        fh.write(values.astype("<f4", copy=False).tobytes())


def write_manifest(entries: list[tuple[str, str, float]], path: Path | str) -> None:
    """entries: (utt_id, relative path, duration_ms), written in order."""
    lines = [f"{utt_id}\t{rel}\t{duration!r}\n" for utt_id, rel, duration in entries]
    Path(path).write_text("".join(lines), encoding="utf-8")


def read_manifest_durations(path: Path | str) -> dict[str, float]:
    """utt_id -> duration_ms from a unitgrid manifest."""
    out: dict[str, float] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        utt_id, _, duration = line.split("\t")
        out[utt_id] = float(duration)
    return out
