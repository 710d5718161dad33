"""Convert external segmenter outputs (times in seconds) into frame-indexed
boundary files for the segmenter's variable mode.

Times are snapped to the nearest frame (ties round up), the final boundary is
forced to the utterance's frame count, and zero-width segments produced by
rounding are merged. Times may overshoot the utterance end by at most one
frame (that boundary collapses onto T); anything later is rejected.
"""

from __future__ import annotations

import math
from pathlib import Path


def read_times_file(path: Path | str) -> dict[str, list[float]]:
    """TSV lines ``utt_id<TAB>t1 t2 ...`` in seconds."""
    out: dict[str, list[float]] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        utt_id, _, rest = line.partition("\t")
        if not utt_id:
            raise ValueError(f"{path}:{lineno}: missing utt_id")
        out[utt_id] = [float(tok) for tok in rest.split()]
    return out


def snap_times_to_frames(times_s: list[float], hop_ms: float, frames: int) -> list[int]:
    """Ascending end-frame indices for one utterance; last index equals frames."""
    prev = 0.0
    for t in times_s:
        if t < prev:
            raise ValueError(f"boundary times must be ascending, got {times_s}")
        prev = t
    duration_ms = frames * hop_ms
    ends: list[int] = []
    for t in times_s:
        ms = t * 1000.0
        if ms > duration_ms + hop_ms:
            raise ValueError(
                f"boundary at {t} s exceeds the {duration_ms / 1000.0} s utterance "
                "by more than one frame"
            )
        idx = min(int(math.floor(ms / hop_ms + 0.5)), frames)  # nearest, ties up
        if idx > 0 and (not ends or idx > ends[-1]):
            ends.append(idx)
    if not ends or ends[-1] != frames:
        ends.append(frames)
    return ends


def convert_boundaries(
    times_path: Path | str, hop_ms: float, frames_by_utt: dict[str, int]
) -> dict[str, list[int]]:
    """Snap every utterance's boundary times; utterances must have known frame counts."""
    converted: dict[str, list[int]] = {}
    for utt_id, times in read_times_file(times_path).items():
        if utt_id not in frames_by_utt:
            raise KeyError(f"no frame count for utterance {utt_id!r}")
        converted[utt_id] = snap_times_to_frames(times, hop_ms, frames_by_utt[utt_id])
    return converted


def frames_from_durations(durations_ms: dict[str, float], hop_ms: float) -> dict[str, int]:
    """Frame counts from manifest durations (duration = frames * hop)."""
    return {utt: int(round(d / hop_ms)) for utt, d in durations_ms.items()}


def write_boundary_file(plans: dict[str, list[int]], path: Path | str) -> None:
    lines = [f"{utt}\t{' '.join(str(e) for e in ends)}\n" for utt, ends in plans.items()]
    Path(path).write_text("".join(lines), encoding="utf-8")
