"""Fixed- and variable-width segmentation with mean pooling, plus width statistics.

Boundaries are segment END frame indices, exclusive. A boundary file is UTF-8
lines of ``utt_id<TAB>e1 e2 ... eM``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import FeatureMatrix


@dataclass(frozen=True)
class FixedPlan:
    """Fixed segmentation width in ms; must be a positive multiple of the hop."""

    width_ms: float


@dataclass(frozen=True)
class VariablePlan:
    """Ascending segment end frame indices; the last must equal T."""

    ends: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "ends", tuple(int(e) for e in self.ends))

    def widths(self) -> list[int]:
        prev = 0
        out = []
        for e in self.ends:
            out.append(e - prev)
            prev = e
        return out


SegmentationPlan = FixedPlan | VariablePlan


@dataclass(frozen=True, eq=False)
class PooledSequence:
    """S x D mean-pooled segment vectors with their (start, end) frame spans."""

    segments: np.ndarray  # (S, D) float32
    spans: tuple[tuple[int, int], ...]
    hop_ms: float

    def __len__(self) -> int:
        return self.segments.shape[0]


def frames_per_segment(width_ms: float, hop_ms: float) -> int:
    """Validated segment width in frames (width must be a positive hop multiple)."""
    if hop_ms <= 0:
        raise ValueError(f"hop_ms must be > 0, got {hop_ms}")
    ratio = width_ms / hop_ms
    rounded = round(ratio)
    if rounded < 1 or abs(ratio - rounded) > 1e-9:
        raise ValueError(
            f"width_ms={width_ms} is not a positive integer multiple of hop_ms={hop_ms}"
        )
    return int(rounded)


def segment_fixed(features: FeatureMatrix, width_ms: float) -> PooledSequence:
    """Tile [0, T) into ceil(T/w)-many spans of w frames (last may be shorter)."""
    w = frames_per_segment(width_ms, features.hop_ms)
    t = features.frames
    spans = tuple((s, min(s + w, t)) for s in range(0, t, w))
    return PooledSequence(_pool(features.values, spans), spans, features.hop_ms)


def segment_variable(features: FeatureMatrix, ends: list[int] | tuple[int, ...]) -> PooledSequence:
    """Pool over spans [prev_end, end) for the given ascending end indices."""
    t = features.frames
    ends = [int(e) for e in ends]
    if t == 0:
        if ends:
            raise ValueError("ends must be empty for an empty feature matrix")
        return PooledSequence(features.values.copy(), (), features.hop_ms)
    if not ends:
        raise ValueError("ends must be non-empty for a non-empty feature matrix")
    prev = 0
    for e in ends:
        if e <= prev:
            raise ValueError(f"ends must be strictly ascending and > 0, got {ends}")
        if e > t:
            raise ValueError(f"end index {e} exceeds frame count {t}")
        prev = e
    if ends[-1] != t:
        raise ValueError(f"final end index must equal frame count {t}, got {ends[-1]}")
    spans = tuple(zip([0] + ends[:-1], ends))
    return PooledSequence(_pool(features.values, spans), spans, features.hop_ms)


def segment(features: FeatureMatrix, plan: SegmentationPlan) -> PooledSequence:
    if isinstance(plan, FixedPlan):
        return segment_fixed(features, plan.width_ms)
    if isinstance(plan, VariablePlan):
        return segment_variable(features, plan.ends)
    raise TypeError(f"not a segmentation plan: {plan!r}")


def _pool(values: np.ndarray, spans: tuple[tuple[int, int], ...]) -> np.ndarray:
    # accumulate in float64, emit float32 (bounds error on long segments)
    if not spans:
        return np.zeros((0, values.shape[1]), dtype=np.float32)
    acc = values.astype(np.float64)
    starts = [s for s, _ in spans]
    sums = np.add.reduceat(acc, starts, axis=0)
    counts = np.array([e - s for s, e in spans], dtype=np.float64)
    return (sums / counts[:, None]).astype(np.float32)


@dataclass(frozen=True)
class WidthStats:
    median_ms: float
    mean_ms: float
    histogram: dict[float, int]  # width_ms -> segment count


def width_stats(plans: list[VariablePlan], hop_ms: float) -> WidthStats:
    """Pooled segment-width statistics over all plans, in ms.

    The median of an even-count distribution is the lower of the two middle
    values (deterministic, no interpolation).
    """
    widths = [w * hop_ms for plan in plans for w in plan.widths()]
    if not widths:
        raise ValueError("width_stats requires at least one segment")
    widths.sort()
    median = widths[(len(widths) - 1) // 2]
    histogram: dict[float, int] = {}
    for w in widths:
        histogram[w] = histogram.get(w, 0) + 1
    return WidthStats(median_ms=median, mean_ms=sum(widths) / len(widths), histogram=histogram)


def write_boundaries(plans: dict[str, VariablePlan], path: Path | str) -> None:
    lines = [
        f"{utt_id}\t{' '.join(str(e) for e in plan.ends)}\n" for utt_id, plan in plans.items()
    ]
    Path(path).write_text("".join(lines), encoding="utf-8")


def read_boundaries(path: Path | str) -> dict[str, VariablePlan]:
    """Parse a boundary file into per-utterance VariablePlans."""
    out: dict[str, VariablePlan] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        utt_id, _, rest = line.partition("\t")
        if not utt_id:
            raise ValueError(f"{path}:{lineno}: missing utt_id")
        out[utt_id] = VariablePlan(tuple(int(tok) for tok in rest.split()))
    return out
