"""Per-utterance unit encoding (segment -> pool -> assign -> deduplicate),
corpus token statistics, and time-aligned unit diffs.

Unit corpus files are UTF-8 lines of ``utt_id<TAB>u1 u2 ...`` with an optional
sibling span file ``utt_id<TAB>s1:e1 s2:e2 ...`` in ms.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from itertools import groupby
from pathlib import Path
from typing import Iterable, Sequence

from .features import FeatureMatrix
from .kmeans import Codebook, assign
from .segmenter import SegmentationPlan, segment


@dataclass(frozen=True)
class UnitSequence:
    """An utterance's discrete units with optional per-unit (start_ms, end_ms) spans."""

    utt_id: str
    units: tuple[int, ...]
    spans: tuple[tuple[float, float], ...] | None = None
    dedup: bool = False

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(int(u) for u in self.units))
        if self.dedup:
            for a, b in zip(self.units, self.units[1:]):
                if a == b:
                    raise ValueError("dedup sequence contains adjacent equal units")
        if self.spans is not None:
            spans = tuple((float(s), float(e)) for s, e in self.spans)
            if len(spans) != len(self.units):
                raise ValueError(
                    f"spans length {len(spans)} != units length {len(self.units)}"
                )
            prev = 0.0
            for s, e in spans:
                if s != prev or e <= s:
                    raise ValueError(f"spans must tile the timeline contiguously, got {spans}")
                prev = e
            object.__setattr__(self, "spans", spans)

    def duration_ms(self) -> float:
        return self.spans[-1][1] if self.spans else 0.0


def deduplicate(units: Sequence[int]) -> list[int]:
    """Collapse maximal runs of equal adjacent units to one occurrence."""
    return [u for u, _ in groupby(units)]


def _dedup_with_spans(
    units: Sequence[int], spans: Sequence[tuple[float, float]]
) -> tuple[tuple[int, ...], tuple[tuple[float, float], ...]]:
    out_units: list[int] = []
    out_spans: list[tuple[float, float]] = []
    for u, grp in groupby(range(len(units)), key=lambda i: units[i]):
        idx = list(grp)
        out_units.append(u)
        out_spans.append((spans[idx[0]][0], spans[idx[-1]][1]))
    return tuple(out_units), tuple(out_spans)


def encode(
    features: FeatureMatrix,
    plan: SegmentationPlan,
    codebook: Codebook,
    dedup: bool = True,
    utt_id: str = "",
) -> UnitSequence:
    """Run the full pipeline on one utterance: segment, pool, assign, deduplicate."""
    pooled = segment(features, plan)
    if pooled.segments.shape[1] != codebook.dim and len(pooled):
        raise ValueError(f"feature dim {pooled.segments.shape[1]} != codebook dim {codebook.dim}")
    ids = assign(codebook, pooled.segments)
    hop = pooled.hop_ms
    spans = tuple((s * hop, e * hop) for s, e in pooled.spans)
    units = tuple(int(u) for u in ids)
    if dedup:
        units, spans = _dedup_with_spans(units, spans)
    return UnitSequence(utt_id=utt_id, units=units, spans=spans, dedup=dedup)


@dataclass(frozen=True)
class CorpusStats:
    """Token totals for one (N, K) configuration, before and after dedup."""

    config: tuple
    total_tokens_pre_dedup: int
    total_tokens_post_dedup: int
    per_utterance: dict[str, tuple[int, int]]  # utt_id -> (pre, post)


def corpus_stats(corpus: Iterable[UnitSequence], config: tuple) -> CorpusStats:
    """Exact token totals before/after dedup.

    Expects sequences encoded without dedup; for already-deduplicated input the
    pre/post totals coincide (dedup is idempotent). Mixed dedup flags are
    rejected as mixed configurations.
    """
    per_utt: dict[str, tuple[int, int]] = {}
    flags = set()
    for seq in corpus:
        flags.add(seq.dedup)
        per_utt[seq.utt_id] = (len(seq.units), len(deduplicate(seq.units)))
    if len(flags) > 1:
        raise ValueError("corpus mixes deduplicated and raw unit sequences")
    return CorpusStats(
        config=tuple(config),
        total_tokens_pre_dedup=sum(pre for pre, _ in per_utt.values()),
        total_tokens_post_dedup=sum(post for _, post in per_utt.values()),
        per_utterance=per_utt,
    )


@dataclass(frozen=True)
class AlignedInterval:
    start_ms: float
    end_ms: float
    unit_a: int | None
    unit_b: int | None
    differs: bool


def align_diff(a: UnitSequence, b: UnitSequence) -> list[AlignedInterval]:
    """Partition the union timeline at every span boundary from either sequence.

    Each interval reports which unit is active in each sequence (None past its
    end) and whether they differ. Comparison is by time region, not by
    sequence alignment.
    """
    if a.spans is None or b.spans is None:
        raise ValueError("align_diff requires both sequences to carry spans")
    edges = sorted({0.0} | {e for _, e in a.spans} | {e for _, e in b.spans})
    starts_a = [s for s, _ in a.spans]
    starts_b = [s for s, _ in b.spans]

    def active(seq: UnitSequence, starts: list[float], t: float) -> int | None:
        if seq.spans and t < seq.spans[-1][1]:
            return seq.units[bisect_right(starts, t) - 1]
        return None

    out = []
    for t0, t1 in zip(edges, edges[1:]):
        ua = active(a, starts_a, t0)
        ub = active(b, starts_b, t0)
        out.append(AlignedInterval(t0, t1, ua, ub, differs=ua != ub))
    return out


def write_unit_corpus(
    corpus: Iterable[UnitSequence], path: Path | str, spans_path: Path | str | None = None
) -> None:
    unit_lines = []
    span_lines = []
    for seq in corpus:
        unit_lines.append(f"{seq.utt_id}\t{' '.join(str(u) for u in seq.units)}\n")
        if spans_path is not None:
            if seq.spans is None:
                raise ValueError(f"{seq.utt_id}: cannot write spans for a span-less sequence")
            span_lines.append(
                f"{seq.utt_id}\t{' '.join(f'{s!r}:{e!r}' for s, e in seq.spans)}\n"
            )
    Path(path).write_text("".join(unit_lines), encoding="utf-8")
    if spans_path is not None:
        Path(spans_path).write_text("".join(span_lines), encoding="utf-8")


def read_unit_corpus(
    path: Path | str, spans_path: Path | str | None = None, dedup: bool = False
) -> list[UnitSequence]:
    """Parse a unit corpus file; ``dedup`` declares how the file was produced."""
    spans_by_utt: dict[str, tuple[tuple[float, float], ...]] = {}
    if spans_path is not None:
        for line in Path(spans_path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            utt_id, _, rest = line.partition("\t")
            spans = []
            for tok in rest.split():
                s, _, e = tok.partition(":")
                spans.append((float(s), float(e)))
            spans_by_utt[utt_id] = tuple(spans)
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        utt_id, _, rest = line.partition("\t")
        units = tuple(int(tok) for tok in rest.split())
        out.append(
            UnitSequence(
                utt_id=utt_id, units=units, spans=spans_by_utt.get(utt_id), dedup=dedup
            )
        )
    return out
