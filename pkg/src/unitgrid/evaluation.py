"""Paired-stimuli zero-shot evaluation: pair scoring, per-category splits,
seed aggregation, and (N, K) grid tables.

Benchmark manifests are JSON-lines with one object per pair:
``{"pair_id": ..., "category": ..., "pos": ..., "neg": ...}`` where pos/neg
reference unit-corpus entries or feature files. Reports are written as JSON
and CSV.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .ngram import ScoreTable, SequenceScorer
from .units import UnitSequence

BENCHMARKS = ("sblimp", "swuggy", "pros_syntax", "pros_lexical", "tsc", "custom")


@dataclass(frozen=True)
class StimulusPair:
    pair_id: str
    benchmark: str
    category: str
    pos_units: UnitSequence | None = None
    neg_units: UnitSequence | None = None

    def __post_init__(self):
        if not self.pair_id:
            raise ValueError("pair_id must be non-empty")
        if not self.category:
            raise ValueError(f"{self.pair_id}: category must be non-empty")


@dataclass(frozen=True)
class PairResult:
    pair_id: str
    category: str
    pos_score: float
    neg_score: float

    @property
    def credit(self) -> float:
        if self.pos_score > self.neg_score:
            return 1.0
        if self.pos_score < self.neg_score:
            return 0.0
        return 0.5

    @property
    def tie(self) -> bool:
        return self.pos_score == self.neg_score


@dataclass(frozen=True)
class EvalReport:
    benchmark: str
    config: dict
    accuracy: float
    per_category: dict[str, float]
    category_counts: dict[str, int]
    tie_rate: float
    num_pairs: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        return cls(**json.loads(text))


def score_pairs(
    scorer: SequenceScorer | ScoreTable, pairs: Sequence[StimulusPair]
) -> list[PairResult]:
    """Score every pair with the scoring contract or a pre-scored table."""
    results = []
    for pair in pairs:
        if isinstance(scorer, ScoreTable):
            if pair.pair_id not in scorer.scores:
                raise KeyError(f"no external score for pair {pair.pair_id!r}")
            pos, neg = scorer.scores[pair.pair_id]
        else:
            if pair.pos_units is None or pair.neg_units is None:
                raise ValueError(f"{pair.pair_id}: pair carries no unit sequences to score")
            try:
                pos = scorer.score_units(pair.pos_units.units)
                neg = scorer.score_units(pair.neg_units.units)
            except Exception as exc:
                raise RuntimeError(f"scorer failed on pair {pair.pair_id!r}: {exc}") from exc
        if not (math.isfinite(pos) and math.isfinite(neg)):
            raise RuntimeError(f"scorer returned a non-finite score for pair {pair.pair_id!r}")
        results.append(PairResult(pair.pair_id, pair.category, pos, neg))
    return results


def split_by_category(results: Iterable[PairResult]) -> dict[str, float]:
    """Mean pair credit per category; categories with zero pairs are omitted."""
    credit: dict[str, float] = {}
    counts: dict[str, int] = {}
    for r in results:
        credit[r.category] = credit.get(r.category, 0.0) + r.credit
        counts[r.category] = counts.get(r.category, 0) + 1
    return {cat: credit[cat] / counts[cat] for cat in credit}


def evaluate(
    scorer: SequenceScorer | ScoreTable,
    pairs: Sequence[StimulusPair],
    config: dict | None = None,
) -> EvalReport:
    """Accuracy over pairs: 1 if the correct member scores higher, 0 if lower,
    0.5 on an exact tie; ties are also reported separately as tie_rate."""
    if not pairs:
        raise ValueError("cannot evaluate an empty pair list")
    benchmarks = {p.benchmark for p in pairs}
    if len(benchmarks) > 1:
        raise ValueError(f"pairs span multiple benchmarks: {sorted(benchmarks)}")
    results = score_pairs(scorer, pairs)
    per_category = split_by_category(results)
    counts: dict[str, int] = {}
    for r in results:
        counts[r.category] = counts.get(r.category, 0) + 1
    return EvalReport(
        benchmark=next(iter(benchmarks)),
        config=dict(config or {}),
        accuracy=sum(r.credit for r in results) / len(results),
        per_category=per_category,
        category_counts=counts,
        tie_rate=sum(1 for r in results if r.tie) / len(results),
        num_pairs=len(results),
    )


# -- seed aggregation and grid tables -------------------------------------


@dataclass(frozen=True)
class SeedAggregate:
    """Mean and population std per metric across seed reports of one cell."""

    benchmark: str
    n_label: str
    k: int
    num_seeds: int
    metrics: dict[str, tuple[float, float]]  # name -> (mean, std)

    @property
    def mean_accuracy(self) -> float:
        return self.metrics["accuracy"][0]


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    mean = sum(values) / len(values)
    var = sum((v - mean) ** 2 for v in values) / len(values)
    return mean, math.sqrt(var)


def aggregate_seeds(
    reports: Sequence[EvalReport], n_label: str | int | None = None, k: int | None = None
) -> SeedAggregate:
    """Aggregate per-seed reports that share one (benchmark, N, K) cell."""
    if not reports:
        raise ValueError("aggregate requires at least one report")
    benchmarks = {r.benchmark for r in reports}
    if len(benchmarks) > 1:
        raise ValueError(f"reports span multiple benchmarks: {sorted(benchmarks)}")
    labels = {str(r.config.get("n", n_label)) for r in reports}
    ks = {r.config.get("k", k) for r in reports}
    if len(labels) > 1 or len(ks) > 1 or None in ks:
        raise ValueError("reports span multiple (N, K) configurations or lack them")
    metrics: dict[str, tuple[float, float]] = {
        "accuracy": _mean_std([r.accuracy for r in reports]),
        "tie_rate": _mean_std([r.tie_rate for r in reports]),
    }
    categories = sorted({c for r in reports for c in r.per_category})
    for cat in categories:
        values = [r.per_category[cat] for r in reports if cat in r.per_category]
        metrics[f"category:{cat}"] = _mean_std(values)
    return SeedAggregate(
        benchmark=next(iter(benchmarks)),
        n_label=next(iter(labels)),
        k=int(next(iter(ks))),
        num_seeds=len(reports),
        metrics=metrics,
    )


@dataclass(frozen=True)
class GridMatrix:
    row_labels: tuple[str, ...]  # N values (or variable-plan labels)
    col_labels: tuple[int, ...]  # K values
    cells: dict[tuple[str, int], float]

    def get(self, n_label: str, k: int) -> float | None:
        return self.cells.get((n_label, k))


@dataclass(frozen=True)
class BestKRow:
    n_label: str
    best_k: int
    value: float


@dataclass(frozen=True)
class GridTables:
    per_benchmark: dict[str, GridMatrix]
    average: GridMatrix
    best_k: tuple[BestKRow, ...]


def _label_sort_key(label: str):
    try:
        return (0, float(label), label)
    except ValueError:
        return (1, 0.0, label)


def grid_table(aggregates: Sequence[SeedAggregate]) -> GridTables:
    """Per-benchmark (N, K) matrices plus a cross-benchmark average matrix and
    the per-N argmax-K summary. Missing cells stay absent; argmax ties break
    toward the smaller K."""
    if not aggregates:
        raise ValueError("grid_table requires at least one aggregate")
    seen: set[tuple[str, str, int]] = set()
    for agg in aggregates:
        key = (agg.benchmark, agg.n_label, agg.k)
        if key in seen:
            raise ValueError(f"duplicate aggregate for cell {key}")
        seen.add(key)

    row_labels = tuple(sorted({a.n_label for a in aggregates}, key=_label_sort_key))
    col_labels = tuple(sorted({a.k for a in aggregates}))
    per_benchmark: dict[str, GridMatrix] = {}
    for bench in sorted({a.benchmark for a in aggregates}):
        cells = {
            (a.n_label, a.k): a.mean_accuracy for a in aggregates if a.benchmark == bench
        }
        per_benchmark[bench] = GridMatrix(row_labels, col_labels, cells)

    # cross-benchmark average over benchmarks that have the cell
    avg_cells: dict[tuple[str, int], float] = {}
    for n in row_labels:
        for k in col_labels:
            vals = [m.get(n, k) for m in per_benchmark.values() if m.get(n, k) is not None]
            if vals:
                avg_cells[(n, k)] = sum(vals) / len(vals)
    average = GridMatrix(row_labels, col_labels, avg_cells)

    best_rows = []
    for n in row_labels:
        best: tuple[int, float] | None = None
        for k in col_labels:  # ascending K, strict > keeps the smaller K on ties
            v = average.get(n, k)
            if v is not None and (best is None or v > best[1]):
                best = (k, v)
        if best is not None:
            best_rows.append(BestKRow(n_label=n, best_k=best[0], value=best[1]))
    return GridTables(per_benchmark=per_benchmark, average=average, best_k=tuple(best_rows))


# -- manifest and report I/O ----------------------------------------------


@dataclass(frozen=True)
class BenchmarkPairRef:
    """One JSONL manifest row; pos/neg name unit-corpus entries or feature files."""

    pair_id: str
    category: str
    pos: str
    neg: str


def read_benchmark_manifest(path: Path | str) -> list[BenchmarkPairRef]:
    refs = []
    seen = set()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        obj = json.loads(line)
        missing = {"pair_id", "category", "pos", "neg"} - set(obj)
        if missing:
            raise ValueError(f"{path}:{lineno}: missing fields {sorted(missing)}")
        if obj["pair_id"] in seen:
            raise ValueError(f"{path}:{lineno}: duplicate pair_id {obj['pair_id']!r}")
        seen.add(obj["pair_id"])
        refs.append(
            BenchmarkPairRef(
                pair_id=obj["pair_id"], category=obj["category"], pos=obj["pos"], neg=obj["neg"]
            )
        )
    return refs


def pairs_from_unit_corpus(
    refs: Sequence[BenchmarkPairRef],
    corpus: dict[str, UnitSequence],
    benchmark: str = "custom",
) -> list[StimulusPair]:
    """Resolve manifest rows against a unit corpus keyed by utt_id."""
    pairs = []
    for ref in refs:
        try:
            pos, neg = corpus[ref.pos], corpus[ref.neg]
        except KeyError as exc:
            raise KeyError(f"pair {ref.pair_id!r} references unknown utterance {exc}") from exc
        pairs.append(
            StimulusPair(
                pair_id=ref.pair_id,
                benchmark=benchmark,
                category=ref.category,
                pos_units=pos,
                neg_units=neg,
            )
        )
    return pairs


def report_csv_text(aggregates: Sequence[SeedAggregate]) -> str:
    """Rows: benchmark, N, K, seed-mean, seed-std, tie_rate, per-category columns."""
    categories = sorted(
        {m[len("category:") :] for a in aggregates for m in a.metrics if m.startswith("category:")}
    )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["benchmark", "n", "k", "accuracy_mean", "accuracy_std", "tie_rate_mean"]
        + [f"category_{c}" for c in categories]
    )
    for a in aggregates:
        row = [
            a.benchmark,
            a.n_label,
            a.k,
            repr(a.metrics["accuracy"][0]),
            repr(a.metrics["accuracy"][1]),
            repr(a.metrics["tie_rate"][0]),
        ]
        for c in categories:
            m = a.metrics.get(f"category:{c}")
            row.append("" if m is None else repr(m[0]))
        writer.writerow(row)
    return buf.getvalue()


def write_report_csv(aggregates: Sequence[SeedAggregate], path: Path | str) -> None:
    Path(path).write_text(report_csv_text(aggregates), encoding="utf-8")
