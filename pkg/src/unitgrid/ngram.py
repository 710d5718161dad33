"""Interpolated Kneser-Ney n-gram scorer over unit sequences, plus an adapter
for externally computed sequence scores.

Conventions, stated once:
  - Natural-log units everywhere.
  - The event space is the unit vocabulary plus, when enabled, a terminal
    end-of-sequence symbol; a begin-of-sequence symbol is context-only and is
    never predicted. Conditional probabilities sum to 1 over the event space.
  - Sequences are padded with (order-1) BOS context symbols; the EOS terminal
    is appended when the model was trained with one.
  - Lower-order statistics are continuation (type) counts derived from the
    next-higher-order table; all count windows are anchored at predicted
    positions. The bottom of the interpolation chain is a uniform floor over
    the event space, so every sequence has non-zero probability.

Model file (little-endian): magic ``SNGM``, version u16 = 1, reserved u16 = 0,
order u32, vocab u32, flags u32 (bit0: has EOS), order f64 discounts, then per
order k = 1..n: entry count u64 followed by lexicographically sorted entries
of k u32 symbol ids and a u64 count.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence, Union

from .binio import FormatError, check_magic, check_version, read_exact
from .units import UnitSequence

MODEL_MAGIC = b"SNGM"
MODEL_VERSION = 1
DEFAULT_ORDER = 5
FALLBACK_DISCOUNT = 0.75
# Smallest allowed discount: keeps interpolation weights positive so unseen
# events always receive mass through the backoff chain.
MIN_DISCOUNT = 1e-3

Corpus = Iterable[Union[Sequence[int], UnitSequence]]


def _as_unit_lists(corpus: Corpus) -> list[list[int]]:
    out = []
    for seq in corpus:
        units = seq.units if isinstance(seq, UnitSequence) else seq
        out.append([int(u) for u in units])
    return out


class NgramModel:
    """Smoothed conditional distributions over units; immutable once trained."""

    def __init__(
        self,
        order: int,
        vocab_size: int,
        raw_tables: list[dict[tuple[int, ...], int]],
        discounts: tuple[float, ...],
        use_eos: bool,
    ):
        if order < 1:
            raise ValueError(f"order must be >= 1, got {order}")
        if vocab_size < 1:
            raise ValueError(f"vocab_size must be >= 1, got {vocab_size}")
        if len(raw_tables) != order + 1 or len(discounts) != order:
            raise ValueError("table/discount layout does not match the order")
        for d in discounts:
            if not (0.0 < d <= 1.0):
                raise ValueError(f"discounts must lie in (0, 1], got {d}")
        self.order = order
        self.vocab_size = vocab_size
        self.use_eos = use_eos
        self.bos_id = vocab_size
        self.eos_id = vocab_size + 1
        self.discounts = tuple(float(d) for d in discounts)
        self._raw = raw_tables  # index k -> raw k-gram counts; [0] unused
        self._event_space = vocab_size + (1 if use_eos else 0)
        self._build_derived()

    def _build_derived(self) -> None:
        n = self.order
        tables: list[dict[tuple[int, ...], int]] = [dict() for _ in range(n + 1)]
        tables[n] = self._raw[n]
        for k in range(n - 1, 0, -1):
            cont: dict[tuple[int, ...], int] = {}
            for key in self._raw[k + 1]:
                suffix = key[1:]
                cont[suffix] = cont.get(suffix, 0) + 1
            tables[k] = cont
        ctx_total: list[dict[tuple[int, ...], int]] = [dict() for _ in range(n + 1)]
        ctx_types: list[dict[tuple[int, ...], int]] = [dict() for _ in range(n + 1)]
        for k in range(1, n + 1):
            for key, count in tables[k].items():
                ctx = key[:-1]
                ctx_total[k][ctx] = ctx_total[k].get(ctx, 0) + count
                ctx_types[k][ctx] = ctx_types[k].get(ctx, 0) + 1
        self._tables = tables
        self._ctx_total = ctx_total
        self._ctx_types = ctx_types

    # -- probabilities ---------------------------------------------------

    def events(self) -> list[int]:
        """All predictable symbols: units plus the terminal when enabled."""
        ids = list(range(self.vocab_size))
        if self.use_eos:
            ids.append(self.eos_id)
        return ids

    def _check_event(self, event: int) -> None:
        if not (0 <= event < self.vocab_size or (self.use_eos and event == self.eos_id)):
            raise ValueError(f"symbol {event} is outside the model's event space")

    def prob(self, event: int, context: Sequence[int] = ()) -> float:
        """p(event | context); context shorter than order-1 is BOS-padded."""
        self._check_event(event)
        ctx = tuple(int(c) for c in context)[-(self.order - 1) :] if self.order > 1 else ()
        for c in ctx:
            if not (0 <= c <= self.eos_id):
                raise ValueError(f"context symbol {c} out of range")
        if len(ctx) < self.order - 1:
            ctx = (self.bos_id,) * (self.order - 1 - len(ctx)) + ctx
        return self._prob(self.order, ctx, int(event))

    def _prob(self, level: int, context: tuple[int, ...], event: int) -> float:
        if level == 0:
            return 1.0 / self._event_space
        total = self._ctx_total[level].get(context)
        lower_ctx = context[1:]
        if not total:
            return self._prob(level - 1, lower_ctx, event)
        count = self._tables[level].get(context + (event,), 0)
        d = self.discounts[level - 1]
        lam = d * self._ctx_types[level][context] / total
        return max(count - d, 0.0) / total + lam * self._prob(level - 1, lower_ctx, event)

    def logprob(self, event: int, context: Sequence[int] = ()) -> float:
        return math.log(self.prob(event, context))

    def distribution(self, context: Sequence[int] = ()) -> dict[int, float]:
        return {e: self.prob(e, context) for e in self.events()}

    def seen_contexts(self) -> list[tuple[int, ...]]:
        """Every full-length context observed at the top order."""
        return sorted(self._ctx_total[self.order])

    # -- persistence -----------------------------------------------------

    def save(self, path: Path | str) -> None:
        with open(path, "wb") as fh:
            fh.write(MODEL_MAGIC)
            fh.write(struct.pack("<HH", MODEL_VERSION, 0))
            flags = 1 if self.use_eos else 0
            fh.write(struct.pack("<III", self.order, self.vocab_size, flags))
            fh.write(struct.pack(f"<{self.order}d", *self.discounts))
            for k in range(1, self.order + 1):
                entries = sorted(self._raw[k].items())
                fh.write(struct.pack("<Q", len(entries)))
                entry = struct.Struct(f"<{k}IQ")
                for key, count in entries:
                    fh.write(entry.pack(*key, count))

    @classmethod
    def load(cls, path: Path | str) -> "NgramModel":
        with open(path, "rb") as fh:
            check_magic(fh, MODEL_MAGIC)
            check_version(fh, MODEL_VERSION)
            order, vocab, flags = struct.unpack("<III", read_exact(fh, 12, "header"))
            discounts = struct.unpack(
                f"<{order}d", read_exact(fh, 8 * order, "discounts")
            )
            raw: list[dict[tuple[int, ...], int]] = [dict() for _ in range(order + 1)]
            for k in range(1, order + 1):
                (num,) = struct.unpack("<Q", read_exact(fh, 8, "entry count"))
                entry = struct.Struct(f"<{k}IQ")
                blob = read_exact(fh, entry.size * num, f"order-{k} entries")
                table = raw[k]
                for off in range(0, len(blob), entry.size):
                    *key, count = entry.unpack_from(blob, off)
                    table[tuple(key)] = count
            if fh.read(1):
                raise FormatError(f"{path}: trailing bytes after count tables")
        return cls(order, vocab, raw, tuple(discounts), use_eos=bool(flags & 1))


def _auto_discount(table: dict[tuple[int, ...], int]) -> float:
    """Good-Turing style estimate n1/(n1 + 2*n2) from count-of-count statistics."""
    n1 = sum(1 for c in table.values() if c == 1)
    n2 = sum(1 for c in table.values() if c == 2)
    if n1 + 2 * n2 == 0:
        return FALLBACK_DISCOUNT
    return max(n1 / (n1 + 2 * n2), MIN_DISCOUNT)


def train_ngram(
    corpus: Corpus,
    order: int = DEFAULT_ORDER,
    discount: float | str = "auto",
    vocab_size: int | None = None,
    use_eos: bool = True,
) -> NgramModel:
    """Train an interpolated Kneser-Ney model on a unit corpus.

    ``discount`` is either "auto" (per-order estimate from count-of-count
    statistics, fallback 0.75 when undefined) or a fixed value in (0, 1]
    applied at every order. ``vocab_size`` defaults to 1 + the largest unit.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    sequences = _as_unit_lists(corpus)
    if not sequences:
        raise ValueError("cannot train on an empty corpus")
    max_unit = max((max(s) for s in sequences if s), default=-1)
    if vocab_size is None:
        vocab_size = max_unit + 1
    if vocab_size < 1:
        raise ValueError("cannot infer a vocabulary from an all-empty corpus")
    if max_unit >= vocab_size:
        raise ValueError(f"unit {max_unit} outside declared vocab [0, {vocab_size})")

    bos = vocab_size
    eos = vocab_size + 1
    raw: list[dict[tuple[int, ...], int]] = [dict() for _ in range(order + 1)]
    events = 0
    for seq in sequences:
        padded = [bos] * (order - 1) + seq + ([eos] if use_eos else [])
        for t in range(order - 1, len(padded)):
            events += 1
            for k in range(1, order + 1):
                key = tuple(padded[t - k + 1 : t + 1])
                table = raw[k]
                table[key] = table.get(key, 0) + 1
    if events == 0:
        raise ValueError("corpus contains no scorable events")

    if discount == "auto":
        # level k uses raw counts at the top and continuation counts below
        cont_above: dict[tuple[int, ...], int] | None = None
        per_level: list[float] = [0.0] * order
        for k in range(order, 0, -1):
            table = raw[order] if k == order else cont_above
            per_level[k - 1] = _auto_discount(table)
            if k > 1:
                cont: dict[tuple[int, ...], int] = {}
                for key in raw[k]:
                    cont[key[1:]] = cont.get(key[1:], 0) + 1
                cont_above = cont
        discounts = tuple(per_level)
    else:
        d = float(discount)
        if not (0.0 < d <= 1.0):
            raise ValueError(f"fixed discount must lie in (0, 1], got {d}")
        discounts = (d,) * order
    return NgramModel(order, vocab_size, raw, discounts, use_eos=use_eos)


def sequence_logprob(model: NgramModel, units: Sequence[int], normalize: bool = False) -> float:
    """Total log-probability of a sequence, including the EOS event when enabled.

    Normalized mode divides by the number of scored events (len + 1 with EOS).
    """
    units = [int(u) for u in units]
    for u in units:
        if not (0 <= u < model.vocab_size):
            raise ValueError(f"unit {u} outside vocab [0, {model.vocab_size})")
    seq = [model.bos_id] * (model.order - 1) + units
    if model.use_eos:
        seq.append(model.eos_id)
    total = 0.0
    for t in range(model.order - 1, len(seq)):
        ctx = tuple(seq[t - model.order + 1 : t])
        total += math.log(model._prob(model.order, ctx, seq[t]))
    if normalize:
        events = len(units) + (1 if model.use_eos else 0)
        return total / events if events else 0.0
    return total


def perplexity(model: NgramModel, corpus: Corpus) -> float:
    """exp(-total logprob / total predicted events) over the corpus."""
    sequences = _as_unit_lists(corpus)
    if not sequences:
        raise ValueError("perplexity of an empty corpus is undefined")
    events = sum(len(s) + (1 if model.use_eos else 0) for s in sequences)
    if events == 0:
        raise ValueError("corpus contains no scorable events")
    total = sum(sequence_logprob(model, s) for s in sequences)
    return math.exp(-total / events)


# -- scoring contract ----------------------------------------------------


class SequenceScorer(Protocol):
    def score_units(self, units: Sequence[int]) -> float: ...


@dataclass(frozen=True)
class NgramScorer:
    """Adapts an NgramModel to the scoring contract used by the evaluator."""

    model: NgramModel
    normalize: bool = False

    def score_units(self, units: Sequence[int]) -> float:
        return sequence_logprob(self.model, units, normalize=self.normalize)


@dataclass(frozen=True)
class ScoreTable:
    """pair_id -> (pos_logprob, neg_logprob), natural-log units."""

    scores: dict[str, tuple[float, float]]

    def __post_init__(self):
        for pair_id, (pos, neg) in self.scores.items():
            if not (math.isfinite(pos) and math.isfinite(neg)):
                raise ValueError(f"{pair_id}: scores must be finite")


def load_external_scores(source: Path | str) -> ScoreTable:
    """Parse a ``pair_id<TAB>pos_logprob<TAB>neg_logprob`` TSV."""
    scores: dict[str, tuple[float, float]] = {}
    for lineno, line in enumerate(Path(source).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise FormatError(
                f"{source}:{lineno}: expected 3 tab-separated fields, got {len(parts)}"
            )
        pair_id, pos_str, neg_str = parts
        if pair_id in scores:
            raise ValueError(f"{source}:{lineno}: duplicate pair_id {pair_id!r}")
        try:
            pos, neg = float(pos_str), float(neg_str)
        except ValueError as exc:
            raise FormatError(f"{source}:{lineno}: bad score value") from exc
        if not (math.isfinite(pos) and math.isfinite(neg)):
            raise ValueError(f"{source}:{lineno}: non-finite score")
        scores[pair_id] = (pos, neg)
    return ScoreTable(scores)


def write_external_scores(table: ScoreTable, path: Path | str) -> None:
    lines = [f"{pid}\t{pos!r}\t{neg!r}\n" for pid, (pos, neg) in table.scores.items()]
    Path(path).write_text("".join(lines), encoding="utf-8")
