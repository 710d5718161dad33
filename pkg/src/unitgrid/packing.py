"""Concatenate a unit corpus into fixed-length training chunks.

Packed file: a header line ``#chunk_len=...;vocab=...;sep=...`` followed by
one line of space-separated integers per chunk.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .units import UnitSequence

DEFAULT_CHUNK_LEN = 2048


@dataclass(frozen=True)
class PackedDataset:
    chunk_len: int
    chunks: tuple[tuple[int, ...], ...]
    vocab_size: int  # K, or K+1 when a separator is appended
    separator_id: int | None
    dropped_tail: int

    def __post_init__(self):
        for chunk in self.chunks:
            if len(chunk) != self.chunk_len:
                raise ValueError(f"chunk of length {len(chunk)} != chunk_len {self.chunk_len}")
            for u in chunk:
                if not (0 <= u < self.vocab_size):
                    raise ValueError(f"token {u} outside vocab [0, {self.vocab_size})")

    def token_stream(self) -> list[int]:
        return [u for chunk in self.chunks for u in chunk]


def pack(
    corpus: Sequence[UnitSequence] | Iterable[UnitSequence],
    chunk_len: int = DEFAULT_CHUNK_LEN,
    use_separator: bool = True,
    vocab_size: int | None = None,
) -> PackedDataset:
    """Concatenate utterances in order and split into floor(total/chunk_len) chunks.

    With ``use_separator`` a separator token (id = vocab_size, i.e. K) is
    appended after each utterance and the packed vocabulary becomes K+1. The
    remainder is dropped and reported in ``dropped_tail``.
    """
    if chunk_len < 1:
        raise ValueError(f"chunk_len must be >= 1, got {chunk_len}")
    corpus = list(corpus)
    if not corpus:
        raise ValueError("cannot pack an empty corpus")
    if vocab_size is None:
        vocab_size = 1 + max((max(seq.units) for seq in corpus if seq.units), default=-1)
    for seq in corpus:
        for u in seq.units:
            if not (0 <= u < vocab_size):
                raise ValueError(f"{seq.utt_id}: unit {u} outside vocab [0, {vocab_size})")
    separator_id = vocab_size if use_separator else None
    stream: list[int] = []
    for seq in corpus:
        stream.extend(seq.units)
        if separator_id is not None:
            stream.append(separator_id)
    num_chunks = len(stream) // chunk_len
    chunks = tuple(
        tuple(stream[i * chunk_len : (i + 1) * chunk_len]) for i in range(num_chunks)
    )
    return PackedDataset(
        chunk_len=chunk_len,
        chunks=chunks,
        vocab_size=vocab_size + (1 if use_separator else 0),
        separator_id=separator_id,
        dropped_tail=len(stream) - num_chunks * chunk_len,
    )


def write_packed(dataset: PackedDataset, path: Path | str) -> None:
    sep = "none" if dataset.separator_id is None else str(dataset.separator_id)
    lines = [f"#chunk_len={dataset.chunk_len};vocab={dataset.vocab_size};sep={sep}\n"]
    lines.extend(" ".join(str(u) for u in chunk) + "\n" for chunk in dataset.chunks)
    Path(path).write_text("".join(lines), encoding="utf-8")


def read_packed(path: Path | str) -> PackedDataset:
    """Reload a packed file. The dropped tail is not persisted, so it reads as 0."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or not text[0].startswith("#"):
        raise ValueError(f"{path}: missing packed-file header")
    fields = dict(kv.split("=", 1) for kv in text[0][1:].split(";"))
    chunk_len = int(fields["chunk_len"])
    vocab = int(fields["vocab"])
    sep = None if fields["sep"] == "none" else int(fields["sep"])
    chunks = tuple(
        tuple(int(tok) for tok in line.split()) for line in text[1:] if line.strip()
    )
    return PackedDataset(
        chunk_len=chunk_len, chunks=chunks, vocab_size=vocab, separator_id=sep, dropped_tail=0
    )
