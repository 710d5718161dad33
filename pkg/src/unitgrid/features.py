"""Binary feature files, corpus manifests, subset sampling, and synthetic corpora.

Feature file layout (little-endian): magic ``SFEA``, version u16 = 1,
reserved u16 = 0, dim u32, frames u32, hop_ms f32, then frames*dim f32
row-major payload. A manifest is a UTF-8 TSV of ``utt_id<TAB>path<TAB>duration_ms``
with paths relative to the manifest's directory.
"""

from __future__ import annotations

import random
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .binio import FormatError, check_magic, check_version, read_exact

FEATURE_MAGIC = b"SFEA"
FEATURE_VERSION = 1
FEATURE_SUFFIX = ".sfea"
DEFAULT_HOP_MS = 20.0  # one HuBERT-style frame

_HEADER_TAIL = struct.Struct("<IIf")  # dim, frames, hop_ms


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """A T x D sequence of continuous frame vectors with a frame hop in ms."""

    values: np.ndarray
    hop_ms: float = DEFAULT_HOP_MS

    def __post_init__(self):
        arr = np.ascontiguousarray(self.values, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"feature values must be 2-D (frames x dim), got shape {arr.shape}")
        if arr.shape[1] < 1:
            raise ValueError("feature dim must be >= 1")
        if not np.isfinite(arr).all():
            raise ValueError("feature values must be finite (no NaN/Inf)")
        if not (self.hop_ms > 0):
            raise ValueError(f"hop_ms must be > 0, got {self.hop_ms}")
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "hop_ms", float(self.hop_ms))

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def duration_ms(self) -> float:
        return self.frames * self.hop_ms

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        return self.hop_ms == other.hop_ms and np.array_equal(self.values, other.values)


@dataclass(frozen=True)
class UtteranceRecord:
    utt_id: str
    features: FeatureMatrix

    def __post_init__(self):
        if not self.utt_id:
            raise ValueError("utt_id must be non-empty")
        if "\t" in self.utt_id or "\n" in self.utt_id:
            raise ValueError(f"utt_id may not contain tabs or newlines: {self.utt_id!r}")


@dataclass(frozen=True)
class ManifestEntry:
    utt_id: str
    path: str  # relative to the manifest's directory
    duration_ms: float


@dataclass
class CorpusManifest:
    """Ordered list of utterances with paths relative to ``root``."""

    entries: list[ManifestEntry]
    root: Path = field(default_factory=Path)

    def __post_init__(self):
        self.root = Path(self.root)
        seen = set()
        for e in self.entries:
            if e.utt_id in seen:
                raise ValueError(f"duplicate utt_id in manifest: {e.utt_id!r}")
            seen.add(e.utt_id)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[ManifestEntry]:
        return iter(self.entries)

    def resolve(self, entry: ManifestEntry) -> Path:
        return self.root / entry.path

    def total_duration_ms(self) -> float:
        return float(sum(e.duration_ms for e in self.entries))

    def save(self, path: Path | str) -> None:
        path = Path(path)
        lines = [f"{e.utt_id}\t{e.path}\t{e.duration_ms!r}\n" for e in self.entries]
        path.write_text("".join(lines), encoding="utf-8")

    @classmethod
    def load(cls, path: Path | str) -> "CorpusManifest":
        path = Path(path)
        entries = []
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise FormatError(f"{path}:{lineno}: expected 3 tab-separated fields, got {len(parts)}")
            utt_id, rel, dur = parts
            try:
                duration = float(dur)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: bad duration {dur!r}") from exc
            entries.append(ManifestEntry(utt_id, rel, duration))
        return cls(entries, root=path.parent)


def write_features(record: UtteranceRecord, destination: Path | str) -> None:
    """Write a record's feature matrix to ``destination`` in the SFEA format."""
    feats = record.features
    payload = feats.values.astype("<f4", copy=False).tobytes()
    with open(destination, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<HH", FEATURE_VERSION, 0))
        fh.write(_HEADER_TAIL.pack(feats.dim, feats.frames, feats.hop_ms))
        fh.write(payload)


def read_features(source: Path | str, utt_id: str | None = None) -> UtteranceRecord:
    """Read an SFEA file; ``utt_id`` defaults to the file's stem."""
    source = Path(source)
    with open(source, "rb") as fh:
        check_magic(fh, FEATURE_MAGIC)
        check_version(fh, FEATURE_VERSION)
        dim, frames, hop_ms = _HEADER_TAIL.unpack(read_exact(fh, _HEADER_TAIL.size, "header"))
        expected = frames * dim * 4
        payload = fh.read()
    if len(payload) != expected:
        raise FormatError(
            f"{source}: payload size mismatch: header implies {expected} bytes, file has {len(payload)}"
        )
    if dim < 1:
        raise FormatError(f"{source}: dim must be >= 1, got {dim}")
    values = np.frombuffer(payload, dtype="<f4").reshape(frames, dim)
    feats = FeatureMatrix(values=values, hop_ms=hop_ms)
    return UtteranceRecord(utt_id=utt_id or source.stem, features=feats)


def sample_subset(manifest: CorpusManifest, target_hours: float, seed: int) -> CorpusManifest:
    """Seeded random subset: smallest shuffled prefix reaching ``target_hours``.

    Returns the whole manifest when its total duration falls short of the target.
    """
    if target_hours <= 0:
        raise ValueError(f"target_hours must be > 0, got {target_hours}")
    if not manifest.entries:
        raise ValueError("cannot sample from an empty manifest")
    target_ms = target_hours * 3_600_000.0
    if manifest.total_duration_ms() < target_ms:
        return CorpusManifest(list(manifest.entries), root=manifest.root)
    order = list(range(len(manifest.entries)))
    random.Random(seed).shuffle(order)
    picked: list[ManifestEntry] = []
    total = 0.0
    for i in order:
        picked.append(manifest.entries[i])
        total += manifest.entries[i].duration_ms
        if total >= target_ms:
            break
    return CorpusManifest(picked, root=manifest.root)


@dataclass(frozen=True)
class SyntheticSpec:
    """Controls for the synthetic corpus generator.

    Frames are piecewise-constant class prototypes plus Gaussian noise, so
    downstream clustering can recover the latent classes. ``transition``
    (optional, num_latent_classes x num_latent_classes, row-stochastic) makes
    the per-run class sequence a Markov chain; ``prototype_seed`` pins the
    prototype vectors independently of the utterance randomness.
    """

    num_utts: int
    frames_range: tuple[int, int]
    dim: int
    num_latent_classes: int
    noise_scale: float
    seed: int
    hop_ms: float = DEFAULT_HOP_MS
    run_frames: tuple[int, int] = (2, 6)
    transition: np.ndarray | None = None
    prototype_seed: int | None = None
    utt_prefix: str = "synth"

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.num_latent_classes < 1:
            raise ValueError("num_latent_classes must be >= 1")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")
        if self.num_utts < 0:
            raise ValueError("num_utts must be >= 0")
        lo, hi = self.frames_range
        if not (0 <= lo <= hi):
            raise ValueError(f"bad frames_range {self.frames_range}")
        lo, hi = self.run_frames
        if not (1 <= lo <= hi):
            raise ValueError(f"bad run_frames {self.run_frames}")
        if self.transition is not None:
            t = np.asarray(self.transition, dtype=np.float64)
            c = self.num_latent_classes
            if t.shape != (c, c):
                raise ValueError(f"transition must be {c}x{c}, got {t.shape}")
            if not np.allclose(t.sum(axis=1), 1.0, atol=1e-9) or (t < 0).any():
                raise ValueError("transition rows must be non-negative and sum to 1")
            object.__setattr__(self, "transition", t)


def generate_synthetic(spec: SyntheticSpec, dest_dir: Path | str) -> CorpusManifest:
    """Write a synthetic feature corpus under ``dest_dir`` and return its manifest.

    Emits one ``.sfea`` file per utterance, ``manifest.tsv``, and a
    ``latent_labels.tsv`` sidecar (``utt_id<TAB>c1 c2 ...`` per-frame class ids)
    for label-agreement oracles. Deterministic per spec.seed.
    """
    dest = Path(dest_dir)
    dest.mkdir(parents=True, exist_ok=True)
    proto_rng = np.random.default_rng(
        spec.seed if spec.prototype_seed is None else spec.prototype_seed
    )
    prototypes = proto_rng.normal(0.0, 1.0, size=(spec.num_latent_classes, spec.dim))
    rng = np.random.default_rng(spec.seed)

    entries = []
    label_lines = []
    width = max(4, len(str(max(spec.num_utts - 1, 0))))
    for i in range(spec.num_utts):
        utt_id = f"{spec.utt_prefix}_{i:0{width}d}"
        frames = int(rng.integers(spec.frames_range[0], spec.frames_range[1] + 1))
        labels = _latent_labels(spec, rng, frames)
        values = prototypes[labels] if frames else np.zeros((0, spec.dim))
        if spec.noise_scale > 0 and frames:
            values = values + spec.noise_scale * rng.normal(size=(frames, spec.dim))
        rel = f"{utt_id}{FEATURE_SUFFIX}"
        record = UtteranceRecord(
            utt_id, FeatureMatrix(values.astype(np.float32), hop_ms=spec.hop_ms)
        )
        write_features(record, dest / rel)
        entries.append(ManifestEntry(utt_id, rel, record.features.duration_ms))
        label_lines.append(f"{utt_id}\t{' '.join(str(c) for c in labels)}\n")

    manifest = CorpusManifest(entries, root=dest)
    manifest.save(dest / "manifest.tsv")
    (dest / "latent_labels.tsv").write_text("".join(label_lines), encoding="utf-8")
    return manifest


def _latent_labels(spec: SyntheticSpec, rng: np.random.Generator, frames: int) -> np.ndarray:
    """Per-frame class ids: runs of run_frames length, classes iid or Markov."""
    labels = np.empty(frames, dtype=np.int64)
    lo, hi = spec.run_frames
    pos = 0
    cls = int(rng.integers(spec.num_latent_classes))
    while pos < frames:
        run = int(rng.integers(lo, hi + 1))
        labels[pos : pos + run] = cls
        pos += run
        if spec.transition is None:
            cls = int(rng.integers(spec.num_latent_classes))
        else:
            cls = int(rng.choice(spec.num_latent_classes, p=spec.transition[cls]))
    return labels


def read_latent_labels(path: Path | str) -> dict[str, list[int]]:
    """Parse a latent_labels.tsv sidecar written by generate_synthetic."""
    out: dict[str, list[int]] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        utt_id, _, rest = line.partition("\t")
        out[utt_id] = [int(tok) for tok in rest.split()] if rest.strip() else []
    return out


def load_corpus(manifest: CorpusManifest) -> list[UtteranceRecord]:
    """Read every feature file referenced by the manifest, in manifest order."""
    return [read_features(manifest.resolve(e), utt_id=e.utt_id) for e in manifest]
