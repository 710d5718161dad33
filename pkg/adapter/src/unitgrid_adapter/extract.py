"""Feature extraction over audio manifests and benchmark stimulus preparation."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .audio import read_wav
from .featfile import FEATURE_SUFFIX, write_feature_file, write_manifest
from .models import load_model


@dataclass(frozen=True)
class ExtractionSpec:
    audio_manifest: Path
    out_dir: Path
    model: str = "logmel"
    layer: int = 9
    hop_ms: float = 20.0

    def __post_init__(self):
        if self.layer < 1:
            raise ValueError(f"layer index must be >= 1, got {self.layer}")
        if self.hop_ms <= 0:
            raise ValueError(f"hop_ms must be > 0, got {self.hop_ms}")
        object.__setattr__(self, "audio_manifest", Path(self.audio_manifest))
        object.__setattr__(self, "out_dir", Path(self.out_dir))


def read_audio_manifest(path: Path | str) -> list[tuple[str, Path]]:
    """TSV lines ``utt_id<TAB>audio_path`` with paths relative to the file."""
    path = Path(path)
    entries = []
    seen = set()
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected utt_id<TAB>path, got {len(parts)} fields")
        utt_id, rel = parts
        if utt_id in seen:
            raise ValueError(f"{path}:{lineno}: duplicate utt_id {utt_id!r}")
        seen.add(utt_id)
        audio = Path(rel)
        entries.append((utt_id, audio if audio.is_absolute() else path.parent / audio))
    return entries


def extract_features(spec: ExtractionSpec) -> Path:
    """Extract one feature file per utterance and write a unitgrid manifest.

    Returns the manifest path. Extraction is deterministic, so re-running a
    spec reproduces bit-identical files.
    """
    model = load_model(spec.model)
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for utt_id, audio_path in read_audio_manifest(spec.audio_manifest):
        samples, rate = read_wav(audio_path)
        feats = model.extract(samples, rate, spec.hop_ms, spec.layer)
        rel = f"{utt_id}{FEATURE_SUFFIX}"
        write_feature_file(feats, spec.hop_ms, spec.out_dir / rel)
        rows.append((utt_id, rel, feats.shape[0] * spec.hop_ms))
    manifest = spec.out_dir / "manifest.tsv"
    write_manifest(rows, manifest)
    return manifest


def prepare_benchmark(pairs_manifest: Path | str, spec: ExtractionSpec) -> Path:
    """Convert paired stimulus audio into an evaluator benchmark manifest.

    Input is JSON-lines ``{pair_id, category, pos_audio, neg_audio}`` with
    audio paths relative to the manifest; both members are extracted and the
    output manifest references the emitted feature files.
    """
    pairs_manifest = Path(pairs_manifest)
    model = load_model(spec.model)
    feat_dir = spec.out_dir / "feats"
    feat_dir.mkdir(parents=True, exist_ok=True)
    out_rows = []
    seen = set()
    for lineno, line in enumerate(pairs_manifest.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        row = json.loads(line)
        missing = {"pair_id", "category", "pos_audio", "neg_audio"} - set(row)
        if missing:
            raise ValueError(
                f"{pairs_manifest}:{lineno}: unpaired entry, missing {sorted(missing)}"
            )
        if row["pair_id"] in seen:
            raise ValueError(f"{pairs_manifest}:{lineno}: duplicate pair_id {row['pair_id']!r}")
        seen.add(row["pair_id"])
        refs = {}
        for side in ("pos", "neg"):
            audio = pairs_manifest.parent / row[f"{side}_audio"]
            if not audio.exists():
                raise ValueError(
                    f"{pairs_manifest}:{lineno}: unpaired entry, {side} audio missing: {audio}"
                )
            samples, rate = read_wav(audio)
            feats = model.extract(samples, rate, spec.hop_ms, spec.layer)
            rel = f"feats/{row['pair_id']}_{side}{FEATURE_SUFFIX}"
            write_feature_file(feats, spec.hop_ms, spec.out_dir / rel)
            refs[side] = rel
        out_rows.append(
            {
                "pair_id": row["pair_id"],
                "category": row["category"],
                "pos": refs["pos"],
                "neg": refs["neg"],
            }
        )
    out_path = spec.out_dir / "benchmark.jsonl"
    out_path.write_text(
        "".join(json.dumps(r, sort_keys=True) + "\n" for r in out_rows), encoding="utf-8"
    )
    return out_path
