"""Shared builders for toy end-to-end scenarios."""

import json

import numpy as np
import pytest

from unitgrid.features import SyntheticSpec, generate_synthetic
from unitgrid.sweep import SweepConfig


def cycle_transition(classes, strength=0.85, reverse=False):
    """Markov matrix favouring a class cycle (or its reverse)."""
    t = np.full((classes, classes), (1.0 - strength) / (classes - 1))
    for c in range(classes):
        nxt = (c - 1) % classes if reverse else (c + 1) % classes
        t[c, nxt] = strength
    t[np.arange(classes), np.arange(classes)] = 0.0
    return t / t.sum(axis=1, keepdims=True)


def build_toy_workspace(
    root,
    num_utts=6,
    frames=(120, 160),
    dim=6,
    classes=4,
    noise=0.03,
    pairs=4,
    seed=0,
):
    """Training corpus drawn from one unit 'language' plus a benchmark whose
    positives come from the same language and negatives from a structurally
    different one over the same prototypes."""
    lang_a = cycle_transition(classes)
    lang_b = cycle_transition(classes, reverse=True)
    corpus_dir = root / "corpus"
    spec = SyntheticSpec(
        num_utts=num_utts,
        frames_range=frames,
        dim=dim,
        num_latent_classes=classes,
        noise_scale=noise,
        seed=seed,
        run_frames=(3, 6),
        transition=lang_a,
    )
    manifest = generate_synthetic(spec, corpus_dir)

    bench_dir = root / "bench"
    bench_dir.mkdir(parents=True, exist_ok=True)
    common = dict(
        num_utts=pairs,
        frames_range=(60, 80),
        dim=dim,
        num_latent_classes=classes,
        noise_scale=noise,
        run_frames=(3, 6),
        prototype_seed=seed,  # share prototypes with the training corpus
    )
    generate_synthetic(
        SyntheticSpec(seed=seed + 1, transition=lang_a, utt_prefix="pos", **common),
        bench_dir / "pos",
    )
    generate_synthetic(
        SyntheticSpec(seed=seed + 2, transition=lang_b, utt_prefix="neg", **common),
        bench_dir / "neg",
    )
    rows = [
        {
            "pair_id": f"pair{i}",
            "category": "even" if i % 2 == 0 else "odd",
            "pos": f"pos/pos_{i:04d}.sfea",
            "neg": f"neg/neg_{i:04d}.sfea",
        }
        for i in range(pairs)
    ]
    bench_manifest = bench_dir / "pairs.jsonl"
    bench_manifest.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
    return manifest, bench_manifest


@pytest.fixture
def toy_sweep_config(tmp_path):
    manifest, bench_manifest = build_toy_workspace(tmp_path)
    return SweepConfig(
        features_manifest=tmp_path / "corpus" / "manifest.tsv",
        out_dir=tmp_path / "out",
        n_values=(40, 80),
        k_values=(3, 4),
        seeds=(0,),
        benchmarks={"toy": bench_manifest},
        ngram_order=2,
    )
