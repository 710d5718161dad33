"""Paired stimulus audio -> evaluator benchmark manifest."""

import json

import pytest

from unitgrid_adapter.extract import ExtractionSpec, prepare_benchmark

from conftest import make_tone


def _write_pairs(tmp_path, rows):
    path = tmp_path / "pairs.jsonl"
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
    return path


class TestPrepareBenchmark:
    def test_single_pair_record(self, tmp_path):
        make_tone(tmp_path / "pos.wav", 0.5, 16000, seed=1)
        make_tone(tmp_path / "neg.wav", 0.5, 16000, seed=2)
        pairs = _write_pairs(
            tmp_path,
            [{"pair_id": "p0", "category": "anaphor_agreement",
              "pos_audio": "pos.wav", "neg_audio": "neg.wav"}],
        )
        spec = ExtractionSpec(pairs, tmp_path / "out")
        out = prepare_benchmark(pairs, spec)
        rows = [json.loads(line) for line in out.read_text().splitlines()]
        assert len(rows) == 1
        assert rows[0]["pair_id"] == "p0"
        assert rows[0]["category"] == "anaphor_agreement"  # phenomenon label kept
        assert set(rows[0]) == {"pair_id", "category", "pos", "neg"}

    def test_feature_refs_resolve_and_validate(self, tmp_path):
        make_tone(tmp_path / "p.wav", 0.4, 16000, seed=3)
        make_tone(tmp_path / "n.wav", 0.4, 16000, seed=4)
        pairs = _write_pairs(
            tmp_path,
            [{"pair_id": "x", "category": "c", "pos_audio": "p.wav", "neg_audio": "n.wav"}],
        )
        out = prepare_benchmark(pairs, ExtractionSpec(pairs, tmp_path / "out"))
        from unitgrid.evaluation import read_benchmark_manifest
        from unitgrid.features import read_features

        refs = read_benchmark_manifest(out)
        for ref in refs:
            for rel in (ref.pos, ref.neg):
                record = read_features(out.parent / rel)
                assert record.features.frames > 0

    def test_missing_neg_audio_is_unpaired(self, tmp_path):
        make_tone(tmp_path / "pos.wav", 0.3, 16000)
        pairs = _write_pairs(
            tmp_path,
            [{"pair_id": "p0", "category": "c",
              "pos_audio": "pos.wav", "neg_audio": "gone.wav"}],
        )
        with pytest.raises(ValueError, match="unpaired"):
            prepare_benchmark(pairs, ExtractionSpec(pairs, tmp_path / "out"))

    def test_missing_field_is_unpaired(self, tmp_path):
        pairs = _write_pairs(tmp_path, [{"pair_id": "p0", "category": "c", "pos_audio": "a.wav"}])
        with pytest.raises(ValueError, match="unpaired"):
            prepare_benchmark(pairs, ExtractionSpec(pairs, tmp_path / "out"))

    def test_duplicate_pair_rejected(self, tmp_path):
        make_tone(tmp_path / "a.wav", 0.3, 16000)
        row = {"pair_id": "p0", "category": "c", "pos_audio": "a.wav", "neg_audio": "a.wav"}
        pairs = _write_pairs(tmp_path, [row, row])
        with pytest.raises(ValueError, match="duplicate"):
            prepare_benchmark(pairs, ExtractionSpec(pairs, tmp_path / "out"))
