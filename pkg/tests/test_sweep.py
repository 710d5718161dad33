"""Grid orchestration: caching, rerun idempotence, failure isolation, reports."""

import json

import pytest

from unitgrid.evaluation import SeedAggregate
from unitgrid.features import SyntheticSpec, generate_synthetic
from unitgrid.ngram import ScoreTable, write_external_scores
from unitgrid.segmenter import VariablePlan, write_boundaries
from unitgrid.sweep import (
    StageCache,
    SweepConfig,
    emit_report,
    load_aggregates,
    read_grid_csv,
    run_sweep,
)

from conftest import build_toy_workspace


class TestRunSweep:
    def test_toy_grid_completes_with_reports(self, toy_sweep_config):
        result = run_sweep(toy_sweep_config)
        assert all(c.status == "ok" for c in result.cells)
        assert len(result.cells) == 4  # 2 N x 2 K x 1 seed
        assert len(result.reports) == 4  # one benchmark per cell
        assert len(result.aggregates) == 4
        assert (toy_sweep_config.out_dir / "sweep_ledger.json").exists()
        assert result.tables is not None
        # positives resemble the training corpus; noise negatives score lower
        for agg in result.aggregates:
            assert agg.metrics["accuracy"][0] >= 0.5

    def test_rerun_recomputes_nothing_and_leaves_outputs_alone(self, toy_sweep_config):
        first = run_sweep(toy_sweep_config)
        assert first.cache_misses > 0
        report_dir = toy_sweep_config.out_dir / "reports"
        snapshots = {
            p.name: (p.stat().st_mtime_ns, p.read_bytes())
            for p in report_dir.iterdir()
        }
        second = run_sweep(toy_sweep_config)
        assert second.cache_misses == 0
        assert second.cache_hits == first.cache_hits + first.cache_misses
        for p in report_dir.iterdir():
            mtime, data = snapshots[p.name]
            assert p.stat().st_mtime_ns == mtime  # not rewritten
            assert p.read_bytes() == data
        assert [a.metrics for a in second.aggregates] == [a.metrics for a in first.aggregates]

    def test_input_change_invalidates_cache(self, toy_sweep_config, tmp_path):
        run_sweep(toy_sweep_config)
        # appending an utterance to the corpus must re-run encode-side stages
        extra = SyntheticSpec(
            num_utts=1, frames_range=(100, 100), dim=6, num_latent_classes=4,
            noise_scale=0.03, seed=77,
        )
        extra_dir = tmp_path / "extra"
        extra_manifest = generate_synthetic(extra, extra_dir)
        manifest_path = toy_sweep_config.features_manifest
        entry = extra_manifest.entries[0]
        (extra_dir / entry.path).rename(manifest_path.parent / f"extra_{entry.path}")
        with open(manifest_path, "a", encoding="utf-8") as fh:
            fh.write(f"extra_{entry.utt_id}\textra_{entry.path}\t{entry.duration_ms!r}\n")
        second = run_sweep(toy_sweep_config)
        assert second.cache_misses > 0

    def test_default_grid_enumerates_64_methods(self, tmp_path):
        config = SweepConfig(features_manifest=tmp_path / "m.tsv", out_dir=tmp_path / "o")
        assert len(config.n_values) * len(config.k_values) == 64
        assert config.n_values == (20, 40, 80, 120, 160, 200, 240, 280)
        assert config.k_values == tuple(2**p for p in range(7, 15))

    def test_empty_grid_rejected_at_validation(self, toy_sweep_config):
        toy_sweep_config.n_values = ()
        with pytest.raises(ValueError, match="segmentation"):
            toy_sweep_config.validate()
        toy_sweep_config.n_values = (20,)
        toy_sweep_config.k_values = ()
        with pytest.raises(ValueError, match="k_values"):
            toy_sweep_config.validate()
        toy_sweep_config.k_values = (4,)
        toy_sweep_config.seeds = ()
        with pytest.raises(ValueError, match="seeds"):
            toy_sweep_config.validate()

    def test_cell_failures_are_isolated(self, tmp_path):
        # N=280 leaves fewer pooled vectors than k=16: that cell alone fails
        build_toy_workspace(tmp_path, num_utts=2, frames=(30, 34))
        config = SweepConfig(
            features_manifest=tmp_path / "corpus" / "manifest.tsv",
            out_dir=tmp_path / "out",
            n_values=(20, 280),
            k_values=(4, 16),
            seeds=(0,),
            benchmarks={"toy": tmp_path / "bench" / "pairs.jsonl"},
            ngram_order=2,
        )
        result = run_sweep(config)
        failed = {(c.n_label, c.k) for c in result.cells if c.status == "failed"}
        assert failed == {("280", 16)}
        bad = [c for c in result.cells if c.status == "failed"][0]
        assert "exceeds" in bad.error
        assert len(result.reports) == 3
        ledger = json.loads((config.out_dir / "sweep_ledger.json").read_text())
        assert sum(1 for c in ledger["cells"] if c["status"] == "failed") == 1

    def test_external_scorer_route(self, tmp_path):
        build_toy_workspace(tmp_path, pairs=3)
        scores_dir = tmp_path / "scores"
        scores_dir.mkdir()
        config = SweepConfig(
            features_manifest=tmp_path / "corpus" / "manifest.tsv",
            out_dir=tmp_path / "out",
            n_values=(40,),
            k_values=(4,),
            seeds=(0, 1),
            benchmarks={"toy": tmp_path / "bench" / "pairs.jsonl"},
            scorer="external",
            external_scores=str(scores_dir / "{benchmark}_{n}_{k}_{seed}.tsv"),
        )
        for seed in (0, 1):
            table = ScoreTable(
                {f"pair{i}": (-1.0, -2.0 - seed - i) for i in range(3)}
            )
            write_external_scores(table, scores_dir / f"toy_40_4_{seed}.tsv")
        result = run_sweep(config)
        assert all(c.status == "ok" for c in result.cells)
        assert all(r.accuracy == 1.0 for r in result.reports)
        agg = result.aggregates[0]
        assert agg.num_seeds == 2
        assert agg.metrics["accuracy"] == (1.0, 0.0)

    def test_external_scorer_requires_template(self, tmp_path):
        config = SweepConfig(
            features_manifest=tmp_path / "m.tsv", out_dir=tmp_path / "o", scorer="external"
        )
        with pytest.raises(ValueError, match="external_scores"):
            config.validate()

    def test_variable_plan_rows(self, tmp_path):
        manifest, bench_manifest = build_toy_workspace(tmp_path, num_utts=3, pairs=2)
        from unitgrid.features import CorpusManifest, read_features

        plans = {}
        for entry in CorpusManifest.load(tmp_path / "corpus" / "manifest.tsv"):
            rec = read_features(tmp_path / "corpus" / entry.path, utt_id=entry.utt_id)
            t = rec.features.frames
            plans[entry.utt_id] = VariablePlan(tuple(range(5, t, 5)) + (t,))
        # stimuli need plans too (keyed by file stem)
        for stim_dir in (tmp_path / "bench" / "pos", tmp_path / "bench" / "neg"):
            for f in stim_dir.glob("*.sfea"):
                rec = read_features(f)
                t = rec.features.frames
                plans[rec.utt_id] = VariablePlan(tuple(range(5, t, 5)) + (t,))
        bounds_path = tmp_path / "syllable.tsv"
        write_boundaries(plans, bounds_path)
        config = SweepConfig(
            features_manifest=tmp_path / "corpus" / "manifest.tsv",
            out_dir=tmp_path / "out",
            n_values=(40,),
            k_values=(3,),
            seeds=(0,),
            benchmarks={"toy": bench_manifest},
            variable_plans={"syllable": bounds_path},
            ngram_order=2,
        )
        result = run_sweep(config)
        assert all(c.status == "ok" for c in result.cells)
        labels = {c.n_label for c in result.cells}
        assert labels == {"40", "var:syllable"}
        assert result.tables is not None
        assert "var:syllable" in result.tables.average.row_labels

    def test_workers_parallel_matches_serial(self, toy_sweep_config, tmp_path):
        serial = run_sweep(toy_sweep_config)
        parallel_cfg = SweepConfig(
            features_manifest=toy_sweep_config.features_manifest,
            out_dir=tmp_path / "out_parallel",
            n_values=toy_sweep_config.n_values,
            k_values=toy_sweep_config.k_values,
            seeds=toy_sweep_config.seeds,
            benchmarks=toy_sweep_config.benchmarks,
            ngram_order=2,
            workers=4,
        )
        parallel = run_sweep(parallel_cfg)
        key = lambda a: (a.benchmark, a.n_label, a.k)
        assert sorted(
            [(key(a), a.metrics) for a in parallel.aggregates]
        ) == sorted([(key(a), a.metrics) for a in serial.aggregates])

    def test_verify_cache_flag(self, toy_sweep_config):
        toy_sweep_config.verify_cache = True
        run_sweep(toy_sweep_config)  # must not raise
        run_sweep(toy_sweep_config)  # verifies against cached artifacts


class TestStageCache:
    def test_detects_corrupted_artifact(self, tmp_path):
        cache = StageCache(tmp_path / "cache")

        def build(dest):
            (dest / "data.txt").write_text("payload")

        artifact = cache.run("stage", {"p": 1}, [], build)
        (artifact / "data.txt").write_text("tampered")
        with pytest.raises(RuntimeError, match="verification"):
            cache.verify_one(seed=0)

    def test_verifies_clean_artifact(self, tmp_path):
        cache = StageCache(tmp_path / "cache")

        def build(dest):
            (dest / "data.txt").write_text("payload")

        cache.run("stage", {"p": 1}, [], build)
        cache.verify_one(seed=0)

    def test_hit_and_miss_counters(self, tmp_path):
        cache = StageCache(tmp_path / "cache")
        calls = []

        def build(dest):
            calls.append(1)
            (dest / "x").write_text("x")

        cache.run("s", {}, [], build)
        cache.run("s", {}, [], build)
        assert cache.misses == 1 and cache.hits == 1
        assert len(calls) == 1

    def test_key_depends_on_input_content(self, tmp_path):
        cache = StageCache(tmp_path / "cache")
        f = tmp_path / "input.txt"
        f.write_text("one")
        k1 = cache.stage_key("s", {}, [f])
        f.write_text("two")
        cache._hash_memo.clear()  # fresh run would re-hash
        k2 = cache.stage_key("s", {}, [f])
        assert k1 != k2


class TestEmitReport:
    def _aggregates(self):
        out = []
        for bench in ("sblimp", "swuggy"):
            for n in ("40", "80"):
                for k in (128, 256):
                    acc = 0.5 + (hash((bench, n, k)) % 100) / 1000.0
                    out.append(
                        SeedAggregate(
                            bench, n, k, 3,
                            {"accuracy": (acc, 0.01), "tie_rate": (0.0, 0.0)},
                        )
                    )
        return out

    def test_emits_all_files(self, tmp_path):
        written = emit_report(self._aggregates(), tmp_path)
        names = set(written)
        assert {
            "grid_sblimp.csv", "grid_swuggy.csv", "grid_average.csv",
            "best_k.csv", "summary.txt", "aggregates.json", "report_rows.csv",
        } <= names

    def test_csv_reload_reproduces_matrix(self, tmp_path):
        aggs = self._aggregates()
        written = emit_report(aggs, tmp_path)
        from unitgrid.evaluation import grid_table

        tables = grid_table(aggs)
        reloaded = read_grid_csv(written["grid_sblimp.csv"])
        assert reloaded.row_labels == tables.per_benchmark["sblimp"].row_labels
        assert reloaded.col_labels == tables.per_benchmark["sblimp"].col_labels
        assert reloaded.cells == tables.per_benchmark["sblimp"].cells

    def test_best_k_rows_match_scan_oracle(self, tmp_path):
        aggs = self._aggregates()
        written = emit_report(aggs, tmp_path)
        from unitgrid.evaluation import grid_table

        tables = grid_table(aggs)
        lines = written["best_k.csv"].read_text().strip().splitlines()[1:]
        assert len(lines) == len(tables.best_k)
        for line, row in zip(lines, tables.best_k):
            n, k, v = line.split(",")
            assert n == row.n_label and int(k) == row.best_k
            assert float(v) == row.value

    def test_aggregates_json_round_trip(self, tmp_path):
        aggs = self._aggregates()
        written = emit_report(aggs, tmp_path)
        back = load_aggregates(written["aggregates.json"])
        assert {(a.benchmark, a.n_label, a.k) for a in back} == {
            (a.benchmark, a.n_label, a.k) for a in aggs
        }

    def test_single_aggregate(self, tmp_path):
        agg = SeedAggregate("tsc", "80", 128, 1, {"accuracy": (0.7, 0.0), "tie_rate": (0.0, 0.0)})
        written = emit_report([agg], tmp_path)
        matrix = read_grid_csv(written["grid_tsc.csv"])
        assert matrix.cells == {("80", 128): 0.7}

    def test_empty_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit_report([], tmp_path)


class TestConfigFile:
    def test_json_config_with_relative_paths(self, tmp_path, toy_sweep_config):
        doc = {
            "features_manifest": "corpus/manifest.tsv",
            "out_dir": "out",
            "n_values": [40],
            "k_values": [3],
            "seeds": [0],
            "benchmarks": {"toy": "bench/pairs.jsonl"},
            "ngram_order": 2,
        }
        cfg_path = toy_sweep_config.features_manifest.parent.parent / "sweep.json"
        cfg_path.write_text(json.dumps(doc))
        config = SweepConfig.from_file(cfg_path)
        assert config.features_manifest == cfg_path.parent / "corpus" / "manifest.tsv"
        config.validate()

    def test_overrides_win(self, tmp_path):
        doc = {"features_manifest": "m.tsv", "out_dir": "o", "ngram_order": 2}
        cfg_path = tmp_path / "sweep.json"
        cfg_path.write_text(json.dumps(doc))
        config = SweepConfig.from_file(cfg_path, ngram_order=4, k_values=(8,))
        assert config.ngram_order == 4
        assert config.k_values == (8,)

    def test_output_root_env_var(self, tmp_path, monkeypatch):
        monkeypatch.setenv("UNITGRID_OUT", str(tmp_path / "roots"))
        config = SweepConfig(features_manifest=tmp_path / "m.tsv", out_dir="exp1")
        assert config.out_dir == tmp_path / "roots" / "exp1"
        monkeypatch.delenv("UNITGRID_OUT")
        config = SweepConfig(features_manifest=tmp_path / "m.tsv", out_dir=tmp_path / "abs")
        assert config.out_dir == tmp_path / "abs"
