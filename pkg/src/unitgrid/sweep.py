"""Grid experiment orchestration: for each (segmentation, K, seed) cell, run
subset -> pool -> k-means -> encode -> pack -> train scorer -> evaluate, with
content-addressed stage caching and consolidated report emission.

Stage outputs live under ``<out_dir>/cache/<stage>-<key>/`` where the key is a
SHA-256 over the stage name, its parameters, and the content hashes of its
input files. Reruns of an unchanged sweep therefore recompute nothing.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import evaluation, features, kmeans, ngram, packing, units
from . import segmenter as segment

OUTPUT_ROOT_ENV = "UNITGRID_OUT"

DEFAULT_N_VALUES = (20, 40, 80, 120, 160, 200, 240, 280)
DEFAULT_K_VALUES = tuple(2**p for p in range(7, 15))


@dataclass
class SweepConfig:
    features_manifest: Path
    out_dir: Path
    n_values: tuple[int, ...] = DEFAULT_N_VALUES
    k_values: tuple[int, ...] = DEFAULT_K_VALUES
    seeds: tuple[int, ...] = (0, 1, 2)
    benchmarks: dict[str, Path] = field(default_factory=dict)
    subset_hours: float = 100.0
    scorer: str = "ngram"  # "ngram" | "external"
    ngram_order: int = ngram.DEFAULT_ORDER
    ngram_discount: float | str = "auto"
    external_scores: str | None = None  # template with {benchmark},{n},{k},{seed}
    chunk_len: int = packing.DEFAULT_CHUNK_LEN
    use_separator: bool = True
    dedup: bool = True
    normalize_scores: bool = False
    variable_plans: dict[str, Path] = field(default_factory=dict)
    kmeans_max_iters: int = 100
    kmeans_rel_tol: float = 1e-4
    kmeans_batch_size: int | None = None
    workers: int = 1
    verify_cache: bool = False

    def __post_init__(self):
        self.features_manifest = Path(self.features_manifest)
        self.out_dir = _resolve_out_dir(Path(self.out_dir))
        self.n_values = tuple(int(n) for n in self.n_values)
        self.k_values = tuple(int(k) for k in self.k_values)
        self.seeds = tuple(int(s) for s in self.seeds)
        self.benchmarks = {name: Path(p) for name, p in self.benchmarks.items()}
        self.variable_plans = {name: Path(p) for name, p in self.variable_plans.items()}

    def validate(self) -> None:
        if not self.n_values and not self.variable_plans:
            raise ValueError("sweep needs at least one segmentation setting")
        if not self.k_values:
            raise ValueError("k_values must be non-empty")
        if any(k < 1 for k in self.k_values):
            raise ValueError("k_values must all be >= 1")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        if self.scorer not in ("ngram", "external"):
            raise ValueError(f"unknown scorer {self.scorer!r}")
        if self.scorer == "external" and not self.external_scores:
            raise ValueError("external scorer requires an external_scores template")
        if not self.features_manifest.exists():
            raise FileNotFoundError(f"features manifest not found: {self.features_manifest}")
        for name, path in {**self.benchmarks, **self.variable_plans}.items():
            if not path.exists():
                raise FileNotFoundError(f"{name}: file not found: {path}")

    @classmethod
    def from_file(cls, path: Path | str, **overrides) -> "SweepConfig":
        """Load a JSON (or TOML, when a parser is available) config document.

        Relative paths inside the document resolve against its directory;
        keyword overrides win over document values.
        """
        path = Path(path)
        if path.suffix == ".toml":
            try:
                import tomllib  # py3.11+
            except ImportError as exc:
                raise RuntimeError("TOML configs need Python 3.11+; use JSON instead") from exc
            data = tomllib.loads(path.read_text(encoding="utf-8"))
        else:
            data = json.loads(path.read_text(encoding="utf-8"))
        base = path.parent

        def _rel(p) -> Path:
            p = Path(p)
            return p if p.is_absolute() else base / p

        for key in ("features_manifest", "out_dir"):
            if key in data:
                data[key] = _rel(data[key])
        for key in ("benchmarks", "variable_plans"):
            if key in data:
                data[key] = {name: _rel(p) for name, p in data[key].items()}
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)


def _resolve_out_dir(out_dir: Path) -> Path:
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not out_dir.is_absolute():
        return Path(root) / out_dir
    return out_dir


# -- content-addressed stage cache -----------------------------------------


class StageCache:
    def __init__(self, root: Path):
        self.root = root
        self.root.mkdir(parents=True, exist_ok=True)
        self.hits = 0
        self.misses = 0
        self._hash_memo: dict[str, str] = {}
        self._lock = threading.Lock()
        self._key_locks: dict[str, threading.Lock] = {}
        self.executed: list[tuple[str, dict, tuple[Path, ...], Callable[[Path], None]]] = []

    def file_hash(self, path: Path) -> str:
        key = str(Path(path).resolve())
        with self._lock:
            cached = self._hash_memo.get(key)
        if cached is not None:
            return cached
        digest = hashlib.sha256()
        with open(path, "rb") as fh:
            for block in iter(lambda: fh.read(1 << 20), b""):
                digest.update(block)
        value = digest.hexdigest()
        with self._lock:
            self._hash_memo[key] = value
        return value

    def stage_key(self, stage: str, params: dict, inputs: Sequence[Path]) -> str:
        payload = json.dumps(
            {
                "stage": stage,
                "params": params,
                "inputs": [self.file_hash(p) for p in inputs],
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def _lock_for(self, key: str) -> threading.Lock:
        with self._lock:
            return self._key_locks.setdefault(key, threading.Lock())

    def run(
        self,
        stage: str,
        params: dict,
        inputs: Sequence[Path],
        build: Callable[[Path], None],
    ) -> Path:
        """Return the artifact directory for this stage, building it on a miss."""
        inputs = tuple(Path(p) for p in inputs)
        key = self.stage_key(stage, params, inputs)
        dest = self.root / f"{stage}-{key[:20]}"
        with self._lock_for(key):
            if (dest / ".complete").exists():
                with self._lock:
                    self.hits += 1
                    self.executed.append((stage, params, inputs, build))
                return dest
            with self._lock:
                self.misses += 1
                self.executed.append((stage, params, inputs, build))
            tmp = self.root / f".tmp-{stage}-{key[:20]}-{os.getpid()}-{threading.get_ident()}"
            shutil.rmtree(tmp, ignore_errors=True)
            tmp.mkdir(parents=True)
            build(tmp)
            (tmp / "meta.json").write_text(
                json.dumps({"stage": stage, "params": params, "key": key}, sort_keys=True),
                encoding="utf-8",
            )
            (tmp / ".complete").touch()
            if dest.exists():
                shutil.rmtree(tmp)
            else:
                os.replace(tmp, dest)
        return dest

    def verify_one(self, seed: int) -> None:
        """Rebuild one seeded-random executed stage and compare it byte-for-byte."""
        if not self.executed:
            return
        rng = np.random.default_rng(seed)
        stage, params, inputs, build = self.executed[int(rng.integers(len(self.executed)))]
        key = self.stage_key(stage, params, inputs)
        dest = self.root / f"{stage}-{key[:20]}"
        tmp = self.root / f".verify-{stage}-{key[:20]}"
        shutil.rmtree(tmp, ignore_errors=True)
        tmp.mkdir(parents=True)
        try:
            build(tmp)
            for cached_file in sorted(dest.iterdir()):
                if cached_file.name in (".complete", "meta.json"):
                    continue
                rebuilt = tmp / cached_file.name
                if not rebuilt.exists() or rebuilt.read_bytes() != cached_file.read_bytes():
                    raise RuntimeError(
                        f"cache verification failed for stage {stage}: {cached_file.name} differs"
                    )
        finally:
            shutil.rmtree(tmp, ignore_errors=True)


# -- sweep execution --------------------------------------------------------


@dataclass(frozen=True)
class PlanSource:
    """A row of the grid: a fixed width in ms or a named boundary file."""

    label: str
    width_ms: float | None = None
    boundaries: Path | None = None

    def plan_for(self, utt_id: str, plans: dict[str, segment.VariablePlan] | None):
        if self.width_ms is not None:
            return segment.FixedPlan(self.width_ms)
        if plans is None or utt_id not in plans:
            raise KeyError(f"no boundary plan for utterance {utt_id!r} in {self.label}")
        return plans[utt_id]


@dataclass
class CellOutcome:
    n_label: str
    k: int
    seed: int
    status: str  # "ok" | "failed"
    stages: dict[str, dict]
    error: str | None = None


@dataclass
class SweepResult:
    reports: list[evaluation.EvalReport]
    aggregates: list[evaluation.SeedAggregate]
    tables: evaluation.GridTables | None
    cells: list[CellOutcome]
    cache_hits: int
    cache_misses: int
    report_files: dict[str, Path]


def _plan_sources(config: SweepConfig) -> list[PlanSource]:
    sources = [PlanSource(label=str(n), width_ms=float(n)) for n in config.n_values]
    for name, path in sorted(config.variable_plans.items()):
        sources.append(PlanSource(label=f"var:{name}", boundaries=path))
    return sources


def run_sweep(config: SweepConfig) -> SweepResult:
    """Execute every grid cell, reusing cached stage artifacts, then aggregate
    seed reports and emit grid tables. Per-cell failures are recorded in the
    run ledger without aborting other cells."""
    config.validate()
    out_dir = config.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    cache = StageCache(out_dir / "cache")
    manifest = features.CorpusManifest.load(config.features_manifest)
    started = time.time()

    cells = [
        (source, k, seed)
        for source in _plan_sources(config)
        for k in config.k_values
        for seed in config.seeds
    ]
    outcomes: list[CellOutcome] = []
    reports: list[evaluation.EvalReport] = []

    def run_cell(cell) -> tuple[CellOutcome, list[evaluation.EvalReport]]:
        source, k, seed = cell
        outcome = CellOutcome(n_label=source.label, k=k, seed=seed, status="ok", stages={})
        try:
            cell_reports = _run_cell_stages(config, cache, manifest, source, k, seed, outcome)
            return outcome, cell_reports
        except Exception as exc:  # isolate cell failures
            outcome.status = "failed"
            outcome.error = f"{type(exc).__name__}: {exc}"
            return outcome, []

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(run_cell, cells))
    else:
        results = [run_cell(cell) for cell in cells]
    for outcome, cell_reports in results:
        outcomes.append(outcome)
        reports.extend(cell_reports)

    aggregates = _aggregate(reports)
    tables = evaluation.grid_table(aggregates) if aggregates else None
    report_files = emit_report(aggregates, out_dir / "reports") if aggregates else {}

    if config.verify_cache:
        cache.verify_one(seed=0)

    ledger = {
        "started": started,
        "finished": time.time(),
        "config": _config_summary(config),
        "cache": {"hits": cache.hits, "misses": cache.misses},
        "cells": [asdict(o) for o in outcomes],
    }
    (out_dir / "sweep_ledger.json").write_text(
        json.dumps(ledger, indent=2, sort_keys=True), encoding="utf-8"
    )
    return SweepResult(
        reports=reports,
        aggregates=aggregates,
        tables=tables,
        cells=outcomes,
        cache_hits=cache.hits,
        cache_misses=cache.misses,
        report_files=report_files,
    )


def _config_summary(config: SweepConfig) -> dict:
    data = asdict(config)
    for key, value in data.items():
        if isinstance(value, Path):
            data[key] = str(value)
    data["benchmarks"] = {k: str(v) for k, v in config.benchmarks.items()}
    data["variable_plans"] = {k: str(v) for k, v in config.variable_plans.items()}
    return data


def _timed(outcome: CellOutcome, name: str, fn):
    t0 = time.time()
    artifact = fn()
    outcome.stages[name] = {"artifact": str(artifact), "seconds": time.time() - t0}
    return artifact


def _run_cell_stages(
    config: SweepConfig,
    cache: StageCache,
    manifest: features.CorpusManifest,
    source: PlanSource,
    k: int,
    seed: int,
    outcome: CellOutcome,
) -> list[evaluation.EvalReport]:
    manifest_path = config.features_manifest
    feature_paths = [manifest.resolve(e) for e in manifest]
    plan_inputs = [source.boundaries] if source.boundaries else []
    boundary_plans = segment.read_boundaries(source.boundaries) if source.boundaries else None

    # 1. seeded subset used for codebook training
    def build_subset(dest: Path) -> None:
        subset = features.sample_subset(manifest, config.subset_hours, seed)
        subset.save(dest / "subset.tsv")

    subset_dir = _timed(
        outcome,
        "subset",
        lambda: cache.run(
            "subset",
            {"hours": config.subset_hours, "seed": seed},
            [manifest_path],
            build_subset,
        ),
    )
    subset = features.CorpusManifest.load(subset_dir / "subset.tsv")
    subset_features = [manifest.resolve(e) for e in subset]

    # 2. pooled segment vectors of the subset at this segmentation
    def build_pool(dest: Path) -> None:
        rows = []
        for entry in subset:
            record = features.read_features(manifest.resolve(entry), utt_id=entry.utt_id)
            plan = source.plan_for(entry.utt_id, boundary_plans)
            rows.append(segment.segment(record.features, plan).segments)
        dim = rows[0].shape[1] if rows else 0
        stacked = (
            np.concatenate(rows, axis=0) if rows else np.zeros((0, dim), dtype=np.float32)
        )
        np.save(dest / "pooled.npy", stacked)

    pool_dir = _timed(
        outcome,
        "pool",
        lambda: cache.run(
            "pool",
            {"plan": source.label},
            [subset_dir / "subset.tsv", *subset_features, *plan_inputs],
            build_pool,
        ),
    )

    # 3. codebook
    def build_kmeans(dest: Path) -> None:
        vectors = np.load(pool_dir / "pooled.npy")
        cfg = kmeans.KMeansConfig(
            k=k,
            max_iters=config.kmeans_max_iters,
            rel_tol=config.kmeans_rel_tol,
            seed=seed,
            batch_size=config.kmeans_batch_size,
        )
        book = kmeans.train_kmeans(vectors, cfg, extra_meta={"segment_width_ms": source.label})
        book.save(dest / "codebook.scbk")

    kmeans_params = {
        "k": k,
        "seed": seed,
        "max_iters": config.kmeans_max_iters,
        "rel_tol": config.kmeans_rel_tol,
        "batch_size": config.kmeans_batch_size,
    }
    kmeans_dir = _timed(
        outcome,
        "kmeans",
        lambda: cache.run("kmeans", kmeans_params, [pool_dir / "pooled.npy"], build_kmeans),
    )
    codebook_path = kmeans_dir / "codebook.scbk"

    # 4. unit corpus for the whole manifest
    def build_encode(dest: Path) -> None:
        book = kmeans.Codebook.load(codebook_path)
        encoded = []
        for entry in manifest:
            record = features.read_features(manifest.resolve(entry), utt_id=entry.utt_id)
            plan = source.plan_for(entry.utt_id, boundary_plans)
            encoded.append(
                units.encode(record.features, plan, book, dedup=config.dedup, utt_id=entry.utt_id)
            )
        units.write_unit_corpus(encoded, dest / "units.txt", dest / "spans.txt")

    encode_dir = _timed(
        outcome,
        "encode",
        lambda: cache.run(
            "encode",
            {"plan": source.label, "dedup": config.dedup},
            [manifest_path, *feature_paths, codebook_path, *plan_inputs],
            build_encode,
        ),
    )
    units_path = encode_dir / "units.txt"

    # 5. packed chunks (artifact for chunked LM training)
    def build_pack(dest: Path) -> None:
        corpus = units.read_unit_corpus(units_path, dedup=config.dedup)
        packed = packing.pack(
            corpus, config.chunk_len, use_separator=config.use_separator, vocab_size=k
        )
        packing.write_packed(packed, dest / "packed.txt")

    _timed(
        outcome,
        "pack",
        lambda: cache.run(
            "pack",
            {"chunk_len": config.chunk_len, "separator": config.use_separator, "vocab": k},
            [units_path],
            build_pack,
        ),
    )

    # 6. scorer
    model_path: Path | None = None
    if config.scorer == "ngram":

        def build_lm(dest: Path) -> None:
            corpus = units.read_unit_corpus(units_path, dedup=config.dedup)
            model = ngram.train_ngram(
                corpus, order=config.ngram_order, discount=config.ngram_discount, vocab_size=k
            )
            model.save(dest / "model.sngm")

        lm_dir = _timed(
            outcome,
            "lm",
            lambda: cache.run(
                "lm",
                {"order": config.ngram_order, "discount": config.ngram_discount, "vocab": k},
                [units_path],
                build_lm,
            ),
        )
        model_path = lm_dir / "model.sngm"

    # 7. benchmark evaluation
    cell_reports: list[evaluation.EvalReport] = []
    cell_config = {"n": source.label, "k": k, "seed": seed}
    for bench_name, bench_path in sorted(config.benchmarks.items()):
        if config.scorer == "external":
            scores_path = Path(
                config.external_scores.format(
                    benchmark=bench_name, n=source.label, k=k, seed=seed
                )
            )

            def build_eval(dest: Path, bench_name=bench_name, bench_path=bench_path, scores_path=scores_path) -> None:
                refs = evaluation.read_benchmark_manifest(bench_path)
                table = ngram.load_external_scores(scores_path)
                pairs = [
                    evaluation.StimulusPair(r.pair_id, bench_name, r.category) for r in refs
                ]
                report = evaluation.evaluate(table, pairs, config=cell_config)
                (dest / "report.json").write_text(report.to_json(), encoding="utf-8")

            eval_inputs = [bench_path, scores_path]
        else:

            def build_eval(dest: Path, bench_name=bench_name, bench_path=bench_path) -> None:
                book = kmeans.Codebook.load(codebook_path)
                model = ngram.NgramModel.load(model_path)
                scorer = ngram.NgramScorer(model, normalize=config.normalize_scores)
                refs = evaluation.read_benchmark_manifest(bench_path)
                pairs = []
                for ref in refs:
                    pair_units = {}
                    for side, rel in (("pos", ref.pos), ("neg", ref.neg)):
                        record = features.read_features(bench_path.parent / rel)
                        plan = source.plan_for(record.utt_id, boundary_plans)
                        pair_units[side] = units.encode(
                            record.features, plan, book, dedup=config.dedup, utt_id=record.utt_id
                        )
                    pairs.append(
                        evaluation.StimulusPair(
                            ref.pair_id, bench_name, ref.category, pair_units["pos"], pair_units["neg"]
                        )
                    )
                report = evaluation.evaluate(scorer, pairs, config=cell_config)
                (dest / "report.json").write_text(report.to_json(), encoding="utf-8")

            stimulus_files = sorted(
                {
                    bench_path.parent / ref
                    for r in evaluation.read_benchmark_manifest(bench_path)
                    for ref in (r.pos, r.neg)
                }
            )
            eval_inputs = [bench_path, *stimulus_files, codebook_path, model_path, *plan_inputs]

        eval_dir = _timed(
            outcome,
            f"eval:{bench_name}",
            lambda build_eval=build_eval, eval_inputs=eval_inputs: cache.run(
                "eval",
                {
                    "benchmark": bench_name,
                    "cell": cell_config,
                    "dedup": config.dedup,
                    "normalize": config.normalize_scores,
                },
                eval_inputs,
                build_eval,
            ),
        )
        cell_reports.append(
            evaluation.EvalReport.from_json((eval_dir / "report.json").read_text(encoding="utf-8"))
        )
    return cell_reports


def _aggregate(reports: list[evaluation.EvalReport]) -> list[evaluation.SeedAggregate]:
    grouped: dict[tuple[str, str, int], list[evaluation.EvalReport]] = {}
    for report in reports:
        key = (report.benchmark, str(report.config["n"]), int(report.config["k"]))
        grouped.setdefault(key, []).append(report)
    return [evaluation.aggregate_seeds(group) for _, group in sorted(grouped.items())]


# -- report emission --------------------------------------------------------


def _write_if_changed(path: Path, text: str) -> None:
    # keeps reruns of an unchanged sweep from touching output files
    if path.exists() and path.read_text(encoding="utf-8") == text:
        return
    path.write_text(text, encoding="utf-8")


def _grid_csv(matrix: evaluation.GridMatrix) -> str:
    lines = ["n\\k," + ",".join(str(k) for k in matrix.col_labels)]
    for n in matrix.row_labels:
        cells = []
        for k in matrix.col_labels:
            v = matrix.get(n, k)
            cells.append("" if v is None else repr(v))
        lines.append(f"{n}," + ",".join(cells))
    return "\n".join(lines) + "\n"


def read_grid_csv(path: Path | str) -> evaluation.GridMatrix:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    cols = tuple(int(tok) for tok in lines[0].split(",")[1:])
    rows = []
    cells: dict[tuple[str, int], float] = {}
    for line in lines[1:]:
        parts = line.split(",")
        label = parts[0]
        rows.append(label)
        for k, tok in zip(cols, parts[1:]):
            if tok:
                cells[(label, k)] = float(tok)
    return evaluation.GridMatrix(tuple(rows), cols, cells)


def _grid_json(matrix: evaluation.GridMatrix) -> str:
    return json.dumps(
        {
            "rows": list(matrix.row_labels),
            "cols": list(matrix.col_labels),
            "cells": [
                {"n": n, "k": k, "value": matrix.get(n, k)}
                for n in matrix.row_labels
                for k in matrix.col_labels
                if matrix.get(n, k) is not None
            ],
        },
        indent=2,
        sort_keys=True,
    )


def emit_report(
    aggregates: Sequence[evaluation.SeedAggregate], out_dir: Path | str
) -> dict[str, Path]:
    """Write per-benchmark grid matrices (CSV + JSON), the cross-benchmark
    average grid, the per-N best-K summary, per-row CSV, and a text summary."""
    if not aggregates:
        raise ValueError("emit_report requires at least one aggregate")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tables = evaluation.grid_table(aggregates)
    written: dict[str, Path] = {}

    for bench, matrix in tables.per_benchmark.items():
        csv_path = out / f"grid_{bench}.csv"
        _write_if_changed(csv_path, _grid_csv(matrix))
        written[f"grid_{bench}.csv"] = csv_path
        json_path = out / f"grid_{bench}.json"
        _write_if_changed(json_path, _grid_json(matrix) + "\n")
        written[f"grid_{bench}.json"] = json_path

    _write_if_changed(out / "grid_average.csv", _grid_csv(tables.average))
    written["grid_average.csv"] = out / "grid_average.csv"
    _write_if_changed(out / "grid_average.json", _grid_json(tables.average) + "\n")
    written["grid_average.json"] = out / "grid_average.json"

    best_lines = ["n,best_k,avg_accuracy"]
    best_lines += [f"{r.n_label},{r.best_k},{r.value!r}" for r in tables.best_k]
    _write_if_changed(out / "best_k.csv", "\n".join(best_lines) + "\n")
    written["best_k.csv"] = out / "best_k.csv"

    rows_path = out / "report_rows.csv"
    _write_if_changed(rows_path, evaluation.report_csv_text(aggregates))
    written["report_rows.csv"] = rows_path

    summary = ["segmentation -> best K (cross-benchmark average accuracy)"]
    summary += [f"  N={r.n_label}: K={r.best_k} acc={r.value:.4f}" for r in tables.best_k]
    _write_if_changed(out / "summary.txt", "\n".join(summary) + "\n")
    written["summary.txt"] = out / "summary.txt"

    agg_json = json.dumps(
        [
            {
                "benchmark": a.benchmark,
                "n": a.n_label,
                "k": a.k,
                "num_seeds": a.num_seeds,
                "metrics": {m: list(v) for m, v in a.metrics.items()},
            }
            for a in aggregates
        ],
        indent=2,
        sort_keys=True,
    )
    _write_if_changed(out / "aggregates.json", agg_json + "\n")
    written["aggregates.json"] = out / "aggregates.json"
    return written


def load_aggregates(path: Path | str) -> list[evaluation.SeedAggregate]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return [
        evaluation.SeedAggregate(
            benchmark=row["benchmark"],
            n_label=row["n"],
            k=int(row["k"]),
            num_seeds=int(row["num_seeds"]),
            metrics={m: (v[0], v[1]) for m, v in row["metrics"].items()},
        )
        for row in data
    ]
