"""Command-line interface.

Subcommands: features synth|sample, kmeans train, encode, pack, lm train|score,
eval, diff, stats, sweep run|report. Sweep configs are JSON documents whose
fields mirror SweepConfig; every field can be overridden by a flag, and the
UNITGRID_OUT environment variable sets the root for relative output dirs.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import evaluation, features, kmeans, ngram, packing, sweep, units
from . import segmenter as segment


def _parse_range(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition(":")
    return (int(lo), int(hi or lo))


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(","))


def _load_plan(args) -> "segment.SegmentationPlan | dict[str, segment.VariablePlan]":
    if args.boundaries:
        return segment.read_boundaries(args.boundaries)
    if args.width_ms is None:
        raise SystemExit("either --width-ms or --boundaries is required")
    return segment.FixedPlan(float(args.width_ms))


def _plan_for(plan, utt_id: str):
    if isinstance(plan, dict):
        if utt_id not in plan:
            raise SystemExit(f"no boundary plan for utterance {utt_id!r}")
        return plan[utt_id]
    return plan


def cmd_features_synth(args) -> int:
    spec = features.SyntheticSpec(
        num_utts=args.num_utts,
        frames_range=_parse_range(args.frames),
        dim=args.dim,
        num_latent_classes=args.classes,
        noise_scale=args.noise,
        seed=args.seed,
        hop_ms=args.hop_ms,
        run_frames=_parse_range(args.run_frames),
    )
    manifest = features.generate_synthetic(spec, args.out)
    print(f"wrote {len(manifest)} utterances to {args.out}")
    return 0


def cmd_features_sample(args) -> int:
    manifest = features.CorpusManifest.load(args.manifest)
    subset = features.sample_subset(manifest, args.hours, args.seed)
    subset.save(args.out)
    hours = subset.total_duration_ms() / 3_600_000.0
    print(f"sampled {len(subset)} utterances ({hours:.2f} h) -> {args.out}")
    return 0


def _pooled_vectors(manifest: features.CorpusManifest, plan) -> np.ndarray:
    rows = []
    for entry in manifest:
        record = features.read_features(manifest.resolve(entry), utt_id=entry.utt_id)
        rows.append(segment.segment(record.features, _plan_for(plan, entry.utt_id)).segments)
    if not rows:
        raise SystemExit("manifest is empty")
    return np.concatenate(rows, axis=0)


def cmd_kmeans_train(args) -> int:
    manifest = features.CorpusManifest.load(args.manifest)
    if args.subset_hours is not None:
        manifest = features.sample_subset(manifest, args.subset_hours, args.subset_seed)
    plan = _load_plan(args)
    vectors = _pooled_vectors(manifest, plan)
    config = kmeans.KMeansConfig(
        k=args.k,
        max_iters=args.max_iters,
        rel_tol=args.rel_tol,
        seed=args.seed,
        batch_size=args.minibatch,
    )
    width = args.width_ms if args.width_ms is not None else f"var:{args.boundaries}"
    book = kmeans.train_kmeans(vectors, config, extra_meta={"segment_width_ms": width})
    book.save(args.out)
    print(
        f"trained k={book.k} on {vectors.shape[0]} vectors, "
        f"inertia={book.meta['final_inertia']:.6g}, iters={book.meta['iterations_run']}"
    )
    return 0


def cmd_encode(args) -> int:
    manifest = features.CorpusManifest.load(args.manifest)
    book = kmeans.Codebook.load(args.codebook)
    plan = _load_plan(args)
    encoded = []
    for entry in manifest:
        record = features.read_features(manifest.resolve(entry), utt_id=entry.utt_id)
        encoded.append(
            units.encode(
                record.features,
                _plan_for(plan, entry.utt_id),
                book,
                dedup=not args.no_dedup,
                utt_id=entry.utt_id,
            )
        )
    units.write_unit_corpus(encoded, args.out, args.spans_out)
    total = sum(len(seq.units) for seq in encoded)
    print(f"encoded {len(encoded)} utterances, {total} tokens -> {args.out}")
    return 0


def cmd_pack(args) -> int:
    corpus = units.read_unit_corpus(args.units)
    packed = packing.pack(
        corpus, args.chunk_len, use_separator=not args.no_separator, vocab_size=args.vocab
    )
    packing.write_packed(packed, args.out)
    print(
        f"packed {len(packed.chunks)} chunks of {packed.chunk_len} tokens "
        f"(dropped tail: {packed.dropped_tail}) -> {args.out}"
    )
    return 0


def cmd_lm_train(args) -> int:
    corpus = units.read_unit_corpus(args.units)
    discount = "auto" if args.discount == "auto" else float(args.discount)
    model = ngram.train_ngram(
        corpus,
        order=args.order,
        discount=discount,
        vocab_size=args.vocab,
        use_eos=not args.no_eos,
    )
    model.save(args.out)
    print(f"trained order-{model.order} model over vocab {model.vocab_size} -> {args.out}")
    return 0


def cmd_lm_score(args) -> int:
    model = ngram.NgramModel.load(args.model)
    corpus = units.read_unit_corpus(args.units)
    lines = []
    for seq in corpus:
        lp = ngram.sequence_logprob(model, seq.units, normalize=args.normalize)
        lines.append(f"{seq.utt_id}\t{lp!r}\n")
    if args.out:
        Path(args.out).write_text("".join(lines), encoding="utf-8")
    else:
        sys.stdout.write("".join(lines))
    return 0


def cmd_eval(args) -> int:
    bench_path = Path(args.benchmark)
    refs = evaluation.read_benchmark_manifest(bench_path)
    if args.scores:
        table = ngram.load_external_scores(args.scores)
        pairs = [
            evaluation.StimulusPair(r.pair_id, args.benchmark_name, r.category) for r in refs
        ]
        report = evaluation.evaluate(table, pairs)
    else:
        if not args.model:
            raise SystemExit("eval needs either --scores or a --model")
        model = ngram.NgramModel.load(args.model)
        scorer = ngram.NgramScorer(model, normalize=args.normalize)
        if args.units:
            corpus = {seq.utt_id: seq for seq in units.read_unit_corpus(args.units)}
            pairs = evaluation.pairs_from_unit_corpus(refs, corpus, benchmark=args.benchmark_name)
        elif args.codebook:
            # pos/neg reference feature files: run them through the pipeline
            book = kmeans.Codebook.load(args.codebook)
            plan = _load_plan(args)
            pairs = []
            for ref in refs:
                sides = {}
                for side, rel in (("pos", ref.pos), ("neg", ref.neg)):
                    record = features.read_features(bench_path.parent / rel)
                    sides[side] = units.encode(
                        record.features,
                        _plan_for(plan, record.utt_id),
                        book,
                        dedup=not args.no_dedup,
                        utt_id=record.utt_id,
                    )
                pairs.append(
                    evaluation.StimulusPair(
                        ref.pair_id, args.benchmark_name, ref.category,
                        sides["pos"], sides["neg"],
                    )
                )
        else:
            raise SystemExit("eval needs --units (unit-corpus refs) or --codebook (feature refs)")
        report = evaluation.evaluate(scorer, pairs)
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def cmd_diff(args) -> int:
    corpus = {
        seq.utt_id: seq
        for seq in units.read_unit_corpus(args.units, spans_path=args.spans, dedup=args.dedup)
    }
    try:
        a, b = corpus[args.utt_a], corpus[args.utt_b]
    except KeyError as exc:
        raise SystemExit(f"unknown utterance {exc}")
    for iv in units.align_diff(a, b):
        marker = " *" if iv.differs else ""
        ua = "-" if iv.unit_a is None else iv.unit_a
        ub = "-" if iv.unit_b is None else iv.unit_b
        print(f"[{iv.start_ms:8.1f}, {iv.end_ms:8.1f}) ms  {ua:>6} | {ub:<6}{marker}")
    return 0


def cmd_stats(args) -> int:
    corpus = units.read_unit_corpus(args.units)
    stats = units.corpus_stats(corpus, config=(args.n, args.k))
    print(f"utterances:        {len(stats.per_utterance)}")
    print(f"tokens pre-dedup:  {stats.total_tokens_pre_dedup}")
    print(f"tokens post-dedup: {stats.total_tokens_post_dedup}")
    if args.boundaries:
        plans = list(segment.read_boundaries(args.boundaries).values())
        ws = segment.width_stats(plans, hop_ms=args.hop_ms)
        print(f"width median: {ws.median_ms} ms, mean: {ws.mean_ms:.2f} ms")
    return 0


def _sweep_overrides(args) -> dict:
    return {
        "features_manifest": args.manifest,
        "out_dir": args.out,
        "n_values": args.n_values,
        "k_values": args.k_values,
        "seeds": args.seeds,
        "subset_hours": args.subset_hours,
        "ngram_order": args.order,
        "chunk_len": args.chunk_len,
        "workers": args.workers,
    }


def cmd_sweep_run(args) -> int:
    if args.config:
        config = sweep.SweepConfig.from_file(args.config, **_sweep_overrides(args))
    else:
        if not (args.manifest and args.out):
            raise SystemExit("sweep run needs --config or both --manifest and --out")
        fields = {k: v for k, v in _sweep_overrides(args).items() if v is not None}
        config = sweep.SweepConfig(**fields)
    result = sweep.run_sweep(config)
    failed = [c for c in result.cells if c.status != "ok"]
    print(
        f"{len(result.cells)} cells ({len(failed)} failed), "
        f"cache hits={result.cache_hits} misses={result.cache_misses}"
    )
    for name, path in sorted(result.report_files.items()):
        print(f"  {name}: {path}")
    return 1 if failed else 0


def cmd_sweep_report(args) -> int:
    agg_path = Path(args.out) / "reports" / "aggregates.json"
    if not agg_path.exists():
        raise SystemExit(f"no aggregates at {agg_path}; run `sweep run` first")
    aggregates = sweep.load_aggregates(agg_path)
    written = sweep.emit_report(aggregates, Path(args.out) / "reports")
    for name, path in sorted(written.items()):
        print(f"  {name}: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="unitgrid", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_features = sub.add_parser("features", help="synthesize or subsample feature corpora")
    fsub = p_features.add_subparsers(dest="subcommand", required=True)
    p = fsub.add_parser("synth", help="generate a synthetic feature corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--num-utts", type=int, default=50)
    p.add_argument("--frames", default="80:200", help="frame count range LO:HI")
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--classes", type=int, default=8)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hop-ms", type=float, default=features.DEFAULT_HOP_MS)
    p.add_argument("--run-frames", default="2:6", help="latent run length range LO:HI")
    p.set_defaults(func=cmd_features_synth)
    p = fsub.add_parser("sample", help="seeded duration-targeted subset")
    p.add_argument("--manifest", required=True)
    p.add_argument("--hours", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features_sample)

    p_kmeans = sub.add_parser("kmeans", help="codebook training")
    ksub = p_kmeans.add_subparsers(dest="subcommand", required=True)
    p = ksub.add_parser("train", help="train a codebook on pooled segments")
    p.add_argument("--manifest", required=True)
    p.add_argument("--width-ms", type=float, default=None)
    p.add_argument("--boundaries", default=None)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--rel-tol", type=float, default=1e-4)
    p.add_argument("--minibatch", type=int, default=None, help="enable minibatch mode")
    p.add_argument("--subset-hours", type=float, default=None)
    p.add_argument("--subset-seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_kmeans_train)

    p = sub.add_parser("encode", help="segment, pool, assign, deduplicate a corpus")
    p.add_argument("--manifest", required=True)
    p.add_argument("--codebook", required=True)
    p.add_argument("--width-ms", type=float, default=None)
    p.add_argument("--boundaries", default=None)
    p.add_argument("--no-dedup", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--spans-out", default=None)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("pack", help="pack a unit corpus into fixed-length chunks")
    p.add_argument("--units", required=True)
    p.add_argument("--chunk-len", type=int, default=packing.DEFAULT_CHUNK_LEN)
    p.add_argument("--vocab", type=int, required=True)
    p.add_argument("--no-separator", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pack)

    p_lm = sub.add_parser("lm", help="unit language model")
    lsub = p_lm.add_subparsers(dest="subcommand", required=True)
    p = lsub.add_parser("train", help="train a Kneser-Ney n-gram model")
    p.add_argument("--units", required=True)
    p.add_argument("--order", type=int, default=ngram.DEFAULT_ORDER)
    p.add_argument("--vocab", type=int, default=None)
    p.add_argument("--discount", default="auto")
    p.add_argument("--no-eos", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_lm_train)
    p = lsub.add_parser("score", help="per-utterance sequence log-probabilities")
    p.add_argument("--model", required=True)
    p.add_argument("--units", required=True)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_lm_score)

    p = sub.add_parser("eval", help="paired-stimuli benchmark evaluation")
    p.add_argument("--benchmark", required=True, help="JSON-lines pair manifest")
    p.add_argument("--benchmark-name", default="custom")
    p.add_argument("--model", default=None)
    p.add_argument("--units", default=None, help="unit corpus holding the stimuli")
    p.add_argument("--codebook", default=None, help="encode feature-file stimuli instead")
    p.add_argument("--width-ms", type=float, default=None)
    p.add_argument("--boundaries", default=None)
    p.add_argument("--no-dedup", action="store_true")
    p.add_argument("--scores", default=None, help="external score TSV")
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("diff", help="time-aligned unit diff of two utterances")
    p.add_argument("--units", required=True)
    p.add_argument("--spans", required=True)
    p.add_argument("--dedup", action="store_true", help="corpus was deduplicated")
    p.add_argument("utt_a")
    p.add_argument("utt_b")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("stats", help="corpus token statistics")
    p.add_argument("--units", required=True)
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--boundaries", default=None, help="also report width statistics")
    p.add_argument("--hop-ms", type=float, default=features.DEFAULT_HOP_MS)
    p.set_defaults(func=cmd_stats)

    p_sweep = sub.add_parser("sweep", help="grid experiments")
    ssub = p_sweep.add_subparsers(dest="subcommand", required=True)
    p = ssub.add_parser("run", help="run the (N, K, seed) grid")
    p.add_argument("--config", default=None, help="JSON config mirroring SweepConfig")
    p.add_argument("--manifest", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--n-values", type=_int_list, default=None)
    p.add_argument("--k-values", type=_int_list, default=None)
    p.add_argument("--seeds", type=_int_list, default=None)
    p.add_argument("--subset-hours", type=float, default=None)
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--chunk-len", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_sweep_run)
    p = ssub.add_parser("report", help="re-emit report files from a finished sweep")
    p.add_argument("--out", required=True, help="sweep output directory")
    p.set_defaults(func=cmd_sweep_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
