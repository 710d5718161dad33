"""Adapter CLI: extract, boundaries convert, benchmark prepare."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .boundaries import convert_boundaries, frames_from_durations, write_boundary_file
from .extract import ExtractionSpec, extract_features, prepare_benchmark
from .featfile import read_manifest_durations


def cmd_extract(args) -> int:
    spec = ExtractionSpec(
        audio_manifest=args.manifest,
        out_dir=args.out,
        model=args.model,
        layer=args.layer,
        hop_ms=args.hop_ms,
    )
    manifest = extract_features(spec)
    print(f"wrote {manifest}")
    return 0


def cmd_boundaries_convert(args) -> int:
    durations = read_manifest_durations(args.features_manifest)
    frames = frames_from_durations(durations, args.hop_ms)
    plans = convert_boundaries(args.times, args.hop_ms, frames)
    out = Path(args.out)
    write_boundary_file(plans, out)
    print(f"wrote {len(plans)} {args.unit} plans -> {out}")
    return 0


def cmd_benchmark_prepare(args) -> int:
    spec = ExtractionSpec(
        audio_manifest=args.pairs,  # the stimulus manifest is the audio source
        out_dir=args.out,
        model=args.model,
        layer=args.layer,
        hop_ms=args.hop_ms,
    )
    out = prepare_benchmark(args.pairs, spec)
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="unitgrid-adapter", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="audio manifest -> feature files + manifest")
    p.add_argument("--manifest", required=True, help="TSV of utt_id<TAB>audio_path")
    p.add_argument("--model", default="logmel", help="logmel[:n_mels] or hubert:<name>")
    p.add_argument("--layer", type=int, default=9)
    p.add_argument("--hop-ms", type=float, default=20.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p_bounds = sub.add_parser("boundaries", help="boundary conversion")
    bsub = p_bounds.add_subparsers(dest="subcommand", required=True)
    p = bsub.add_parser("convert", help="seconds -> frame-indexed boundary file")
    p.add_argument("--unit", choices=("phoneme", "syllable", "word"), required=True)
    p.add_argument("--times", required=True, help="TSV of utt_id<TAB>t1 t2 ... (seconds)")
    p.add_argument("--features-manifest", required=True, help="manifest naming the utterances")
    p.add_argument("--hop-ms", type=float, default=20.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_boundaries_convert)

    p_bench = sub.add_parser("benchmark", help="benchmark preparation")
    absub = p_bench.add_subparsers(dest="subcommand", required=True)
    p = absub.add_parser("prepare", help="paired stimulus audio -> evaluator manifest")
    p.add_argument("--pairs", required=True, help="JSONL of {pair_id, category, pos_audio, neg_audio}")
    p.add_argument("--model", default="logmel")
    p.add_argument("--layer", type=int, default=9)
    p.add_argument("--hop-ms", type=float, default=20.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_benchmark_prepare)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
