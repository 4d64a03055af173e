"""Command-line pipeline: align, eval, filter, synth, stats.

Exit codes: 0 success, 1 input or validation error, 2 infeasible
alignment. Letters are processed one per worker and outputs are merged
in input order, so runs are reproducible for any worker count.
"""

from __future__ import annotations

import argparse
import glob
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import report
from .aligner import (
    align_letter,
    alignment_content_hash,
    alignment_to_dict,
    read_alignment,
)
from .errors import (
    AlignmentInfeasibleError,
    FormatError,
    NumericallyInfeasibleError,
)
from .filtering import FilterSpec, filter_alignments, threshold_sweep, write_manifest
from .fsa import build_fsa, make_transcription
from .metrics import LineSet, aggregate, confidence_buckets
from .posteriors import (
    compression_stats,
    epsilon_compress,
    load_alphabet,
    load_letter,
    save_alphabet,
    save_matrix,
    write_letter_manifest,
)
from .synth import (
    alphabet_for,
    generate_posteriors,
    load_synth_spec,
    synth_metadata,
)

log = logging.getLogger("ctcalign")

DEFAULT_THETA = 0.99
WORKERS_ENV = "CTC_ALIGN_WORKERS"


def _align_one(manifest_path: str, transcription_path: str, theta: float) -> dict:
    bundle, alphabet = load_letter(manifest_path)
    raw = Path(transcription_path).read_text(encoding="utf-8")
    transcription = make_transcription(raw)
    fsa = build_fsa(transcription, alphabet)
    compressed = epsilon_compress(bundle, theta)
    result = align_letter(compressed, fsa)
    doc = alignment_to_dict(result)
    doc["_stats"] = {
        "lines": bundle.num_lines,
        "raw_steps": bundle.total_steps,
        "compressed_steps": compressed.steps,
        "ratio": compressed.compression_ratio,
    }
    return doc


def cmd_align(args) -> int:
    manifests = args.manifest
    transcriptions = args.transcription
    if len(transcriptions) != len(manifests):
        raise ValueError(
            f"{len(manifests)} manifests but {len(transcriptions)} transcriptions"
        )
    jobs = [(m, t, args.theta) for m, t in zip(manifests, transcriptions)]
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            docs = list(pool.map(_align_one, *zip(*jobs)))
    else:
        docs = [_align_one(*job) for job in jobs]

    out = Path(args.out)
    multi = len(docs) > 1 or out.is_dir() or out.suffix == ""
    if multi:
        out.mkdir(parents=True, exist_ok=True)
    for doc in docs:
        stats = doc.pop("_stats")
        log.info(
            "aligned %s: %d lines, %d -> %d steps (ratio %.2f), %.2fs",
            doc["letter_id"], stats["lines"], stats["raw_steps"],
            stats["compressed_steps"], stats["ratio"], doc["runtime_seconds"],
        )
        target = out / f"{doc['letter_id']}.json" if multi else out
        target.write_text(
            json.dumps(doc, ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )
    return 0


def _load_line_sets(paths):
    """Line sets from plain JSON line-set files or alignment outputs."""
    sets = []
    alignments = []
    for path in paths:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON ({exc})") from None
        for item in doc if isinstance(doc, list) else [doc]:
            if not isinstance(item, dict) or "lines" not in item:
                raise FormatError(f"{path}: expected objects with a 'lines' field")
            lines = item["lines"]
            if lines and isinstance(lines[0], dict):
                result = read_alignment(path)
                alignments.append(result)
                sets.append(
                    LineSet(result.letter_id, tuple(l.text for l in result.lines))
                )
            else:
                sets.append(LineSet(item["letter_id"], tuple(lines)))
    return sets, alignments


def cmd_eval(args) -> int:
    gt_sets, _ = _load_line_sets(args.gt)
    pred_sets, alignments = _load_line_sets(args.pred)
    result = aggregate(gt_sets, pred_sets, n=args.n)
    doc = result.to_dict()
    for name in ("line_accuracy", "cer", "wer", "cer_n"):
        if doc[name] is None:
            log.warning("%s is undefined for this input", name)

    buckets = None
    if alignments:
        buckets = confidence_buckets(gt_sets, alignments, num_buckets=args.buckets)
        doc["confidence_buckets"] = buckets

    payload = json.dumps(doc, ensure_ascii=False, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)

    if args.fig_dir:
        fig_dir = Path(args.fig_dir)
        fig_dir.mkdir(parents=True, exist_ok=True)
        if buckets:
            report.write_csv(
                buckets,
                ["bucket_low", "bucket_high", "line_accuracy", "count"],
                fig_dir / "confidence_buckets.csv",
            )
            report.render_confidence_curve(
                buckets, fig_dir / "confidence_curve.png"
            )
    return 0


def _parse_sweep(text: str):
    try:
        lo, hi, step = (float(part) for part in text.split(":"))
    except ValueError:
        raise ValueError(f"expected LO:HI:STEP, got {text!r}") from None
    if step <= 0 or hi < lo:
        raise ValueError(f"bad sweep range {text!r}")
    thresholds = []
    k = 0
    while (t := lo + k * step) <= hi + 1e-12:
        thresholds.append(round(t, 12))
        k += 1
    return thresholds


def cmd_filter(args) -> int:
    paths = []
    for pattern in args.alignments:
        matches = sorted(glob.glob(pattern))
        paths.extend(matches if matches else ([pattern] if os.path.exists(pattern) else []))
    if not paths:
        raise FormatError("no alignment files matched the given paths")

    results = []
    sources = []
    total = 0
    for path in paths:
        result = read_alignment(path)
        results.append(result)
        total += len(result.lines)
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        sources.append({"path": str(path), "sha256": alignment_content_hash(doc)})

    spec = FilterSpec(threshold=args.threshold, measure=args.measure)
    manifest = filter_alignments(
        results, spec, sources=sources, iteration=args.iteration
    )
    write_manifest(manifest, args.out)
    print(f"kept {len(manifest.entries)} of {total} lines "
          f"({spec.measure} > {spec.threshold})")

    if args.sweep:
        rows = threshold_sweep(results, _parse_sweep(args.sweep), measure=args.measure)
        print("threshold\tkept")
        for row in rows:
            print(f"{row['threshold']:g}\t{row['kept_count']}")
        if args.fig_dir:
            fig_dir = Path(args.fig_dir)
            fig_dir.mkdir(parents=True, exist_ok=True)
            report.write_csv(
                rows, ["threshold", "kept_count"], fig_dir / "threshold_sweep.csv"
            )
            report.render_threshold_sweep(rows, fig_dir / "threshold_sweep.png")
    return 0


def cmd_synth(args) -> int:
    spec, letter_id, alphabet_path = load_synth_spec(args.spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if alphabet_path:
        alphabet = load_alphabet(Path(args.spec).parent / alphabet_path)
    else:
        alphabet = alphabet_for(spec)
    save_alphabet(alphabet, out_dir / "alphabet.txt")

    bundle = generate_posteriors(spec, alphabet, letter_id=letter_id)
    entries = []
    for matrix in bundle.lines:
        name = f"{matrix.line_id}.ctcp"
        save_matrix(matrix.probs, out_dir / name)
        entries.append((matrix.line_id, name))
    write_letter_manifest(
        out_dir / f"{letter_id}.json", letter_id, "alphabet.txt", entries
    )
    (out_dir / f"{letter_id}.txt").write_text(
        spec.transcription.text + "\n", encoding="utf-8"
    )
    meta = synth_metadata(spec)
    meta["letter_id"] = letter_id
    (out_dir / "synth_meta.json").write_text(
        json.dumps(meta, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    log.info("wrote %d line matrices to %s", bundle.num_lines, out_dir)
    return 0


def cmd_stats(args) -> int:
    rows = []
    for manifest in args.manifest:
        bundle, _ = load_letter(manifest)
        compressed = epsilon_compress(bundle, args.theta)
        stats = compression_stats(bundle, compressed)
        rows.append(
            {
                "letter_id": bundle.letter_id,
                "lines": bundle.num_lines,
                "avg_line_steps": stats.avg_line_steps,
                "raw_steps": stats.raw_letter_steps,
                "compressed_steps": stats.compressed_letter_steps,
                "ratio": round(stats.ratio, 4),
            }
        )
    fields = ["letter_id", "lines", "avg_line_steps", "raw_steps",
              "compressed_steps", "ratio"]
    if args.out:
        report.write_csv(rows, fields, args.out)
    else:
        print("\t".join(fields))
        for row in rows:
            print("\t".join(str(row[f]) for f in fields))
    if args.fig_dir:
        fig_dir = Path(args.fig_dir)
        fig_dir.mkdir(parents=True, exist_ok=True)
        report.render_compression_report(rows, fig_dir / "compression.png")
    return 0


def _default_workers() -> int:
    value = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctcalign",
        description="Force-align letter transcriptions to CTC posteriors",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="align letters to their transcriptions")
    p.add_argument("manifest", nargs="+", help="letter manifest JSON files")
    p.add_argument("--transcription", nargs="+", required=True,
                   help="one transcription text file per manifest")
    p.add_argument("--out", required=True,
                   help="output JSON file (single letter) or directory")
    p.add_argument("--theta", type=float, default=DEFAULT_THETA,
                   help="epsilon-compression threshold (default %(default)s)")
    p.add_argument("--workers", type=int, default=_default_workers(),
                   help=f"parallel letters (default ${WORKERS_ENV} or 1)")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("--gt", nargs="+", required=True, help="ground-truth line sets")
    p.add_argument("--pred", nargs="+", required=True,
                   help="predicted line sets or alignment outputs")
    p.add_argument("-n", type=int, default=6, help="boundary window width")
    p.add_argument("--buckets", type=int, default=10,
                   help="confidence buckets (alignment preds only)")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--fig-dir", help="directory for figures and CSV tables")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("filter", help="build a training manifest from alignments")
    p.add_argument("alignments", nargs="+", help="alignment JSON paths or globs")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--measure", choices=["gamma6", "gamma"], default="gamma6")
    p.add_argument("--out", required=True, help="manifest JSON Lines path")
    p.add_argument("--sweep", help="threshold sweep as LO:HI:STEP")
    p.add_argument("--iteration", type=int, default=0)
    p.add_argument("--fig-dir", help="directory for figures and CSV tables")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("synth", help="generate a synthetic letter")
    p.add_argument("--spec", required=True, help="synthesis spec JSON")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("stats", help="compression statistics per letter")
    p.add_argument("manifest", nargs="+", help="letter manifest JSON files")
    p.add_argument("--theta", type=float, default=DEFAULT_THETA)
    p.add_argument("--out", help="CSV output path (default: table to stdout)")
    p.add_argument("--fig-dir", help="directory for figures")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (AlignmentInfeasibleError, NumericallyInfeasibleError) as exc:
        log.error("%s", exc)
        return 2
    except (FormatError, OSError, ValueError, KeyError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
