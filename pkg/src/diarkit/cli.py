"""Command line entry points.

`diarkit diarize` and `diarkit verify` drive full JSON-configured runs;
the remaining subcommands expose single stages for debugging and for
wiring into shell pipelines.

Exit codes: 0 on success, 1 when per-recording (or per-system) failures
were recorded, 2 on configuration or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .archives import (
    read_embeddings,
    read_lab,
    read_labels,
    read_posteriors,
    read_rttm,
    read_scores,
    read_trials,
    write_embeddings,
    write_lab,
    write_labels,
    write_rttm,
)
from .clustering import AhcConfig, _dense_labels, ahc
from .errors import ConfigurationError, DiarkitError, UsageError
from .metrics import der, eer, min_dcf
from .overlap import assign_overlaps, merge_overlaps
from .pipeline import (
    load_diarize_config,
    load_verify_config,
    run_diarization,
    run_verification,
)
from .records import EmbeddingSequence
from .timeline import Diarization, Segment
from .vadfuse import FusionConfig, fuse_posteriors, posterior_to_segments
from .vbhmm import VbConfig, vb_resegment
from .verification import Cohort, speaker_average_cohort

_WINDOW_TOLERANCE = 6e-4


def _cmd_diarize(args: argparse.Namespace) -> int:
    config = load_diarize_config(args.config)
    summary = run_diarization(config)
    for rec_id, entry in summary["recordings"].items():
        if entry["error"] is not None:
            print(f"{rec_id}: FAILED: {entry['error']}", file=sys.stderr)
        else:
            print(f"{rec_id}: {entry['num_speakers']} speakers -> {entry['rttm']}")
    return 1 if summary["failed"] else 0


def _cmd_verify(args: argparse.Namespace) -> int:
    config = load_verify_config(args.config)
    summary = run_verification(config)
    for name, entry in summary["systems"].items():
        if entry.get("error") is not None:
            print(f"{name}: FAILED: {entry['error']}", file=sys.stderr)
        elif "metrics" in entry:
            m = entry["metrics"]
            print(f"{name}: eer={m['eer']:.6f} min_dcf={m['min_dcf']:.6f}")
        else:
            print(f"{name}: scored (no labels, no metrics)")
    if "fusion" in summary and "metrics" in summary["fusion"]:
        m = summary["fusion"]["metrics"]
        print(f"fusion: eer={m['eer']:.6f} min_dcf={m['min_dcf']:.6f}")
    return 1 if summary["failed"] else 0


def _cmd_vad_fuse(args: argparse.Namespace) -> int:
    streams = [read_posteriors(p) for p in args.streams]
    fused = fuse_posteriors(streams, args.weights)
    config = FusionConfig(
        threshold=args.threshold, min_segment=args.min_segment, min_gap=args.min_gap
    )
    speech = posterior_to_segments(fused, config)
    write_lab(speech, args.out)
    print(f"{len(speech)} segments, {speech.duration:.3f}s speech -> {args.out}")
    return 0


def _cmd_cluster(args: argparse.Namespace) -> int:
    seq = read_embeddings(args.embeddings).normalized()
    labels = ahc(seq, AhcConfig(threshold=args.threshold))
    write_labels((seq.segments, labels), args.out)
    print(f"{int(labels.max()) + 1 if len(labels) else 0} clusters -> {args.out}")
    return 0


def _load_init_labels(seq: EmbeddingSequence, path: str) -> np.ndarray:
    rows = read_labels(path)
    if len(rows) != len(seq):
        raise UsageError(
            f"{path}: {len(rows)} labels for an archive of {len(seq)} embeddings"
        )
    for i, ((seg, _), ref) in enumerate(zip(rows, seq.segments)):
        if (
            abs(seg.onset - ref.onset) > _WINDOW_TOLERANCE
            or abs(seg.duration - ref.duration) > _WINDOW_TOLERANCE
        ):
            raise UsageError(
                f"{path}: label {i} interval [{seg.onset:.3f}, {seg.end:.3f}) does not "
                f"match archive window [{ref.onset:.3f}, {ref.end:.3f})"
            )
    return _dense_labels(np.array([label for _, label in rows], dtype=np.int64))


def _cmd_resegment(args: argparse.Namespace) -> int:
    seq = read_embeddings(args.embeddings).normalized()
    labels = _load_init_labels(seq, args.init)
    cohort = None
    if args.cohort:
        cohort = Cohort(read_embeddings(args.cohort).vectors)
    config = VbConfig(
        fa=args.fa,
        fb=args.fb,
        fc=args.fc,
        loop_prob=args.loop_prob,
        max_iters=args.max_iters,
        elbo_tol=args.elbo_tol,
        min_occupancy=args.min_occupancy,
        asnorm=args.asnorm,
        cohort=cohort,
        cohort_top_k=args.topk,
        mu_sigma_literal=args.mu_sigma_literal,
    )
    new_labels, diag = vb_resegment(labels, seq, config)
    write_labels((seq.segments, new_labels), args.out)
    for message in diag.messages:
        print(message, file=sys.stderr)
    print(
        f"{diag.initial_speakers} -> {diag.final_speakers} speakers "
        f"in {diag.iterations} iterations -> {args.out}"
    )
    return 0


def _cmd_overlap_assign(args: argparse.Namespace) -> int:
    overlaps = read_lab(args.overlaps)
    diarizations = read_rttm(args.diar)
    if len(diarizations) != 1:
        raise UsageError(
            f"{args.diar}: expected exactly one recording, found {len(diarizations)}"
        )
    diarization = diarizations[0]
    assignments, notes = assign_overlaps(overlaps, diarization)
    merged = merge_overlaps(diarization, assignments)
    write_rttm(merged, args.out)
    for note in notes:
        print(note, file=sys.stderr)
    print(f"{len(assignments)} overlap regions assigned -> {args.out}")
    return 0


def _cmd_eval_der(args: argparse.Namespace) -> int:
    refs = {d.recording_id: d for d in read_rttm(args.ref)}
    hyps = {d.recording_id: d for d in read_rttm(args.hyp)}
    if not refs:
        raise UsageError(f"{args.ref}: no reference recordings")
    extra = sorted(set(hyps) - set(refs))
    if extra:
        raise UsageError(f"hypothesis recordings missing from reference: {extra}")
    uem = read_lab(args.uem) if args.uem else None
    results = {}
    for rec_id, ref in refs.items():
        hyp = hyps.get(rec_id, Diarization(rec_id))
        results[rec_id] = der(
            ref,
            hyp,
            collar=args.collar,
            uem=uem,
            scored_overlap=not args.ignore_overlap,
        )
    if len(results) == 1:
        rec_id, breakdown = next(iter(results.items()))
        output = {"recording_id": rec_id, **breakdown.to_dict()}
    else:
        total = sum(b.scored_speech for b in results.values())
        overall = {
            key: sum(getattr(b, key) * b.scored_speech for b in results.values()) / total
            for key in ("miss", "false_alarm", "confusion", "der")
        }
        # macro average: every recording's JER counts once
        overall["jer"] = sum(b.jer for b in results.values()) / len(results)
        overall["scored_speech"] = total
        output = {
            "recordings": {rec_id: b.to_dict() for rec_id, b in results.items()},
            "overall": overall,
        }
    print(json.dumps(output, indent=2))
    return 0


def _cmd_eval_ver(args: argparse.Namespace) -> int:
    scores = read_scores(args.scores)
    trials = read_trials(args.trials)
    if any(t.label is None for t in trials):
        raise UsageError(f"{args.trials}: every trial needs a 0/1 label")
    score_map: dict[tuple[str, str], float] = {}
    for enroll, test, value in scores:
        if (enroll, test) in score_map:
            raise UsageError(f"{args.scores}: duplicate trial {enroll} {test}")
        score_map[(enroll, test)] = value
    try:
        values = np.array([score_map[(t.enroll_id, t.test_id)] for t in trials])
    except KeyError as exc:
        raise UsageError(f"{args.scores}: no score for trial {exc.args[0]}") from None
    labels = np.array([t.label for t in trials])
    targets = values[labels == 1]
    nontargets = values[labels == 0]
    if targets.size == 0 or nontargets.size == 0:
        raise UsageError("need at least one target and one non-target trial")
    output = {
        "eer": eer(targets, nontargets),
        "min_dcf": min_dcf(targets, nontargets, p_target=args.p_target),
        "p_target": args.p_target,
        "num_target": int(targets.size),
        "num_nontarget": int(nontargets.size),
    }
    print(json.dumps(output, indent=2))
    return 0


def _cmd_make_cohort(args: argparse.Namespace) -> int:
    directory = Path(args.embeddings_dir)
    files = sorted(directory.glob("*.emb"))
    if not files:
        raise UsageError(f"{directory}: no .emb archives found")
    per_speaker = {f.stem: read_embeddings(f).vectors for f in files}
    cohort = speaker_average_cohort(
        per_speaker,
        max_per_speaker=args.max_per_speaker,
        rng=np.random.default_rng(args.seed),
    )
    segments = tuple(Segment(float(i), 1.0) for i in range(len(cohort)))
    write_embeddings(EmbeddingSequence("cohort", segments, cohort.vectors), args.out)
    print(f"{len(cohort)} cohort speakers -> {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diarkit",
        description="Speaker diarization and verification scoring toolkit.",
    )
    parser.add_argument("--version", action="version", version=f"diarkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("diarize", help="run the full diarization pipeline from a JSON config")
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.set_defaults(func=_cmd_diarize)

    p = sub.add_parser("verify", help="run trial scoring, calibration and fusion from a JSON config")
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("vad-fuse", help="fuse posterior streams and emit speech segments")
    p.add_argument("--streams", nargs="+", required=True, help="posterior stream files")
    p.add_argument("--weights", nargs="+", type=float, default=None)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--min-segment", type=float, default=0.10)
    p.add_argument("--min-gap", type=float, default=0.10)
    p.add_argument("--out", required=True, help="output .lab file")
    p.set_defaults(func=_cmd_vad_fuse)

    p = sub.add_parser("cluster", help="agglomerative clustering of an embedding archive")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--threshold", type=float, default=0.0, help="similarity stopping threshold")
    p.add_argument("--out", required=True, help="output labels file")
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("resegment", help="variational HMM re-clustering of window labels")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--init", required=True, help="initial labels file")
    p.add_argument("--fa", type=float, default=0.3, help="acoustic scaling factor")
    p.add_argument("--fb", type=float, default=17.0, help="speaker prior tempering factor")
    p.add_argument("--fc", type=float, default=1.0, help="embedding scaling factor")
    p.add_argument("--loop-prob", type=float, default=0.99)
    p.add_argument("--max-iters", type=int, default=20)
    p.add_argument("--elbo-tol", type=float, default=1e-4)
    p.add_argument("--min-occupancy", type=float, default=1.0)
    p.add_argument("--asnorm", action="store_true", help="normalize emission scores against a cohort")
    p.add_argument("--cohort", default=None, help="cohort embedding archive (with --asnorm)")
    p.add_argument("--topk", type=int, default=300)
    p.add_argument(
        "--mu-sigma-literal",
        action="store_true",
        help="derive normalization stats from the literal speaker components",
    )
    p.add_argument("--out", required=True, help="output labels file")
    p.set_defaults(func=_cmd_resegment)

    p = sub.add_parser("overlap-assign", help="assign overlap regions to nearest speakers")
    p.add_argument("--overlaps", required=True, help="overlap regions .lab file")
    p.add_argument("--diar", required=True, help="single-recording RTTM")
    p.add_argument("--out", required=True, help="output RTTM")
    p.set_defaults(func=_cmd_overlap_assign)

    p = sub.add_parser("eval-der", help="diarization error rate of hyp vs ref RTTM")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True)
    p.add_argument("--collar", type=float, default=0.25)
    p.add_argument("--uem", default=None, help="scoring region .lab file")
    p.add_argument(
        "--ignore-overlap",
        action="store_true",
        help="exclude regions where the reference has overlapped speech",
    )
    p.set_defaults(func=_cmd_eval_der)

    p = sub.add_parser("eval-ver", help="EER and minDCF of a score file against labelled trials")
    p.add_argument("--scores", required=True)
    p.add_argument("--trials", required=True)
    p.add_argument("--p-target", type=float, default=0.05)
    p.set_defaults(func=_cmd_eval_ver)

    p = sub.add_parser("make-cohort", help="build a speaker-averaged cohort archive")
    p.add_argument(
        "--embeddings-dir",
        required=True,
        help="directory of per-speaker .emb archives (one file per speaker)",
    )
    p.add_argument("--max-per-speaker", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_make_cohort)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DiarkitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
