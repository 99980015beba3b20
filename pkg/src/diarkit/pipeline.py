"""JSON-configured end-to-end runs.

Diarization runs chain posterior fusion, sliding-window validation
against a precomputed embedding archive, agglomerative clustering,
variational re-segmentation, turn reconstruction and optional overlap
assignment, then write RTTM files, a summary report, a manifest and
report figures. Verification runs score trial lists through cosine
scoring, adaptive normalization, calibration and fusion.

Config files are strict: unknown keys are rejected so typos cannot
silently change behaviour. Relative paths resolve against the config
file's directory.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import __version__
from .archives import (
    read_embeddings,
    read_posteriors,
    read_trials,
    write_rttm,
    write_scores,
)
from .clustering import AhcConfig, WindowingConfig, ahc, make_windows, segment_windows
from .errors import ConfigurationError, DiarkitError, UsageError
from .metrics import eer, min_dcf
from .overlap import assign_overlaps, merge_overlaps
from .records import EmbeddingSequence, Trial
from .timeline import Diarization, Segment, Timeline
from .vadfuse import FusionConfig, fuse_posteriors, posterior_to_segments
from .vbhmm import VbConfig, vb_resegment
from .verification import (
    CalibrationModel,
    Cohort,
    CohortStats,
    QMF_FEATURE_NAMES,
    UtteranceMeta,
    apply_calibration,
    as_norm,
    cohort_stats,
    cosine_score,
    fit_calibration,
    fuse,
    qmf_features,
)

__all__ = [
    "RecordingJob",
    "DiarizeConfig",
    "VerifySystem",
    "VerifyConfig",
    "load_diarize_config",
    "load_verify_config",
    "turns_from_window_labels",
    "run_diarization",
    "run_verification",
]

# Archive timestamps are quantized to 1 ms, so half a quantum plus slack
# separates "same window" from "different windowing".
_WINDOW_TOLERANCE = 6e-4


def _strict_keys(data: Mapping[str, Any], allowed: Sequence[str], context: str) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigurationError(f"{context}: unknown key(s) {unknown}")


def _require(data: Mapping[str, Any], key: str, context: str) -> Any:
    if key not in data:
        raise ConfigurationError(f"{context}: missing required key {key!r}")
    return data[key]


def _typed(value: Any, kind: type, context: str) -> Any:
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or (kind is not bool and isinstance(value, bool)):
        raise ConfigurationError(f"{context}: expected {kind.__name__}, got {value!r}")
    return value


@dataclass(frozen=True)
class RecordingJob:
    """Input files for one recording."""

    recording_id: str
    vad_streams: tuple[Path, ...]
    embeddings: Path
    osd_streams: tuple[Path, ...] = ()


@dataclass(frozen=True)
class DiarizeConfig:
    output_dir: Path
    recordings: tuple[RecordingJob, ...]
    windowing: WindowingConfig = WindowingConfig()
    vad: FusionConfig = FusionConfig()
    vad_weights: tuple[float, ...] | None = None
    osd: FusionConfig = FusionConfig()
    osd_weights: tuple[float, ...] | None = None
    ahc: AhcConfig = AhcConfig()
    vb: VbConfig = VbConfig()
    vb_enabled: bool = True
    figures: bool = True
    workers: int = 1
    seed: int = 0
    config_path: Path | None = None

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")
        ids = [job.recording_id for job in self.recordings]
        if len(set(ids)) != len(ids):
            raise ConfigurationError("recording ids must be unique")


def _fusion_section(
    data: Mapping[str, Any], context: str
) -> tuple[FusionConfig, tuple[float, ...] | None]:
    _strict_keys(data, ["threshold", "min_segment", "min_gap", "weights"], context)
    cfg = FusionConfig(
        threshold=_typed(data.get("threshold", 0.5), float, f"{context}.threshold"),
        min_segment=_typed(data.get("min_segment", 0.10), float, f"{context}.min_segment"),
        min_gap=_typed(data.get("min_gap", 0.10), float, f"{context}.min_gap"),
    )
    weights = data.get("weights")
    if weights is not None:
        if not isinstance(weights, list) or not weights:
            raise ConfigurationError(f"{context}.weights: expected a non-empty list")
        weights = tuple(_typed(w, float, f"{context}.weights") for w in weights)
    return cfg, weights


def _load_cohort(path: Path) -> Cohort:
    try:
        seq = read_embeddings(path)
        return Cohort(seq.vectors)
    except (DiarkitError, OSError, ValueError) as exc:
        raise ConfigurationError(f"cannot load cohort {path}: {exc}") from exc


def load_diarize_config(path: str | Path) -> DiarizeConfig:
    """Parse and validate a diarization run config; all keys are checked."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError("config root must be a JSON object")
    base = path.parent
    _strict_keys(
        data,
        [
            "output_dir",
            "recordings",
            "windowing",
            "vad",
            "osd",
            "ahc",
            "vb",
            "figures",
            "workers",
            "seed",
        ],
        "config",
    )

    win_data = data.get("windowing", {})
    _strict_keys(win_data, ["window", "step"], "windowing")
    windowing = WindowingConfig(
        window=_typed(win_data.get("window", 1.5), float, "windowing.window"),
        step=_typed(win_data.get("step", 0.25), float, "windowing.step"),
    )

    vad_cfg, vad_weights = _fusion_section(data.get("vad", {}), "vad")
    osd_cfg, osd_weights = _fusion_section(data.get("osd", {}), "osd")

    ahc_data = data.get("ahc", {})
    _strict_keys(ahc_data, ["threshold"], "ahc")
    ahc_cfg = AhcConfig(
        threshold=_typed(ahc_data.get("threshold", 0.0), float, "ahc.threshold")
    )

    vb_data = data.get("vb", {})
    _strict_keys(
        vb_data,
        [
            "enabled",
            "fa",
            "fb",
            "fc",
            "loop_prob",
            "max_iters",
            "elbo_tol",
            "min_occupancy",
            "asnorm",
            "cohort",
            "cohort_top_k",
            "mu_sigma_literal",
        ],
        "vb",
    )
    vb_enabled = _typed(vb_data.get("enabled", True), bool, "vb.enabled")
    cohort = None
    if vb_data.get("cohort") is not None:
        cohort = _load_cohort(base / _typed(vb_data["cohort"], str, "vb.cohort"))
    vb_cfg = VbConfig(
        fa=_typed(vb_data.get("fa", 0.3), float, "vb.fa"),
        fb=_typed(vb_data.get("fb", 17.0), float, "vb.fb"),
        fc=_typed(vb_data.get("fc", 1.0), float, "vb.fc"),
        loop_prob=_typed(vb_data.get("loop_prob", 0.99), float, "vb.loop_prob"),
        max_iters=_typed(vb_data.get("max_iters", 20), int, "vb.max_iters"),
        elbo_tol=_typed(vb_data.get("elbo_tol", 1e-4), float, "vb.elbo_tol"),
        min_occupancy=_typed(vb_data.get("min_occupancy", 1.0), float, "vb.min_occupancy"),
        asnorm=_typed(vb_data.get("asnorm", False), bool, "vb.asnorm"),
        cohort=cohort,
        cohort_top_k=_typed(vb_data.get("cohort_top_k", 300), int, "vb.cohort_top_k"),
        mu_sigma_literal=_typed(
            vb_data.get("mu_sigma_literal", False), bool, "vb.mu_sigma_literal"
        ),
    )

    recordings_data = _require(data, "recordings", "config")
    if not isinstance(recordings_data, list) or not recordings_data:
        raise ConfigurationError("config.recordings must be a non-empty list")
    jobs = []
    for i, rec in enumerate(recordings_data):
        context = f"recordings[{i}]"
        if not isinstance(rec, dict):
            raise ConfigurationError(f"{context}: expected an object")
        _strict_keys(rec, ["recording_id", "vad_streams", "embeddings", "osd_streams"], context)
        rec_id = _typed(_require(rec, "recording_id", context), str, f"{context}.recording_id")
        streams = _require(rec, "vad_streams", context)
        if not isinstance(streams, list) or not streams:
            raise ConfigurationError(f"{context}.vad_streams must be a non-empty list")
        vad_streams = tuple(
            base / _typed(s, str, f"{context}.vad_streams") for s in streams
        )
        embeddings = base / _typed(
            _require(rec, "embeddings", context), str, f"{context}.embeddings"
        )
        osd_list = rec.get("osd_streams", [])
        if not isinstance(osd_list, list):
            raise ConfigurationError(f"{context}.osd_streams must be a list")
        osd_streams = tuple(base / _typed(s, str, f"{context}.osd_streams") for s in osd_list)
        jobs.append(RecordingJob(rec_id, vad_streams, embeddings, osd_streams))

    return DiarizeConfig(
        output_dir=base / _typed(_require(data, "output_dir", "config"), str, "output_dir"),
        recordings=tuple(jobs),
        windowing=windowing,
        vad=vad_cfg,
        vad_weights=vad_weights,
        osd=osd_cfg,
        osd_weights=osd_weights,
        ahc=ahc_cfg,
        vb=vb_cfg,
        vb_enabled=vb_enabled,
        figures=_typed(data.get("figures", True), bool, "figures"),
        workers=_typed(data.get("workers", 1), int, "workers"),
        seed=_typed(data.get("seed", 0), int, "seed"),
        config_path=path,
    )


# ---------------------------------------------------------------------------
# Diarization run


def turns_from_window_labels(
    speech: Timeline,
    windowing: WindowingConfig,
    labels: np.ndarray,
    speaker_prefix: str = "spk",
) -> list[tuple[Segment, str]]:
    """Reconstruct speaker turns from per-window labels.

    Within each speech segment a turn boundary is placed at the midpoint
    between the centers of consecutive windows whose labels differ,
    clipped into the segment; turns therefore cover each speech segment
    exactly.
    """
    labels = np.asarray(labels).reshape(-1)
    turns: list[tuple[Segment, str]] = []
    idx = 0
    for seg in speech:
        wins = segment_windows(seg, windowing)
        k = len(wins)
        seg_labels = labels[idx : idx + k]
        if len(seg_labels) != k:
            raise UsageError(
                f"{len(labels)} labels do not cover the speech windowing"
            )
        idx += k
        if k == 0:
            continue
        centers = [w.middle for w in wins]
        start = seg.onset
        for i in range(1, k):
            if seg_labels[i] == seg_labels[i - 1]:
                continue
            boundary = (centers[i - 1] + centers[i]) / 2.0
            boundary = min(max(boundary, seg.onset), seg.end)
            if boundary > start:
                turns.append(
                    (Segment(start, boundary - start), f"{speaker_prefix}{seg_labels[i - 1]:02d}")
                )
                start = boundary
        if seg.end > start:
            turns.append(
                (Segment(start, seg.end - start), f"{speaker_prefix}{seg_labels[k - 1]:02d}")
            )
    if idx != labels.shape[0]:
        raise UsageError(
            f"{labels.shape[0]} labels for {idx} windows over the speech timeline"
        )
    return turns


def _validate_windows(seq: EmbeddingSequence, windows: list[Segment]) -> None:
    if len(seq) != len(windows):
        raise UsageError(
            f"embedding archive has {len(seq)} records but the speech timeline "
            f"yields {len(windows)} windows"
        )
    for i, (seg, win) in enumerate(zip(seq.segments, windows)):
        if (
            abs(seg.onset - win.onset) > _WINDOW_TOLERANCE
            or abs(seg.duration - win.duration) > _WINDOW_TOLERANCE
        ):
            raise UsageError(
                f"window {i} mismatch: archive [{seg.onset:.3f}, {seg.end:.3f}) vs "
                f"expected [{win.onset:.3f}, {win.end:.3f})"
            )


@dataclass
class _RecordingResult:
    recording_id: str
    error: str | None = None
    diarization: Diarization | None = None
    speech: Timeline | None = None
    timings: dict[str, float] = field(default_factory=dict)
    num_windows: int = 0
    num_speakers_initial: int = 0
    num_speakers: int = 0
    vb_iterations: int = 0
    diagnostics: list[str] = field(default_factory=list)


def _process_recording(job: RecordingJob, config: DiarizeConfig) -> _RecordingResult:
    result = _RecordingResult(recording_id=job.recording_id)
    try:
        clock = time.perf_counter
        t0 = clock()
        streams = [read_posteriors(p) for p in job.vad_streams]
        fused = fuse_posteriors(streams, config.vad_weights)
        speech = posterior_to_segments(fused, config.vad)
        result.speech = speech
        result.timings["vad"] = clock() - t0

        if not speech:
            result.diarization = Diarization(job.recording_id)
            result.diagnostics.append("no speech detected")
            return result

        t0 = clock()
        windows = make_windows(speech, config.windowing)
        seq = read_embeddings(job.embeddings)
        seq = EmbeddingSequence(job.recording_id, seq.segments, seq.vectors)
        _validate_windows(seq, windows)
        seq = seq.normalized()
        result.num_windows = len(windows)
        result.timings["embeddings"] = clock() - t0

        t0 = clock()
        labels = ahc(seq, config.ahc)
        result.num_speakers_initial = int(labels.max()) + 1
        result.timings["ahc"] = clock() - t0

        if config.vb_enabled:
            t0 = clock()
            labels, diag = vb_resegment(labels, seq, config.vb)
            result.vb_iterations = diag.iterations
            result.diagnostics.extend(diag.messages)
            result.timings["vb"] = clock() - t0
        result.num_speakers = int(labels.max()) + 1

        t0 = clock()
        turns = turns_from_window_labels(speech, config.windowing, labels)
        diarization = Diarization(job.recording_id, turns)
        if job.osd_streams:
            osd_streams = [read_posteriors(p) for p in job.osd_streams]
            overlap_regions = posterior_to_segments(
                fuse_posteriors(osd_streams, config.osd_weights), config.osd
            ).crop(speech)
            assignments, notes = assign_overlaps(overlap_regions, diarization)
            result.diagnostics.extend(notes)
            diarization = merge_overlaps(diarization, assignments)
        result.diarization = diarization
        result.timings["turns"] = clock() - t0
    except (DiarkitError, OSError, ValueError) as exc:
        result.error = str(exc)
    return result


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _manifest(config_path: Path | None, inputs: Sequence[Path]) -> dict:
    digests = {}
    for p in sorted(set(map(Path, inputs))):
        digests[str(p)] = _sha256(p) if p.is_file() else "missing"
    return {
        "package": "diarkit",
        "version": __version__,
        "config": str(config_path) if config_path else None,
        "config_sha256": _sha256(config_path) if config_path and config_path.is_file() else None,
        "inputs": digests,
    }


def run_diarization(config: DiarizeConfig) -> dict:
    """Execute a diarization run and write all outputs.

    Per-recording failures are recorded in the summary and do not stop the
    run. Returns the summary dictionary (also written as summary.json).
    """
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if config.workers > 1 and len(config.recordings) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_process_recording, config.recordings, [config] * len(config.recordings)))
    else:
        results = [_process_recording(job, config) for job in config.recordings]

    summary: dict[str, Any] = {"output_dir": str(out_dir), "recordings": {}, "failed": []}
    ordered: list[Diarization] = []
    for job, result in zip(config.recordings, results):
        entry: dict[str, Any] = {
            "error": result.error,
            "timings": result.timings,
            "num_windows": result.num_windows,
            "num_speakers_initial": result.num_speakers_initial,
            "num_speakers": result.num_speakers,
            "vb_iterations": result.vb_iterations,
            "diagnostics": result.diagnostics,
        }
        if result.error is None and result.diarization is not None:
            rttm_path = out_dir / f"{job.recording_id}.rttm"
            write_rttm(result.diarization, rttm_path)
            entry["rttm"] = str(rttm_path)
            entry["speech_duration"] = result.speech.duration if result.speech else 0.0
            ordered.append(result.diarization)
        else:
            summary["failed"].append(job.recording_id)
        summary["recordings"][job.recording_id] = entry

    write_rttm(ordered, out_dir / "all.rttm")

    if config.figures:
        from .report import render_diarization, render_run_summary

        fig_dir = out_dir / "figures"
        fig_dir.mkdir(exist_ok=True)
        for result in results:
            if result.error is None and result.diarization is not None:
                render_diarization(
                    result.diarization,
                    fig_dir / f"{result.recording_id}.png",
                    speech=result.speech,
                )
        render_run_summary(summary["recordings"], fig_dir / "summary.png")

    inputs: list[Path] = []
    for job in config.recordings:
        inputs.extend(job.vad_streams)
        inputs.append(job.embeddings)
        inputs.extend(job.osd_streams)
    (out_dir / "manifest.json").write_text(
        json.dumps(_manifest(config.config_path, inputs), indent=2) + "\n"
    )
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary


# ---------------------------------------------------------------------------
# Verification run


@dataclass(frozen=True)
class VerifySystem:
    name: str
    embeddings_dir: Path
    cohort: Path
    top_k: int = 300
    weight: float = 1.0
    calibration_mode: str = "identity"  # identity | model | fit
    calibration_path: Path | None = None
    dev_trials: Path | None = None

    def __post_init__(self) -> None:
        if self.calibration_mode not in ("identity", "model", "fit"):
            raise ConfigurationError(
                f"calibration mode must be identity, model or fit, got {self.calibration_mode!r}"
            )
        if self.calibration_mode == "model" and self.calibration_path is None:
            raise ConfigurationError(f"system {self.name!r}: calibration model path missing")
        if self.calibration_mode == "fit" and self.dev_trials is None:
            raise ConfigurationError(
                f"system {self.name!r}: fit calibration needs labelled dev trials"
            )
        if self.weight < 0:
            raise ConfigurationError(f"system {self.name!r}: weight must be >= 0")
        if self.top_k < 1:
            raise ConfigurationError(f"system {self.name!r}: top_k must be >= 1")


@dataclass(frozen=True)
class VerifyConfig:
    output_dir: Path
    trials: Path
    systems: tuple[VerifySystem, ...]
    p_target: float = 0.05
    fusion_enabled: bool = True
    figures: bool = True
    seed: int = 0
    config_path: Path | None = None

    def __post_init__(self) -> None:
        if not self.systems:
            raise ConfigurationError("config.systems must be a non-empty list")
        names = [s.name for s in self.systems]
        if len(set(names)) != len(names):
            raise ConfigurationError("system names must be unique")
        if not (0.0 < self.p_target < 1.0):
            raise ConfigurationError(f"p_target must be in (0, 1), got {self.p_target!r}")


def load_verify_config(path: str | Path) -> VerifyConfig:
    """Parse and validate a verification run config; all keys are checked."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError("config root must be a JSON object")
    base = path.parent
    _strict_keys(
        data,
        ["output_dir", "trials", "systems", "p_target", "fusion", "figures", "seed"],
        "config",
    )
    fusion_data = data.get("fusion", {})
    _strict_keys(fusion_data, ["enabled"], "fusion")
    systems_data = _require(data, "systems", "config")
    if not isinstance(systems_data, list) or not systems_data:
        raise ConfigurationError("config.systems must be a non-empty list")
    systems = []
    for i, sys_data in enumerate(systems_data):
        context = f"systems[{i}]"
        if not isinstance(sys_data, dict):
            raise ConfigurationError(f"{context}: expected an object")
        _strict_keys(
            sys_data,
            ["name", "embeddings_dir", "cohort", "top_k", "weight", "calibration"],
            context,
        )
        cal_data = sys_data.get("calibration", {"mode": "identity"})
        _strict_keys(cal_data, ["mode", "path", "dev_trials"], f"{context}.calibration")
        mode = _typed(cal_data.get("mode", "identity"), str, f"{context}.calibration.mode")
        cal_path = cal_data.get("path")
        dev_trials = cal_data.get("dev_trials")
        systems.append(
            VerifySystem(
                name=_typed(_require(sys_data, "name", context), str, f"{context}.name"),
                embeddings_dir=base
                / _typed(_require(sys_data, "embeddings_dir", context), str, f"{context}.embeddings_dir"),
                cohort=base / _typed(_require(sys_data, "cohort", context), str, f"{context}.cohort"),
                top_k=_typed(sys_data.get("top_k", 300), int, f"{context}.top_k"),
                weight=_typed(sys_data.get("weight", 1.0), float, f"{context}.weight"),
                calibration_mode=mode,
                calibration_path=(base / _typed(cal_path, str, "calibration.path"))
                if cal_path is not None
                else None,
                dev_trials=(base / _typed(dev_trials, str, "calibration.dev_trials"))
                if dev_trials is not None
                else None,
            )
        )
    return VerifyConfig(
        output_dir=base / _typed(_require(data, "output_dir", "config"), str, "output_dir"),
        trials=base / _typed(_require(data, "trials", "config"), str, "trials"),
        systems=tuple(systems),
        p_target=_typed(data.get("p_target", 0.05), float, "p_target"),
        fusion_enabled=_typed(fusion_data.get("enabled", True), bool, "fusion.enabled"),
        figures=_typed(data.get("figures", True), bool, "figures"),
        seed=_typed(data.get("seed", 0), int, "seed"),
        config_path=path,
    )


class _UtteranceStore:
    """Lazily loads per-utterance embedding archives from one directory."""

    def __init__(self, directory: Path, cohort: Cohort, top_k: int):
        self.directory = directory
        self.cohort = cohort
        self.top_k = top_k
        self._vectors: dict[str, np.ndarray] = {}
        self._meta: dict[str, UtteranceMeta] = {}
        self._stats: dict[str, CohortStats] = {}

    def _load(self, utt_id: str) -> None:
        if utt_id in self._vectors:
            return
        path = self.directory / f"{utt_id}.emb"
        if not path.is_file():
            raise UsageError(f"missing utterance embedding {path}")
        seq = read_embeddings(path)
        if len(seq) == 0:
            raise UsageError(f"utterance archive {path} holds no records")
        mean = seq.vectors.mean(axis=0)
        norm = np.linalg.norm(mean)
        if norm == 0.0:
            raise UsageError(f"utterance archive {path} averages to a zero vector")
        self._vectors[utt_id] = mean / norm
        self._meta[utt_id] = UtteranceMeta(
            utt_id, sum(seg.duration for seg in seq.segments)
        )

    def vector(self, utt_id: str) -> np.ndarray:
        self._load(utt_id)
        return self._vectors[utt_id]

    def meta(self, utt_id: str) -> UtteranceMeta:
        self._load(utt_id)
        return self._meta[utt_id]

    def stats(self, utt_id: str) -> CohortStats:
        if utt_id not in self._stats:
            self._stats[utt_id] = cohort_stats(
                self.vector(utt_id), self.cohort, k=self.top_k, utterance_id=utt_id
            )
        return self._stats[utt_id]


def _score_system(
    system: VerifySystem, trials: Sequence[Trial], out_dir: Path
) -> dict[str, list[float]]:
    """Raw, normalized and calibrated scores for one system, all written out."""
    cohort = _load_cohort(system.cohort)
    store = _UtteranceStore(system.embeddings_dir, cohort, system.top_k)

    def features_for(trial_list: Sequence[Trial]) -> tuple[list[float], np.ndarray]:
        raw_scores: list[float] = []
        rows = []
        for t in trial_list:
            raw = cosine_score(store.vector(t.enroll_id), store.vector(t.test_id))
            raw_scores.append(raw)
            rows.append(
                qmf_features(
                    raw,
                    store.meta(t.enroll_id),
                    store.meta(t.test_id),
                    store.stats(t.enroll_id),
                    store.stats(t.test_id),
                )
            )
        return raw_scores, np.vstack(rows)

    raw_scores, features = features_for(trials)
    asnorm_scores = [float(row[0]) for row in features]

    if system.calibration_mode == "model":
        model = CalibrationModel.load(system.calibration_path)
    elif system.calibration_mode == "fit":
        dev = read_trials(system.dev_trials)
        if not dev or any(t.label is None for t in dev):
            raise ConfigurationError(
                f"system {system.name!r}: dev trials must all be labelled"
            )
        _, dev_features = features_for(dev)
        model = fit_calibration(dev, dev_features)
        model.save(out_dir / "calibration.json")
    else:  # identity: pass the normalized score through unchanged
        weights = np.zeros(len(QMF_FEATURE_NAMES))
        weights[0] = 1.0
        model = CalibrationModel(weights, 0.0, QMF_FEATURE_NAMES)

    calibrated = [float(apply_calibration(model, row)) for row in features]

    write_scores(
        [(t.enroll_id, t.test_id, s) for t, s in zip(trials, raw_scores)],
        out_dir / "raw_scores.txt",
    )
    write_scores(
        [(t.enroll_id, t.test_id, s) for t, s in zip(trials, asnorm_scores)],
        out_dir / "asnorm_scores.txt",
    )
    write_scores(
        [(t.enroll_id, t.test_id, s) for t, s in zip(trials, calibrated)],
        out_dir / "calibrated_scores.txt",
    )
    return {"raw": raw_scores, "asnorm": asnorm_scores, "calibrated": calibrated}


def _trial_metrics(trials: Sequence[Trial], scores: Sequence[float], p_target: float) -> dict | None:
    if any(t.label is None for t in trials):
        return None
    s = np.asarray(scores, dtype=np.float64)
    labels = np.array([t.label for t in trials])
    if labels.min() == labels.max():
        return None
    targets = s[labels == 1]
    nontargets = s[labels == 0]
    return {
        "eer": eer(targets, nontargets),
        "min_dcf": min_dcf(targets, nontargets, p_target=p_target),
        "p_target": p_target,
        "num_target": int(targets.size),
        "num_nontarget": int(nontargets.size),
    }


def run_verification(config: VerifyConfig) -> dict:
    """Execute a verification run and write score files, metrics and figures."""
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    trials = read_trials(config.trials)
    if not trials:
        raise ConfigurationError(f"trial list {config.trials} is empty")

    summary: dict[str, Any] = {"output_dir": str(out_dir), "systems": {}, "failed": []}
    calibrated_by_system: dict[str, list[float]] = {}
    for system in config.systems:
        sys_dir = out_dir / system.name
        sys_dir.mkdir(parents=True, exist_ok=True)
        try:
            scores = _score_system(system, trials, sys_dir)
        except (DiarkitError, OSError, ValueError) as exc:
            summary["systems"][system.name] = {"error": str(exc)}
            summary["failed"].append(system.name)
            continue
        calibrated_by_system[system.name] = scores["calibrated"]
        entry: dict[str, Any] = {"error": None, "weight": system.weight}
        metrics = _trial_metrics(trials, scores["calibrated"], config.p_target)
        if metrics is not None:
            entry["metrics"] = metrics
        summary["systems"][system.name] = entry
        if config.figures:
            from .report import render_score_histogram

            render_score_histogram(
                scores["calibrated"],
                [t.label for t in trials],
                sys_dir / "scores.png",
                title=f"{system.name} calibrated scores",
            )

    if config.fusion_enabled and not summary["failed"] and len(config.systems) >= 1:
        weights = [s.weight for s in config.systems]
        names = [s.name for s in config.systems]
        fused_scores = [
            fuse([calibrated_by_system[n][i] for n in names], weights)
            for i in range(len(trials))
        ]
        write_scores(
            [(t.enroll_id, t.test_id, s) for t, s in zip(trials, fused_scores)],
            out_dir / "fused_scores.txt",
        )
        fusion_entry: dict[str, Any] = {"systems": names, "weights": weights}
        metrics = _trial_metrics(trials, fused_scores, config.p_target)
        if metrics is not None:
            fusion_entry["metrics"] = metrics
        summary["fusion"] = fusion_entry
        if config.figures:
            from .report import render_score_histogram

            render_score_histogram(
                fused_scores,
                [t.label for t in trials],
                out_dir / "fused_scores.png",
                title="fused scores",
            )

    inputs: list[Path] = [config.trials]
    for system in config.systems:
        inputs.append(system.cohort)
        if system.calibration_path:
            inputs.append(system.calibration_path)
        if system.dev_trials:
            inputs.append(system.dev_trials)
    (out_dir / "manifest.json").write_text(
        json.dumps(_manifest(config.config_path, inputs), indent=2) + "\n"
    )
    (out_dir / "metrics.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary
