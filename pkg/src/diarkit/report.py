"""Matplotlib rendering for run reports: speaker timelines, stage-timing
summaries and score histograms, written as PNG files next to the text
outputs."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .timeline import Diarization, Timeline

__all__ = ["render_diarization", "render_run_summary", "render_score_histogram"]

_DPI = 120


def render_diarization(
    diarization: Diarization,
    path: str | Path,
    speech: Timeline | None = None,
    title: str | None = None,
) -> Path:
    """Draw one horizontal bar lane per speaker; optional speech backdrop."""
    speakers = list(diarization.speakers)
    lanes = {spk: i for i, spk in enumerate(speakers)}
    height = max(1.8, 0.5 * (len(speakers) + (speech is not None)) + 1.0)
    fig, ax = plt.subplots(figsize=(10, height))
    cmap = plt.get_cmap("tab10")
    if speech is not None:
        ax.broken_barh(
            [(seg.onset, seg.duration) for seg in speech],
            (len(speakers) - 0.4, 0.8),
            facecolors="0.85",
        )
    for seg, spk in diarization.turns:
        lane = lanes[spk]
        ax.broken_barh(
            [(seg.onset, seg.duration)], (lane - 0.4, 0.8), facecolors=cmap(lane % 10)
        )
    ticks = list(range(len(speakers)))
    labels = speakers[:]
    if speech is not None:
        ticks.append(len(speakers))
        labels.append("speech")
    ax.set_yticks(ticks)
    ax.set_yticklabels(labels)
    ax.set_xlabel("time (s)")
    ax.set_title(title or diarization.recording_id)
    ax.grid(axis="x", alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_run_summary(
    per_recording: Mapping[str, Mapping[str, object]], path: str | Path
) -> Path:
    """Stacked stage timings and speaker counts for a diarization run."""
    recordings = list(per_recording)
    fig, (ax_time, ax_spk) = plt.subplots(
        2, 1, figsize=(max(6, 1.2 * len(recordings) + 3), 7), sharex=True
    )
    stage_names: list[str] = []
    for info in per_recording.values():
        for stage in info.get("timings", {}):
            if stage not in stage_names:
                stage_names.append(stage)
    bottoms = np.zeros(len(recordings))
    cmap = plt.get_cmap("tab10")
    x = np.arange(len(recordings))
    for k, stage in enumerate(stage_names):
        heights = np.array(
            [float(per_recording[r].get("timings", {}).get(stage, 0.0)) for r in recordings]
        )
        ax_time.bar(x, heights, bottom=bottoms, label=stage, color=cmap(k % 10))
        bottoms += heights
    ax_time.set_ylabel("stage time (s)")
    if stage_names:
        ax_time.legend(fontsize="small")
    counts = [int(per_recording[r].get("num_speakers", 0) or 0) for r in recordings]
    ax_spk.bar(x, counts, color="0.5")
    ax_spk.set_ylabel("speakers")
    ax_spk.set_xticks(x)
    ax_spk.set_xticklabels(recordings, rotation=30, ha="right")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_score_histogram(
    scores: Sequence[float],
    labels: Sequence[int | None],
    path: str | Path,
    title: str = "score distribution",
) -> Path:
    """Histogram of trial scores, split by target/non-target when labelled."""
    scores = np.asarray(scores, dtype=np.float64)
    labels_arr = np.array([-1 if v is None else int(v) for v in labels])
    fig, ax = plt.subplots(figsize=(7, 4))
    if (labels_arr >= 0).all() and labels_arr.size:
        ax.hist(scores[labels_arr == 1], bins=40, alpha=0.6, label="target")
        ax.hist(scores[labels_arr == 0], bins=40, alpha=0.6, label="non-target")
        ax.legend()
    else:
        ax.hist(scores, bins=40, color="0.5")
    ax.set_xlabel("score")
    ax.set_ylabel("trials")
    ax.set_title(title)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path
