"""Fusion of frame-level speech posteriors and conversion to segments.

Several detectors vote through a weighted per-frame mean; the fused
stream is thresholded into speech segments, short gaps are bridged, then
short segments are dropped. Frame-accuracy metrics compare a hypothesis
timeline against a reference inside a common support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DegenerateInputError, FormatError
from .records import PosteriorStream
from .timeline import Segment, Timeline

__all__ = ["FusionConfig", "VadReport", "fuse_posteriors", "posterior_to_segments", "vad_metrics"]

# Streams from different detectors may disagree in length by this many
# trailing frames before it is treated as a format problem.
_MAX_LENGTH_SLACK = 2

# Slack for float comparison of durations assembled from frame counts.
_DURATION_EPS = 1e-9


@dataclass(frozen=True)
class FusionConfig:
    """Thresholding and smoothing parameters for posterior-to-segment conversion."""

    threshold: float = 0.5
    min_segment: float = 0.10
    min_gap: float = 0.10

    def __post_init__(self) -> None:
        if not (0.0 <= self.threshold <= 1.0):
            raise ConfigurationError(f"threshold must be in [0, 1], got {self.threshold!r}")
        if self.min_segment < 0 or not math.isfinite(self.min_segment):
            raise ConfigurationError(f"min_segment must be >= 0, got {self.min_segment!r}")
        if self.min_gap < 0 or not math.isfinite(self.min_gap):
            raise ConfigurationError(f"min_gap must be >= 0, got {self.min_gap!r}")


@dataclass(frozen=True)
class VadReport:
    """False alarm, miss and accuracy of a speech/non-speech decision."""

    false_alarm: float
    miss: float
    accuracy: float


def fuse_posteriors(
    streams: Sequence[PosteriorStream], weights: Sequence[float] | None = None
) -> PosteriorStream:
    """Frame-wise weighted mean of posterior streams.

    Weights are normalized to sum to one; None means equal weights.
    Streams may differ in length by at most two trailing frames and are
    truncated to the shortest.
    """
    if len(streams) == 0:
        raise ConfigurationError("fusion needs at least one posterior stream")
    step = streams[0].frame_step
    for s in streams[1:]:
        if abs(s.frame_step - step) > 1e-9:
            raise FormatError(
                f"frame steps differ: {step} vs {s.frame_step} ({s.recording_id})"
            )
    lengths = [len(s) for s in streams]
    shortest = min(lengths)
    if max(lengths) - shortest > _MAX_LENGTH_SLACK:
        raise FormatError(
            f"stream lengths differ by more than {_MAX_LENGTH_SLACK} frames: {lengths}"
        )
    if weights is None:
        w = np.full(len(streams), 1.0 / len(streams))
    else:
        w = np.asarray(weights, dtype=np.float64).reshape(-1)
        if w.shape[0] != len(streams):
            raise ConfigurationError(f"{w.shape[0]} weights for {len(streams)} streams")
        if np.any(w < 0) or w.sum() <= 0:
            raise ConfigurationError("fusion weights must be non-negative and not all zero")
        w = w / w.sum()
    stacked = np.vstack([s.values[:shortest] for s in streams])
    fused = np.clip(w @ stacked, 0.0, 1.0)
    return PosteriorStream(streams[0].recording_id, step, fused)


def posterior_to_segments(stream: PosteriorStream, config: FusionConfig) -> Timeline:
    """Threshold a posterior stream into a speech timeline.

    Frames with value >= threshold are speech (ties count as speech).
    Gaps strictly shorter than min_gap are bridged first; segments
    strictly shorter than min_segment are dropped afterwards.
    """
    step = stream.frame_step
    mask = stream.values >= config.threshold
    if not mask.any():
        return Timeline()
    padded = np.concatenate([[False], mask, [False]])
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    starts, ends = edges[0::2], edges[1::2]  # frame index ranges [start, end)

    bridged: list[list[int]] = [[int(starts[0]), int(ends[0])]]
    for s, e in zip(starts[1:], ends[1:]):
        gap = (s - bridged[-1][1]) * step
        if gap < config.min_gap - _DURATION_EPS:
            bridged[-1][1] = int(e)
        else:
            bridged.append([int(s), int(e)])

    segments = []
    for s, e in bridged:
        duration = (e - s) * step
        if duration < config.min_segment - _DURATION_EPS:
            continue
        segments.append(Segment(s * step, duration))
    return Timeline(segments)


def vad_metrics(hyp: Timeline, ref: Timeline, total: Timeline) -> VadReport:
    """Duration-weighted false alarm and miss rates inside a support timeline.

    false_alarm = |hyp and not ref| / |total|, miss = |ref and not hyp| / |total|,
    accuracy = 1 - false_alarm - miss. Both inputs are cropped to the support.
    """
    denom = total.duration
    if denom <= 0:
        raise DegenerateInputError("support timeline has zero duration")
    hyp_c = hyp.crop(total)
    ref_c = ref.crop(total)
    fa = hyp_c.difference(ref_c).duration / denom
    miss = ref_c.difference(hyp_c).duration / denom
    return VadReport(false_alarm=fa, miss=miss, accuracy=1.0 - fa - miss)
