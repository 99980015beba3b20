"""Sliding-window segmentation of speech and agglomerative clustering of
window embeddings.

Windows are cut per speech segment with a fixed length and hop. The
clusterer is plain average-linkage agglomerative clustering on cosine
similarity with a similarity-threshold stopping rule and fully
deterministic tie-breaking, so runs are reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DegenerateInputError
from .records import EmbeddingSequence
from .timeline import Segment, Timeline

__all__ = ["WindowingConfig", "AhcConfig", "segment_windows", "make_windows", "ahc"]

_STEP_EPS = 1e-9


@dataclass(frozen=True)
class WindowingConfig:
    """Sliding-window length and hop in seconds."""

    window: float = 1.5
    step: float = 0.25

    def __post_init__(self) -> None:
        if not (math.isfinite(self.window) and self.window > 0):
            raise ConfigurationError(f"window must be positive, got {self.window!r}")
        if not (math.isfinite(self.step) and 0 < self.step <= self.window):
            raise ConfigurationError(
                f"step must satisfy 0 < step <= window, got step={self.step!r} window={self.window!r}"
            )


@dataclass(frozen=True)
class AhcConfig:
    """Stopping threshold on average-linkage cosine similarity."""

    threshold: float = 0.0

    def __post_init__(self) -> None:
        if not (-1.0 <= self.threshold <= 1.0):
            raise ConfigurationError(f"threshold must be in [-1, 1], got {self.threshold!r}")


def segment_windows(segment: Segment, config: WindowingConfig) -> list[Segment]:
    """Windows for one speech segment.

    A segment shorter than the window length yields exactly one window
    covering it. Otherwise onsets advance by the hop for as long as the
    remaining speech is at least one hop long; trailing windows shrink to
    fit the segment end.
    """
    if segment.duration < config.window:
        return [segment]
    windows = []
    k = 0
    while True:
        onset = segment.onset + k * config.step
        remaining = segment.end - onset
        if remaining < config.step - _STEP_EPS:
            break
        windows.append(Segment(onset, min(config.window, remaining)))
        k += 1
    return windows


def make_windows(speech: Timeline, config: WindowingConfig) -> list[Segment]:
    """Sliding windows over every segment of a speech timeline, in time order."""
    windows: list[Segment] = []
    for segment in speech:
        windows.extend(segment_windows(segment, config))
    return windows


def _dense_labels(raw: np.ndarray) -> np.ndarray:
    """Renumber labels to 0..K-1 in order of first occurrence."""
    mapping: dict[int, int] = {}
    out = np.empty(raw.shape[0], dtype=np.int64)
    for i, v in enumerate(raw):
        key = int(v)
        if key not in mapping:
            mapping[key] = len(mapping)
        out[i] = mapping[key]
    return out


def ahc(seq: EmbeddingSequence, config: AhcConfig) -> np.ndarray:
    """Average-linkage agglomerative clustering on cosine similarity.

    Merging continues while the best cluster-pair average similarity is at
    least the threshold; among equal-similarity pairs the lexicographically
    smallest active-cluster index pair merges first. Returns one integer
    label per input vector, numbered 0..K-1 in order of first occurrence.

    Parameters
    ----------
    seq : EmbeddingSequence
        Window embeddings; vectors need not be pre-normalized because the
        similarity is proper cosine.
    config : AhcConfig
        Stopping threshold.
    """
    t = len(seq)
    if t == 0:
        raise DegenerateInputError("cannot cluster an empty embedding sequence")
    norms = np.linalg.norm(seq.vectors, axis=1)
    if np.any(norms == 0.0):
        raise DegenerateInputError("cannot cluster zero embedding vectors")
    unit = seq.vectors / norms[:, None]
    if t == 1:
        return np.zeros(1, dtype=np.int64)

    # Cluster-average cosine similarity; with arithmetic-mean linkage the
    # weighted (Lance-Williams) update below is exact, not approximate.
    sim = np.clip(unit @ unit.T, -1.0, 1.0)
    np.fill_diagonal(sim, -np.inf)
    sizes = np.ones(t)
    members: list[list[int]] = [[i] for i in range(t)]

    while len(members) > 1:
        rows, cols = np.triu_indices(sim.shape[0], k=1)
        # first argmax in row-major upper-triangle order realizes the
        # lexicographic (i, j) tie-break
        flat = int(np.argmax(sim[rows, cols]))
        i, j = int(rows[flat]), int(cols[flat])
        best = sim[i, j]
        if best < config.threshold:
            break
        merged_row = (sizes[i] * sim[i] + sizes[j] * sim[j]) / (sizes[i] + sizes[j])
        sim[i] = merged_row
        sim[:, i] = merged_row
        sim[i, i] = -np.inf
        sim = np.delete(np.delete(sim, j, axis=0), j, axis=1)
        sizes[i] += sizes[j]
        sizes = np.delete(sizes, j)
        members[i].extend(members[j])
        del members[j]

    raw = np.empty(t, dtype=np.int64)
    for cluster_index, cluster in enumerate(members):
        for frame in cluster:
            raw[frame] = cluster_index
    return _dense_labels(raw)
