"""Value types carried between pipeline stages: time-stamped embedding
sequences, frame-level posterior streams and verification trials."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import DegenerateInputError, ShapeError
from .timeline import Segment

__all__ = ["EmbeddingSequence", "PosteriorStream", "Trial"]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class EmbeddingSequence:
    """Fixed-dimensional embeddings attached to time segments of one recording.

    Records are stored sorted by (onset, duration) so downstream consumers
    can rely on temporal order.
    """

    recording_id: str
    segments: tuple[Segment, ...]
    vectors: np.ndarray  # (T, D) float64, read-only

    def __post_init__(self) -> None:
        vectors = np.asarray(self.vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise ShapeError(f"vectors must be 2-D (T, D), got shape {vectors.shape}")
        segments = tuple(self.segments)
        if len(segments) != vectors.shape[0]:
            raise ShapeError(
                f"{len(segments)} segments but {vectors.shape[0]} vectors"
            )
        if vectors.size and not np.all(np.isfinite(vectors)):
            raise ValueError("embedding vectors must be finite")
        order = sorted(range(len(segments)), key=lambda i: (segments[i].onset, segments[i].duration))
        segments = tuple(segments[i] for i in order)
        vectors = vectors[order] if len(order) else vectors
        object.__setattr__(self, "segments", segments)
        object.__setattr__(self, "vectors", _readonly(vectors))

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self) -> Iterator[tuple[Segment, np.ndarray]]:
        return iter(self.frames)

    @property
    def frames(self) -> tuple[tuple[Segment, np.ndarray], ...]:
        return tuple((seg, self.vectors[i]) for i, seg in enumerate(self.segments))

    def normalized(self) -> EmbeddingSequence:
        """Return a copy whose vectors have unit L2 norm."""
        norms = np.linalg.norm(self.vectors, axis=1)
        if np.any(norms == 0.0):
            raise DegenerateInputError("cannot normalize a zero embedding vector")
        return EmbeddingSequence(
            self.recording_id, self.segments, self.vectors / norms[:, None]
        )


@dataclass(frozen=True, eq=False)
class PosteriorStream:
    """Per-frame speech (or overlap) posterior values for one recording."""

    recording_id: str
    frame_step: float
    values: np.ndarray  # (N,) float64 in [0, 1], read-only

    def __post_init__(self) -> None:
        if not (math.isfinite(self.frame_step) and self.frame_step > 0):
            raise ValueError(f"frame_step must be positive, got {self.frame_step!r}")
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ShapeError(f"posterior values must be 1-D, got shape {values.shape}")
        if values.size and (not np.all(np.isfinite(values)) or values.min() < 0.0 or values.max() > 1.0):
            raise ValueError("posterior values must lie in [0, 1]")
        object.__setattr__(self, "values", _readonly(values))

    def __len__(self) -> int:
        return int(self.values.shape[0])

    @property
    def duration(self) -> float:
        return len(self) * self.frame_step


@dataclass(frozen=True)
class Trial:
    """One verification trial; label is 1 for a target pair, 0 otherwise."""

    enroll_id: str
    test_id: str
    label: int | None = None

    def __post_init__(self) -> None:
        if not self.enroll_id or not self.test_id:
            raise ValueError("trial ids must be non-empty")
        if self.label is not None and self.label not in (0, 1):
            raise ValueError(f"trial label must be 0 or 1, got {self.label!r}")
