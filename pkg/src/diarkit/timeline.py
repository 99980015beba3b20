"""Time segments, coverage timelines and speaker-labelled diarization.

Times are 64-bit real seconds. All types are immutable after construction
and every operation is a pure function, so values can be shared freely
between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

__all__ = ["TIME_QUANTUM", "Segment", "Timeline", "Diarization"]

#: Grid used when times are written to files (seconds). Segments whose
#: duration falls under one quantum are dropped on emission, not here.
TIME_QUANTUM = 1e-3


@dataclass(frozen=True, order=True)
class Segment:
    """Half-open time interval ``[onset, onset + duration)`` in seconds."""

    onset: float
    duration: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.onset) and math.isfinite(self.duration)):
            raise ValueError("segment times must be finite")
        if self.onset < 0:
            raise ValueError(f"segment onset must be non-negative, got {self.onset!r}")
        if self.duration <= 0:
            raise ValueError(f"segment duration must be positive, got {self.duration!r}")

    @property
    def end(self) -> float:
        return self.onset + self.duration

    @property
    def middle(self) -> float:
        return self.onset + self.duration / 2.0

    def intersects(self, other: Segment) -> bool:
        return self.onset < other.end and other.onset < self.end

    def gap_to(self, other: Segment) -> float:
        """Distance in seconds between two segments; 0 when they overlap or touch."""
        return max(0.0, other.onset - self.end, self.onset - other.end)


class Timeline:
    """A set of covered time: sorted, pairwise disjoint segments.

    Construction normalizes the input: segments are sorted by onset (ties
    by duration ascending) and overlapping or touching segments are merged
    into one, so the result is the minimal representation of the covered
    time.
    """

    __slots__ = ("_segments",)

    def __init__(self, segments: Iterable[Segment] = ()):
        merged: list[list[float]] = []
        for seg in sorted(segments):
            if merged and seg.onset <= merged[-1][1]:
                if seg.end > merged[-1][1]:
                    merged[-1][1] = seg.end
            else:
                merged.append([seg.onset, seg.end])
        object.__setattr__(self, "_segments", tuple(Segment(a, b - a) for a, b in merged))

    # -- container protocol -------------------------------------------------

    @property
    def segments(self) -> tuple[Segment, ...]:
        return self._segments

    def __iter__(self) -> Iterator[Segment]:
        return iter(self._segments)

    def __len__(self) -> int:
        return len(self._segments)

    def __bool__(self) -> bool:
        return bool(self._segments)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Timeline):
            return NotImplemented
        return self._segments == other._segments

    def __hash__(self) -> int:
        return hash(self._segments)

    def __repr__(self) -> str:
        inner = ", ".join(f"[{s.onset:g}, {s.end:g})" for s in self._segments)
        return f"Timeline({inner})"

    # -- algebra -------------------------------------------------------------

    @property
    def duration(self) -> float:
        return sum(s.duration for s in self._segments)

    def extent(self) -> Segment | None:
        """Smallest single segment covering the whole timeline, or None."""
        if not self._segments:
            return None
        onset = self._segments[0].onset
        return Segment(onset, self._segments[-1].end - onset)

    def union(self, other: Timeline) -> Timeline:
        return Timeline(self._segments + other._segments)

    def intersection(self, other: Timeline) -> Timeline:
        out: list[Segment] = []
        a, b = self._segments, other._segments
        i = j = 0
        while i < len(a) and j < len(b):
            lo = max(a[i].onset, b[j].onset)
            hi = min(a[i].end, b[j].end)
            if hi > lo:
                out.append(Segment(lo, hi - lo))
            if a[i].end < b[j].end:
                i += 1
            else:
                j += 1
        return Timeline(out)

    def difference(self, other: Timeline) -> Timeline:
        """Time covered by self but not by other."""
        out: list[Segment] = []
        b = other._segments
        j = 0
        for seg in self._segments:
            cursor = seg.onset
            while j < len(b) and b[j].end <= cursor:
                j += 1
            k = j
            while k < len(b) and b[k].onset < seg.end:
                if b[k].onset > cursor:
                    out.append(Segment(cursor, b[k].onset - cursor))
                if b[k].end > cursor:
                    cursor = b[k].end
                k += 1
            if cursor < seg.end:
                out.append(Segment(cursor, seg.end - cursor))
        return Timeline(out)

    def crop(self, support: Timeline) -> Timeline:
        return self.intersection(support)

    def covers(self, t: float) -> bool:
        for seg in self._segments:
            if seg.onset <= t < seg.end:
                return True
            if seg.onset > t:
                break
        return False


class Diarization:
    """Speaker turns for one recording.

    Turns of different speakers may overlap. Turns of one speaker are
    merged when they strictly overlap, so each per-speaker timeline is a
    set of disjoint segments; touching turns are kept separate so that
    round-trips through files stay the identity.
    """

    __slots__ = ("_recording_id", "_turns")

    def __init__(self, recording_id: str, turns: Iterable[tuple[Segment, str]] = ()):
        if not recording_id or not isinstance(recording_id, str):
            raise ValueError("recording_id must be a non-empty string")
        per: dict[str, list[list[float]]] = {}
        for seg, spk in turns:
            if not spk or not isinstance(spk, str):
                raise ValueError("speaker id must be a non-empty string")
            per.setdefault(spk, []).append([seg.onset, seg.end])
        flat: list[tuple[Segment, str]] = []
        for spk, ivs in per.items():
            ivs.sort()
            merged: list[list[float]] = []
            for a, b in ivs:
                if merged and a < merged[-1][1]:
                    if b > merged[-1][1]:
                        merged[-1][1] = b
                else:
                    merged.append([a, b])
            flat.extend((Segment(a, b - a), spk) for a, b in merged)
        flat.sort(key=lambda t: (t[0].onset, t[0].duration, t[1]))
        object.__setattr__(self, "_recording_id", recording_id)
        object.__setattr__(self, "_turns", tuple(flat))

    @property
    def recording_id(self) -> str:
        return self._recording_id

    @property
    def turns(self) -> tuple[tuple[Segment, str], ...]:
        return self._turns

    @property
    def speakers(self) -> tuple[str, ...]:
        return tuple(sorted({spk for _, spk in self._turns}))

    def __len__(self) -> int:
        return len(self._turns)

    def __bool__(self) -> bool:
        return bool(self._turns)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Diarization):
            return NotImplemented
        return self._recording_id == other._recording_id and self._turns == other._turns

    def __hash__(self) -> int:
        return hash((self._recording_id, self._turns))

    def __repr__(self) -> str:
        return f"Diarization({self._recording_id!r}, {len(self._turns)} turns, {len(self.speakers)} speakers)"

    def speaker_timeline(self, speaker: str) -> Timeline:
        return Timeline(seg for seg, spk in self._turns if spk == speaker)

    def speaker_duration(self, speaker: str) -> float:
        return sum(seg.duration for seg, spk in self._turns if spk == speaker)

    def coverage(self) -> Timeline:
        """Union of all turns, regardless of speaker."""
        return Timeline(seg for seg, _ in self._turns)

    def relabeled(self, mapping: dict[str, str]) -> Diarization:
        """Return a copy with speaker ids replaced via mapping (missing ids kept)."""
        return Diarization(
            self._recording_id,
            ((seg, mapping.get(spk, spk)) for seg, spk in self._turns),
        )
