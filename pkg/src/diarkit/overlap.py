"""Assignment of detected overlapped-speech regions to speaker pairs.

For each overlap segment the two speakers whose existing turns lie
closest in time are selected (distance zero when a turn intersects the
segment); the diarization is then extended so both chosen speakers cover
the overlap region.
"""

from __future__ import annotations

from dataclasses import dataclass

from .timeline import Diarization, Segment, Timeline

__all__ = ["OverlapAssignment", "assign_overlaps", "merge_overlaps"]


@dataclass(frozen=True)
class OverlapAssignment:
    """One overlap segment and the speakers chosen to cover it.

    Normally exactly two distinct speakers; degenerate diarizations with
    fewer speakers give one or zero, flagged by a diagnostic from
    assign_overlaps.
    """

    segment: Segment
    speakers: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.speakers) > 2:
            raise ValueError("overlap assignment carries at most two speakers")
        if len(set(self.speakers)) != len(self.speakers):
            raise ValueError("overlap assignment speakers must be distinct")


def _speaker_distance(segment: Segment, turns: list[Segment]) -> float:
    """Zero if any turn intersects the segment, else the smallest gap."""
    return min(segment.gap_to(t) for t in turns)


def assign_overlaps(
    overlaps: Timeline, diarization: Diarization
) -> tuple[list[OverlapAssignment], list[str]]:
    """Choose the two nearest speakers for every overlap segment.

    Ties on distance prefer the speaker with more total speaking time,
    then the lexicographically smaller id. Returns the assignments plus
    diagnostics for degenerate cases (fewer than two speakers available).
    """
    turns_by_speaker: dict[str, list[Segment]] = {}
    duration_by_speaker: dict[str, float] = {}
    for seg, spk in diarization.turns:
        turns_by_speaker.setdefault(spk, []).append(seg)
        duration_by_speaker[spk] = duration_by_speaker.get(spk, 0.0) + seg.duration

    assignments: list[OverlapAssignment] = []
    diagnostics: list[str] = []
    n_speakers = len(turns_by_speaker)
    if n_speakers < 2:
        diagnostics.append(
            f"{diarization.recording_id}: only {n_speakers} speaker(s) available "
            "for overlap assignment"
        )
    for segment in overlaps:
        ranked = sorted(
            turns_by_speaker,
            key=lambda spk: (
                _speaker_distance(segment, turns_by_speaker[spk]),
                -duration_by_speaker[spk],
                spk,
            ),
        )
        assignments.append(OverlapAssignment(segment, tuple(ranked[:2])))
    return assignments, diagnostics


def merge_overlaps(
    diarization: Diarization, assignments: list[OverlapAssignment]
) -> Diarization:
    """Extend the diarization so assigned speakers cover their overlap segments.

    Added turns that overlap existing turns of the same speaker merge with
    them during normalization, so per-speaker timelines stay disjoint.
    """
    turns = list(diarization.turns)
    for assignment in assignments:
        for spk in assignment.speakers:
            turns.append((assignment.segment, spk))
    return Diarization(diarization.recording_id, turns)
