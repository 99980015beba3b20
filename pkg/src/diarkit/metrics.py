"""Evaluation metrics: equal error rate and minimum detection cost for
verification scores, diarization error rate and per-speaker Jaccard error
for speaker turn hypotheses.

DER follows the time-weighted convention: within the scored region an
instant with k reference speakers contributes k units of reference time,
misses and false alarms come from speaker-count differences, and
confusion is what an optimal one-to-one speaker mapping cannot explain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DegenerateInputError, UsageError
from .timeline import Diarization, Segment, Timeline

__all__ = ["DerBreakdown", "eer", "min_dcf", "der", "jer"]


# ---------------------------------------------------------------------------
# Verification metrics


def _detection_curve(
    target_scores: np.ndarray, nontarget_scores: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Miss and false-alarm rates swept over every distinct score.

    A trial is accepted when its score is >= the threshold. The sweep runs
    from the smallest score (everything accepted) to above the largest
    (everything rejected), so the curve always spans (0, 1) to (1, 0).
    """
    targets = np.sort(np.asarray(target_scores, dtype=np.float64).reshape(-1))
    nontargets = np.sort(np.asarray(nontarget_scores, dtype=np.float64).reshape(-1))
    if targets.size == 0 or nontargets.size == 0:
        raise DegenerateInputError("need at least one target and one non-target score")
    thresholds = np.unique(np.concatenate([targets, nontargets]))
    thresholds = np.append(thresholds, thresholds[-1] + 1.0)
    p_miss = np.searchsorted(targets, thresholds, side="left") / targets.size
    p_fa = 1.0 - np.searchsorted(nontargets, thresholds, side="left") / nontargets.size
    return p_miss, p_fa


def eer(target_scores: np.ndarray, nontarget_scores: np.ndarray) -> float:
    """Equal error rate as a fraction in [0, 1].

    The threshold sweep rarely hits the exact equality point, so the rate
    is linearly interpolated between the two sweep points where the miss
    rate crosses the false-alarm rate.
    """
    p_miss, p_fa = _detection_curve(target_scores, nontarget_scores)
    diff = p_miss - p_fa
    idx = int(np.argmax(diff >= 0.0))  # first sweep point at or past the crossing
    if diff[idx] == 0.0 or idx == 0:
        return float(p_miss[idx])
    dm = p_miss[idx] - p_miss[idx - 1]
    df = p_fa[idx] - p_fa[idx - 1]
    lam = (p_fa[idx - 1] - p_miss[idx - 1]) / (dm - df)
    return float(p_miss[idx - 1] + lam * dm)


def min_dcf(
    target_scores: np.ndarray,
    nontarget_scores: np.ndarray,
    p_target: float = 0.05,
    c_miss: float = 1.0,
    c_fa: float = 1.0,
) -> float:
    """Minimum normalized detection cost over the same threshold sweep.

    Costs are normalized by the best trivial system (always accept or
    always reject), so a score distribution carrying no information gives
    exactly 1.0.
    """
    if not (0.0 < p_target < 1.0):
        raise DegenerateInputError(f"p_target must be in (0, 1), got {p_target!r}")
    if c_miss <= 0 or c_fa <= 0:
        raise DegenerateInputError("detection costs must be positive")
    p_miss, p_fa = _detection_curve(target_scores, nontarget_scores)
    costs = c_miss * p_target * p_miss + c_fa * (1.0 - p_target) * p_fa
    floor = min(c_miss * p_target, c_fa * (1.0 - p_target))
    return float(costs.min() / floor)


# ---------------------------------------------------------------------------
# Diarization metrics


@dataclass(frozen=True)
class DerBreakdown:
    """Diarization error decomposition, all fractions of scored reference time."""

    miss: float
    false_alarm: float
    confusion: float
    der: float
    jer: float
    collar: float
    scored_overlap: bool
    speaker_mapping: tuple[tuple[str, str], ...]
    scored_speech: float = 0.0

    def to_dict(self) -> dict:
        return {
            "miss": self.miss,
            "false_alarm": self.false_alarm,
            "confusion": self.confusion,
            "der": self.der,
            "jer": self.jer,
            "collar": self.collar,
            "scored_overlap": self.scored_overlap,
            "speaker_mapping": {r: h for r, h in self.speaker_mapping},
            "scored_speech": self.scored_speech,
        }


def _reference_overlap_regions(ref: Diarization) -> Timeline:
    """Instants where at least two reference speakers are active."""
    events: list[tuple[float, int]] = []
    for seg, _ in ref.turns:
        events.append((seg.onset, 1))
        events.append((seg.end, -1))
    events.sort()
    out: list[Segment] = []
    active = 0
    start = None
    for t, delta in events:
        was = active
        active += delta
        if was < 2 <= active:
            start = t
        elif was >= 2 > active and start is not None and t > start:
            out.append(Segment(start, t - start))
            start = None
    return Timeline(out)


def _scored_region(
    ref: Diarization, collar: float, uem: Timeline | None, scored_overlap: bool
) -> Timeline:
    if uem is not None:
        region = uem
    else:
        extent = ref.coverage().extent()
        region = Timeline([extent]) if extent is not None else Timeline()
    if collar > 0:
        forgiven = Timeline(
            Segment(max(0.0, b - collar), (b + collar) - max(0.0, b - collar))
            for seg, _ in ref.turns
            for b in (seg.onset, seg.end)
        )
        region = region.difference(forgiven)
    if not scored_overlap:
        region = region.difference(_reference_overlap_regions(ref))
    return region


def _cropped_speaker_timelines(d: Diarization, region: Timeline) -> dict[str, Timeline]:
    return {spk: d.speaker_timeline(spk).crop(region) for spk in d.speakers}


def _optimal_mapping(
    ref_timelines: dict[str, Timeline], hyp_timelines: dict[str, Timeline]
) -> dict[str, str]:
    """One-to-one speaker mapping maximizing total co-occurring time."""
    ref_ids = sorted(ref_timelines)
    hyp_ids = sorted(hyp_timelines)
    if not ref_ids or not hyp_ids:
        return {}
    overlap = np.zeros((len(ref_ids), len(hyp_ids)))
    for i, r in enumerate(ref_ids):
        for j, h in enumerate(hyp_ids):
            overlap[i, j] = ref_timelines[r].intersection(hyp_timelines[h]).duration
    rows, cols = linear_sum_assignment(overlap, maximize=True)
    return {ref_ids[i]: hyp_ids[j] for i, j in zip(rows, cols)}


def der(
    ref: Diarization,
    hyp: Diarization,
    collar: float = 0.25,
    uem: Timeline | None = None,
    scored_overlap: bool = True,
) -> DerBreakdown:
    """Diarization error rate of hyp against ref.

    The scored region is the uem (or the reference extent) minus a collar
    around every reference turn boundary; overlap regions are scored
    unless scored_overlap is False. Speaker identities are aligned with a
    maximum-weight one-to-one mapping before errors are counted.

    Parameters
    ----------
    ref, hyp : Diarization
        Must describe the same recording id.
    collar : float
        Half-width in seconds of the forgiveness zone around reference
        turn boundaries.
    uem : Timeline, optional
        Evaluation region override.
    scored_overlap : bool
        When False, instants with two or more reference speakers are
        excluded from scoring.
    """
    if ref.recording_id != hyp.recording_id:
        raise UsageError(
            f"recording ids differ: {ref.recording_id!r} vs {hyp.recording_id!r}"
        )
    if collar < 0:
        raise UsageError(f"collar must be >= 0, got {collar!r}")
    region = _scored_region(ref, collar, uem, scored_overlap)

    ref_timelines = _cropped_speaker_timelines(ref, region)
    hyp_timelines = _cropped_speaker_timelines(hyp, region)
    total = sum(t.duration for t in ref_timelines.values())
    if total <= 0.0:
        raise DegenerateInputError("no reference speaker time inside the scored region")
    mapping = _optimal_mapping(ref_timelines, hyp_timelines)

    # Sweep elementary intervals between all boundaries inside the region.
    boundaries: set[float] = set()
    for tl in (*ref_timelines.values(), *hyp_timelines.values(), region):
        for seg in tl:
            boundaries.add(seg.onset)
            boundaries.add(seg.end)
    points = sorted(boundaries)

    missed = false_alarm = confusion = 0.0
    for lo, hi in zip(points[:-1], points[1:]):
        if hi <= lo:
            continue
        mid = (lo + hi) / 2.0
        if not region.covers(mid):
            continue
        length = hi - lo
        ref_active = {r for r, tl in ref_timelines.items() if tl.covers(mid)}
        hyp_active = {h for h, tl in hyp_timelines.items() if tl.covers(mid)}
        n_ref, n_hyp = len(ref_active), len(hyp_active)
        matched = sum(1 for r in ref_active if mapping.get(r) in hyp_active)
        missed += max(0, n_ref - n_hyp) * length
        false_alarm += max(0, n_hyp - n_ref) * length
        confusion += (min(n_ref, n_hyp) - matched) * length

    miss_rate = missed / total
    fa_rate = false_alarm / total
    conf_rate = confusion / total
    return DerBreakdown(
        miss=miss_rate,
        false_alarm=fa_rate,
        confusion=conf_rate,
        der=miss_rate + fa_rate + conf_rate,
        jer=_jer(ref_timelines, hyp_timelines, mapping),
        collar=collar,
        scored_overlap=scored_overlap,
        speaker_mapping=tuple(sorted(mapping.items())),
        scored_speech=total,
    )


def _jer(
    ref_timelines: dict[str, Timeline],
    hyp_timelines: dict[str, Timeline],
    mapping: dict[str, str],
) -> float:
    """Mean per-reference-speaker Jaccard error under the DER mapping.

    Unmapped speakers score 1. Reference speakers with no time in the
    scored region and no mapped hypothesis time are skipped (there is
    nothing to agree or disagree about).
    """
    errors: list[float] = []
    for r, ref_tl in ref_timelines.items():
        h = mapping.get(r)
        if h is None:
            if ref_tl.duration > 0:
                errors.append(1.0)
            continue
        hyp_tl = hyp_timelines[h]
        union = ref_tl.union(hyp_tl).duration
        if union <= 0.0:
            continue
        inter = ref_tl.intersection(hyp_tl).duration
        errors.append(1.0 - inter / union)
    return float(np.mean(errors)) if errors else 0.0


def jer(
    ref: Diarization,
    hyp: Diarization,
    collar: float = 0.25,
    uem: Timeline | None = None,
    scored_overlap: bool = True,
) -> float:
    """Jaccard error rate; shares the scored region and mapping with der."""
    return der(ref, hyp, collar=collar, uem=uem, scored_overlap=scored_overlap).jer
