"""Line-oriented text formats used at module boundaries.

Covered formats:

* RTTM speaker turns (``SPEAKER <rec> 1 <onset> <dur> <NA> <NA> <spk> <NA> <NA>``)
* embedding archives (``#dim=<D>`` header, then ``<onset> <duration> <v1> ... <vD>``)
* posterior streams (``#step=0.010`` header, one value per line)
* trial lists (``<enroll_id> <test_id> [<label>]``)
* score files (``<enroll_id> <test_id> <score>``, six decimals)
* ``.lab`` segment lists (``<onset> <end>``)
* window label tables (``<onset> <duration> <label>``)

Every emitter quantizes times to 1 ms; segments whose duration falls below
1 ms are dropped at emission time. Parsers raise ParseError / FormatError
naming the first offending line.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import FormatError, ParseError
from .records import EmbeddingSequence, PosteriorStream, Trial
from .timeline import TIME_QUANTUM, Diarization, Segment, Timeline

__all__ = [
    "parse_rttm",
    "emit_rttm",
    "read_rttm",
    "write_rttm",
    "read_embeddings",
    "write_embeddings",
    "read_posteriors",
    "write_posteriors",
    "read_trials",
    "write_trials",
    "read_scores",
    "write_scores",
    "read_lab",
    "write_lab",
    "read_labels",
    "write_labels",
]


def _q(t: float) -> float:
    """Quantize a time to the 1 ms emission grid."""
    return round(t, 3)


# ---------------------------------------------------------------------------
# RTTM


def parse_rttm(text: str) -> list[Diarization]:
    """Parse RTTM text into one Diarization per recording id.

    Recordings appear in order of first occurrence. Only SPEAKER rows are
    accepted; any other non-empty line is an error.
    """
    grouped: dict[str, list[tuple[Segment, str]]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) < 9:
            raise ParseError(f"expected at least 9 fields, got {len(fields)}", lineno)
        if fields[0] != "SPEAKER":
            raise ParseError(f"unsupported record type {fields[0]!r}", lineno)
        try:
            onset = float(fields[3])
            duration = float(fields[4])
        except ValueError:
            raise ParseError("onset and duration must be numeric", lineno) from None
        if onset < 0 or duration <= 0:
            raise ParseError(
                f"invalid interval onset={fields[3]} duration={fields[4]}", lineno
            )
        grouped.setdefault(fields[1], []).append((Segment(onset, duration), fields[7]))
    return [Diarization(rec, turns) for rec, turns in grouped.items()]


def emit_rttm(diarization: Diarization) -> str:
    """Render one recording as RTTM text; empty input gives an empty string."""
    rows = []
    for seg, spk in diarization.turns:
        if seg.duration < TIME_QUANTUM:
            continue
        rows.append((_q(seg.onset), spk, _q(seg.duration)))
    rows.sort(key=lambda r: (r[0], r[1]))
    lines = [
        f"SPEAKER {diarization.recording_id} 1 {onset:.3f} {dur:.3f} "
        f"<NA> <NA> {spk} <NA> <NA>"
        for onset, spk, dur in rows
    ]
    if not lines:
        return ""
    return "\n".join(lines) + "\n"


def read_rttm(path: str | Path) -> list[Diarization]:
    return parse_rttm(Path(path).read_text())


def write_rttm(diarizations: Diarization | Iterable[Diarization], path: str | Path) -> None:
    if isinstance(diarizations, Diarization):
        diarizations = [diarizations]
    Path(path).write_text("".join(emit_rttm(d) for d in diarizations))


# ---------------------------------------------------------------------------
# Embedding archives


def read_embeddings(path: str | Path) -> EmbeddingSequence:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or not lines[0].startswith("#dim="):
        raise FormatError(f"{path}: missing '#dim=<D>' header")
    try:
        dim = int(lines[0][len("#dim="):])
    except ValueError:
        raise FormatError(f"{path}: malformed dimension header {lines[0]!r}") from None
    if dim <= 0:
        raise FormatError(f"{path}: dimension must be positive, got {dim}")
    segments: list[Segment] = []
    rows: list[list[float]] = []
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 2 + dim:
            raise ParseError(
                f"expected {2 + dim} fields for dim={dim}, got {len(tokens)}", lineno
            )
        try:
            values = [float(t) for t in tokens]
        except ValueError:
            raise ParseError("non-numeric field", lineno) from None
        onset, duration = values[0], values[1]
        if onset < 0 or duration <= 0:
            raise ParseError(f"invalid interval onset={onset} duration={duration}", lineno)
        vec = values[2:]
        if not all(np.isfinite(vec)):
            raise ParseError("non-finite embedding component", lineno)
        segments.append(Segment(onset, duration))
        rows.append(vec)
    vectors = np.array(rows, dtype=np.float64).reshape(len(rows), dim)
    return EmbeddingSequence(path.stem, tuple(segments), vectors)


def write_embeddings(seq: EmbeddingSequence, path: str | Path) -> None:
    """Write an archive; times are quantized to 1 ms, components keep full
    round-trip precision."""
    out = [f"#dim={seq.dim}"]
    for seg, vec in seq.frames:
        if seg.duration < TIME_QUANTUM:
            continue
        comps = " ".join(repr(float(v)) for v in vec)
        out.append(f"{_q(seg.onset):.3f} {_q(seg.duration):.3f} {comps}")
    Path(path).write_text("\n".join(out) + "\n")


# ---------------------------------------------------------------------------
# Posterior streams


def read_posteriors(path: str | Path) -> PosteriorStream:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or not lines[0].startswith("#step="):
        raise FormatError(f"{path}: missing '#step=<seconds>' header")
    try:
        step = float(lines[0][len("#step="):])
    except ValueError:
        raise FormatError(f"{path}: malformed step header {lines[0]!r}") from None
    if step <= 0:
        raise FormatError(f"{path}: frame step must be positive, got {step}")
    values: list[float] = []
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        try:
            v = float(line)
        except ValueError:
            raise ParseError(f"non-numeric posterior {line!r}", lineno) from None
        if not (0.0 <= v <= 1.0) or not np.isfinite(v):
            raise ParseError(f"posterior {v!r} outside [0, 1]", lineno)
        values.append(v)
    return PosteriorStream(path.stem, step, np.array(values, dtype=np.float64))


def write_posteriors(stream: PosteriorStream, path: str | Path) -> None:
    out = [f"#step={stream.frame_step:.3f}"]
    out.extend(f"{v:.6f}" for v in stream.values)
    Path(path).write_text("\n".join(out) + "\n")


# ---------------------------------------------------------------------------
# Trial lists and score files


def read_trials(path: str | Path) -> list[Trial]:
    trials: list[Trial] = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) not in (2, 3):
            raise ParseError(f"expected 2 or 3 fields, got {len(tokens)}", lineno)
        label: int | None = None
        if len(tokens) == 3:
            if tokens[2] not in ("0", "1"):
                raise ParseError(f"label must be 0 or 1, got {tokens[2]!r}", lineno)
            label = int(tokens[2])
        trials.append(Trial(tokens[0], tokens[1], label))
    return trials


def write_trials(trials: Iterable[Trial], path: str | Path) -> None:
    lines = []
    for t in trials:
        if t.label is None:
            lines.append(f"{t.enroll_id} {t.test_id}")
        else:
            lines.append(f"{t.enroll_id} {t.test_id} {t.label}")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_scores(path: str | Path) -> list[tuple[str, str, float]]:
    out: list[tuple[str, str, float]] = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 3:
            raise ParseError(f"expected 3 fields, got {len(tokens)}", lineno)
        try:
            score = float(tokens[2])
        except ValueError:
            raise ParseError(f"non-numeric score {tokens[2]!r}", lineno) from None
        out.append((tokens[0], tokens[1], score))
    return out


def write_scores(scores: Iterable[tuple[str, str, float]], path: str | Path) -> None:
    lines = [f"{e} {t} {s:.6f}" for e, t, s in scores]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


# ---------------------------------------------------------------------------
# .lab segment lists and window label tables


def read_lab(path: str | Path) -> Timeline:
    segments: list[Segment] = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise ParseError(f"expected '<onset> <end>', got {len(tokens)} fields", lineno)
        try:
            onset, end = float(tokens[0]), float(tokens[1])
        except ValueError:
            raise ParseError("non-numeric time", lineno) from None
        if onset < 0 or end <= onset:
            raise ParseError(f"invalid interval [{onset}, {end})", lineno)
        segments.append(Segment(onset, end - onset))
    return Timeline(segments)


def write_lab(timeline: Timeline, path: str | Path) -> None:
    lines = [
        f"{_q(seg.onset):.3f} {_q(seg.end):.3f}"
        for seg in timeline
        if seg.duration >= TIME_QUANTUM
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_labels(path: str | Path) -> list[tuple[Segment, int]]:
    out: list[tuple[Segment, int]] = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 3:
            raise ParseError(
                f"expected '<onset> <duration> <label>', got {len(tokens)} fields", lineno
            )
        try:
            onset, duration = float(tokens[0]), float(tokens[1])
            label = int(tokens[2])
        except ValueError:
            raise ParseError("non-numeric field", lineno) from None
        if onset < 0 or duration <= 0:
            raise ParseError(f"invalid interval onset={onset} duration={duration}", lineno)
        if label < 0:
            raise ParseError(f"label must be non-negative, got {label}", lineno)
        out.append((Segment(onset, duration), label))
    return out


def write_labels(
    rows: Iterable[tuple[Segment, int]] | tuple[Sequence[Segment], Sequence[int]],
    path: str | Path,
) -> None:
    if isinstance(rows, tuple) and len(rows) == 2 and not isinstance(rows[0], Segment):
        rows = list(zip(*rows))
    lines = [
        f"{_q(seg.onset):.3f} {_q(seg.duration):.3f} {int(label)}"
        for seg, label in rows
        if seg.duration >= TIME_QUANTUM
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))
