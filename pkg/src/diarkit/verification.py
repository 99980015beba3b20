"""Speaker verification scoring: cosine scores, adaptive score
normalization against an imposter cohort, quality-aware calibration
features, logistic calibration and weighted score fusion."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import expit

from .errors import (
    ConfigurationError,
    DegenerateInputError,
    FitError,
    ShapeError,
)
from .records import Trial

__all__ = [
    "SIGMA_FLOOR",
    "Cohort",
    "CohortStats",
    "UtteranceMeta",
    "CalibrationModel",
    "QMF_FEATURE_NAMES",
    "cosine_score",
    "top_score_stats",
    "cohort_stats",
    "as_norm",
    "qmf_features",
    "fit_calibration",
    "apply_calibration",
    "fuse",
    "speaker_average_cohort",
]

#: Lower bound applied to cohort score stddevs before they divide anything.
SIGMA_FLOOR = 1e-6

QMF_FEATURE_NAMES: tuple[str, ...] = (
    "asnorm_score",
    "log_enroll_duration",
    "log_test_duration",
    "enroll_cohort_mean",
    "test_cohort_mean",
)


@dataclass(frozen=True, eq=False)
class Cohort:
    """Imposter embeddings used for adaptive score normalization.

    Rows must be unit L2-normalized (within 1e-6); build files with
    speaker_average_cohort or normalize before constructing.
    """

    vectors: np.ndarray  # (N, D) float64

    def __post_init__(self) -> None:
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] == 0:
            raise ShapeError(f"cohort must be a non-empty (N, D) matrix, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("cohort vectors must be finite")
        norms = np.linalg.norm(v, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ValueError("cohort rows must have unit L2 norm (within 1e-6)")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "vectors", v)

    def __len__(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])


@dataclass(frozen=True)
class CohortStats:
    """Mean and stddev of an utterance's top cohort scores."""

    utterance_id: str
    mu: float
    sigma: float
    top_k: int

    def __post_init__(self) -> None:
        if not math.isfinite(self.mu) or not math.isfinite(self.sigma):
            raise ValueError("cohort statistics must be finite")
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")
        if self.sigma < SIGMA_FLOOR:
            object.__setattr__(self, "sigma", SIGMA_FLOOR)


@dataclass(frozen=True)
class UtteranceMeta:
    """Side information about one utterance needed by quality features."""

    utterance_id: str
    duration: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.duration) or self.duration <= 0:
            raise DegenerateInputError(
                f"utterance {self.utterance_id!r} has non-positive duration {self.duration!r}"
            )


def cosine_score(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of two embeddings, clipped into [-1, 1]."""
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise ShapeError(f"embedding dimensions differ: {a.shape[0]} vs {b.shape[0]}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateInputError("cosine score undefined for a zero vector")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def top_score_stats(scores: np.ndarray, k: int) -> tuple[float, float]:
    """Mean and floored population stddev of the k largest scores."""
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if k < 1:
        raise ConfigurationError(f"top-k must be >= 1, got {k}")
    if k > scores.shape[0]:
        raise ConfigurationError(
            f"top-k ({k}) exceeds number of cohort scores ({scores.shape[0]})"
        )
    top = np.partition(scores, scores.shape[0] - k)[scores.shape[0] - k :]
    mu = float(top.mean())
    sigma = float(top.std())
    return mu, max(sigma, SIGMA_FLOOR)


def cohort_stats(
    embedding: np.ndarray, cohort: Cohort, k: int = 300, utterance_id: str = ""
) -> CohortStats:
    """Score an embedding against every cohort vector and keep the top-k stats."""
    e = np.asarray(embedding, dtype=np.float64).reshape(-1)
    if e.shape[0] != cohort.dim:
        raise ShapeError(
            f"embedding dim {e.shape[0]} does not match cohort dim {cohort.dim}"
        )
    norm = np.linalg.norm(e)
    if norm == 0.0:
        raise DegenerateInputError("cohort scoring undefined for a zero vector")
    scores = cohort.vectors @ (e / norm)
    mu, sigma = top_score_stats(scores, k)
    return CohortStats(utterance_id, mu, sigma, k)


def as_norm(raw: float, enroll_stats: CohortStats, test_stats: CohortStats) -> float:
    """Symmetric adaptive score normalization of one raw trial score."""
    return 0.5 * (
        (raw - enroll_stats.mu) / enroll_stats.sigma
        + (raw - test_stats.mu) / test_stats.sigma
    )


def qmf_features(
    raw: float,
    enroll_meta: UtteranceMeta,
    test_meta: UtteranceMeta,
    enroll_stats: CohortStats,
    test_stats: CohortStats,
) -> np.ndarray:
    """Quality-aware feature vector for calibration.

    Features, in order: normalized score, log enroll duration, log test
    duration, enroll cohort mean, test cohort mean.
    """
    return np.array(
        [
            as_norm(raw, enroll_stats, test_stats),
            math.log(enroll_meta.duration),
            math.log(test_meta.duration),
            enroll_stats.mu,
            test_stats.mu,
        ]
    )


@dataclass(frozen=True, eq=False)
class CalibrationModel:
    """Affine score combiner fitted with logistic regression."""

    weights: np.ndarray
    bias: float
    feature_names: tuple[str, ...]

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if w.shape[0] != len(self.feature_names):
            raise ShapeError(
                f"{w.shape[0]} weights for {len(self.feature_names)} feature names"
            )
        if not np.all(np.isfinite(w)) or not math.isfinite(self.bias):
            raise ValueError("calibration parameters must be finite")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def to_json(self) -> str:
        return json.dumps(
            {
                "feature_names": list(self.feature_names),
                "weights": [float(v) for v in self.weights],
                "bias": float(self.bias),
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "CalibrationModel":
        try:
            data = json.loads(text)
            return cls(
                weights=np.array(data["weights"], dtype=np.float64),
                bias=float(data["bias"]),
                feature_names=tuple(data["feature_names"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"malformed calibration model: {exc}") from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "CalibrationModel":
        return cls.from_json(Path(path).read_text())


def _nll_and_grad(
    design: np.ndarray, y: np.ndarray, w: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    z = design @ w
    # mean negative log-likelihood, numerically stable for large |z|
    nll = float(np.mean(np.logaddexp(0.0, z) - y * z))
    p = expit(z)
    grad = design.T @ (p - y) / y.shape[0]
    return nll, grad, p


def fit_calibration(
    trials: Sequence[Trial],
    features: np.ndarray,
    feature_names: Sequence[str] = QMF_FEATURE_NAMES,
    tol: float = 1e-8,
    max_iters: int = 1000,
) -> CalibrationModel:
    """Fit logistic-regression calibration by damped Newton iterations.

    Runs until the mean-loss gradient norm drops to tol or max_iters is
    reached; normalizing by the trial count makes the fit invariant to
    duplicating the training set. Requires both classes to be present.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise ShapeError(f"features must be (trials, F), got shape {features.shape}")
    if len(trials) != features.shape[0]:
        raise ShapeError(f"{len(trials)} trials but {features.shape[0]} feature rows")
    if features.shape[1] != len(feature_names):
        raise ShapeError(
            f"{features.shape[1]} feature columns for {len(feature_names)} names"
        )
    if not np.all(np.isfinite(features)):
        raise FitError("calibration features must be finite")
    labels = []
    for t in trials:
        if t.label is None:
            raise FitError(f"trial {t.enroll_id}/{t.test_id} has no label")
        labels.append(t.label)
    y = np.array(labels, dtype=np.float64)
    if y.min() == y.max():
        raise FitError("calibration needs both target and non-target trials")

    design = np.hstack([features, np.ones((features.shape[0], 1))])
    w = np.zeros(design.shape[1])
    nll, grad, p = _nll_and_grad(design, y, w)
    for _ in range(max_iters):
        if np.linalg.norm(grad) <= tol:
            break
        s = p * (1.0 - p)
        hess = (design.T * s) @ design / y.shape[0]
        hess[np.diag_indices_from(hess)] += 1e-10
        step = np.linalg.solve(hess, grad)
        # backtracking keeps the mean loss monotone even on separable data
        scale = 1.0
        for _ in range(60):
            cand = w - scale * step
            cand_nll, cand_grad, cand_p = _nll_and_grad(design, y, cand)
            if cand_nll <= nll:
                break
            scale *= 0.5
        else:
            break
        w, nll, grad, p = cand, cand_nll, cand_grad, cand_p

    return CalibrationModel(
        weights=w[:-1], bias=float(w[-1]), feature_names=tuple(feature_names)
    )


def apply_calibration(model: CalibrationModel, features: np.ndarray) -> float:
    """Affine projection of one feature vector onto a calibrated score."""
    f = np.asarray(features, dtype=np.float64).reshape(-1)
    if f.shape[0] != model.weights.shape[0]:
        raise ShapeError(
            f"feature vector length {f.shape[0]} does not match model "
            f"({model.weights.shape[0]} weights)"
        )
    return float(model.weights @ f + model.bias)


def fuse(scores: Sequence[float], weights: Sequence[float]) -> float:
    """Weight-normalized linear combination of per-system scores."""
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if s.shape != w.shape:
        raise ShapeError(f"{s.shape[0]} scores but {w.shape[0]} weights")
    if s.shape[0] == 0:
        raise ConfigurationError("fusion needs at least one system")
    if np.any(w < 0):
        raise ConfigurationError("fusion weights must be non-negative")
    total = w.sum()
    if total <= 0:
        raise ConfigurationError("fusion weights must not all be zero")
    return float((w @ s) / total)


def speaker_average_cohort(
    per_speaker: Mapping[str, np.ndarray] | Iterable[tuple[str, np.ndarray]],
    max_per_speaker: int = 30,
    rng: np.random.Generator | None = None,
) -> Cohort:
    """Build a cohort with one unit vector per speaker.

    For each speaker at most max_per_speaker utterance vectors are sampled
    without replacement (seeded rng for reproducibility), averaged, and the
    average is L2-normalized. Speakers are processed in sorted-id order so
    the output is deterministic for a fixed seed.
    """
    if max_per_speaker < 1:
        raise ConfigurationError(f"max_per_speaker must be >= 1, got {max_per_speaker}")
    rng = rng or np.random.default_rng(0)
    items = dict(per_speaker)
    if not items:
        raise DegenerateInputError("no speakers supplied for cohort construction")
    rows = []
    for speaker in sorted(items):
        vectors = np.asarray(items[speaker], dtype=np.float64)
        if vectors.ndim == 1:
            vectors = vectors[None, :]
        if vectors.shape[0] == 0:
            raise DegenerateInputError(f"speaker {speaker!r} has no utterance vectors")
        if vectors.shape[0] > max_per_speaker:
            idx = rng.choice(vectors.shape[0], size=max_per_speaker, replace=False)
            vectors = vectors[np.sort(idx)]
        mean = vectors.mean(axis=0)
        norm = np.linalg.norm(mean)
        if norm == 0.0:
            raise DegenerateInputError(f"speaker {speaker!r} averages to a zero vector")
        rows.append(mean / norm)
    return Cohort(np.vstack(rows))
