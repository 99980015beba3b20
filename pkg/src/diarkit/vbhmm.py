"""Variational re-segmentation of window embeddings with a speaker HMM.

Each speaker keeps an isotropic Gaussian posterior over a latent mean
direction whose precision grows with soft occupancy. Frame scores are the
expected log-likelihood under that posterior; an optional mode replaces
the raw frame-vs-speaker dot product with its score normalized against an
imposter cohort. State sequences are smoothed by a sticky HMM whose
posteriors come from exact forward-backward recursions in the log domain.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import (
    ComputationError,
    ConfigurationError,
    DegenerateInputError,
    ShapeError,
)
from .records import EmbeddingSequence
from .verification import SIGMA_FLOOR, Cohort, cohort_stats

__all__ = [
    "VbConfig",
    "SpeakerState",
    "VbDiagnostics",
    "vb_init",
    "vb_mstep",
    "vb_emission",
    "vb_estep",
    "vb_resegment",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VbConfig:
    """Parameters of the variational re-segmentation.

    fa scales frame log-likelihoods, fb divides occupancy when it is
    turned into posterior precision, fc rescales embeddings before
    scoring. loop_prob is the HMM self-transition probability. Speakers
    whose soft occupancy drops below min_occupancy frames are removed
    between iterations. asnorm switches the frame score to its
    cohort-normalized form; mu_sigma_literal instead normalizes by the
    mean and stddev of the speaker centroid's own components.
    """

    fa: float = 0.3
    fb: float = 17.0
    fc: float = 1.0
    loop_prob: float = 0.99
    max_iters: int = 20
    elbo_tol: float = 1e-4
    min_occupancy: float = 1.0
    asnorm: bool = False
    cohort: Cohort | None = None
    cohort_top_k: int = 300
    mu_sigma_literal: bool = False

    def __post_init__(self) -> None:
        for name in ("fa", "fb", "fc"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigurationError(f"{name} must be positive, got {v!r}")
        if not (0.0 < self.loop_prob < 1.0):
            raise ConfigurationError(f"loop_prob must be in (0, 1), got {self.loop_prob!r}")
        if self.max_iters < 1:
            raise ConfigurationError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.elbo_tol < 0:
            raise ConfigurationError(f"elbo_tol must be >= 0, got {self.elbo_tol!r}")
        if self.min_occupancy < 0:
            raise ConfigurationError(
                f"min_occupancy must be >= 0, got {self.min_occupancy!r}"
            )
        if self.cohort_top_k < 1:
            raise ConfigurationError(f"cohort_top_k must be >= 1, got {self.cohort_top_k}")
        if self.asnorm and not self.mu_sigma_literal and self.cohort is None:
            raise ConfigurationError("asnorm mode needs a cohort (or mu_sigma_literal)")


@dataclass(frozen=True, eq=False)
class SpeakerState:
    """Posterior over one speaker's latent mean plus derived statistics.

    mean/precision describe the isotropic Gaussian posterior; centroid is
    the occupancy-weighted average embedding; score_mean/score_std are the
    normalization statistics used by the cohort-normalized frame score.
    """

    mean: np.ndarray
    precision: float
    centroid: np.ndarray
    occupancy: float
    score_mean: float = 0.0
    score_std: float = 1.0


@dataclass
class VbDiagnostics:
    """Per-run bookkeeping: objective trace, iteration and speaker counts."""

    objective: list[float] = field(default_factory=list)
    iterations: int = 0
    initial_speakers: int = 0
    final_speakers: int = 0
    messages: list[str] = field(default_factory=list)


def _check_sequence(seq: EmbeddingSequence) -> np.ndarray:
    if len(seq) == 0:
        raise DegenerateInputError("cannot resegment an empty embedding sequence")
    return seq.vectors


def vb_init(
    labels: np.ndarray, seq: EmbeddingSequence, config: VbConfig
) -> tuple[np.ndarray, list[SpeakerState], np.ndarray]:
    """One-hot responsibilities from hard labels, one M-step, uniform weights.

    Returns (gamma, states, pi). Labels must be 0..S-1 with every value
    present at least once.
    """
    vectors = _check_sequence(seq)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.shape[0] != vectors.shape[0]:
        raise ShapeError(f"{labels.shape[0]} labels for {vectors.shape[0]} frames")
    if labels.min() < 0:
        raise ValueError("labels must be non-negative")
    n_speakers = int(labels.max()) + 1
    present = np.unique(labels)
    if present.shape[0] != n_speakers:
        raise ValueError("labels must be dense 0..S-1 with every speaker present")
    gamma = np.zeros((labels.shape[0], n_speakers))
    gamma[np.arange(labels.shape[0]), labels] = 1.0
    states = vb_mstep(gamma, seq, config)
    pi = np.full(n_speakers, 1.0 / n_speakers)
    return gamma, states, pi


def vb_mstep(
    gamma: np.ndarray, seq: EmbeddingSequence, config: VbConfig
) -> list[SpeakerState]:
    """Update per-speaker posteriors from soft responsibilities.

    For speaker s with occupancy n_s = sum_t gamma[t, s]:
      precision = 1 + (fa / fb) * n_s
      mean      = (fa / fb) / precision * sum_t gamma[t, s] * (fc * e_t)
      centroid  = sum_t gamma[t, s] * e_t / n_s

    A speaker with zero occupancy gets a zeroed state (flagged for
    dropping by the caller). In cohort-normalized mode the centroid is
    scored against the cohort to produce score_mean/score_std; the literal
    mode takes the mean and stddev of the centroid's own components.
    """
    vectors = _check_sequence(seq)
    gamma = np.asarray(gamma, dtype=np.float64)
    if gamma.ndim != 2 or gamma.shape[0] != vectors.shape[0]:
        raise ShapeError(
            f"gamma must be (T={vectors.shape[0]}, S), got shape {gamma.shape}"
        )
    if not np.all(np.isfinite(gamma)) or gamma.min() < 0:
        raise ComputationError("responsibilities must be finite and non-negative")

    occupancy = gamma.sum(axis=0)
    precision = 1.0 + (config.fa / config.fb) * occupancy
    weighted = gamma.T @ vectors  # (S, D)
    scale = config.fa / config.fb * config.fc
    states: list[SpeakerState] = []
    for s in range(gamma.shape[1]):
        n_s = float(occupancy[s])
        if n_s == 0.0:
            states.append(
                SpeakerState(
                    mean=np.zeros(vectors.shape[1]),
                    precision=1.0,
                    centroid=np.zeros(vectors.shape[1]),
                    occupancy=0.0,
                )
            )
            continue
        mean = scale / precision[s] * weighted[s]
        centroid = weighted[s] / n_s
        score_mean, score_std = 0.0, 1.0
        if config.asnorm:
            score_mean, score_std = _score_normalizers(centroid, config)
        states.append(
            SpeakerState(
                mean=mean,
                precision=float(precision[s]),
                centroid=centroid,
                occupancy=n_s,
                score_mean=score_mean,
                score_std=score_std,
            )
        )
    return states


def _score_normalizers(centroid: np.ndarray, config: VbConfig) -> tuple[float, float]:
    if config.mu_sigma_literal:
        mu = float(centroid.mean())
        sigma = float(centroid.std())
    else:
        stats = cohort_stats(centroid, config.cohort, k=config.cohort_top_k)
        mu, sigma = stats.mu, stats.sigma
    if sigma <= 0.0:
        logger.warning("score stddev %g floored at %g", sigma, SIGMA_FLOOR)
        sigma = SIGMA_FLOOR
    return mu, sigma


def vb_emission(
    states: list[SpeakerState], seq: EmbeddingSequence, config: VbConfig
) -> np.ndarray:
    """Expected frame log-likelihoods, shape (T, S), constants dropped.

    Plain mode scores frame t against speaker s as
      fa * (mean_s . (fc * e_t) - 0.5 * (D / precision_s + |mean_s|^2)).

    Cohort-normalized mode replaces the dot-product term by
      (fa * fc^2 / fb) / precision_s * ((centroid_s . e_t - score_mean_s)
      / score_std_s) * occupancy_s,
    which is the same quantity with the raw centroid score replaced by its
    normalized form.
    """
    vectors = _check_sequence(seq)
    if not states:
        raise DegenerateInputError("emission needs at least one speaker state")
    dim = vectors.shape[1]
    t = vectors.shape[0]
    loglik = np.empty((t, len(states)))
    for s, state in enumerate(states):
        if state.mean.shape[0] != dim:
            raise ShapeError(
                f"speaker state dim {state.mean.shape[0]} does not match frames ({dim})"
            )
        penalty = 0.5 * (dim / state.precision + float(state.mean @ state.mean))
        if config.asnorm:
            sigma = state.score_std
            if sigma <= 0.0:
                logger.warning("score stddev %g floored at %g", sigma, SIGMA_FLOOR)
                sigma = SIGMA_FLOOR
            raw = vectors @ state.centroid
            match = (
                (config.fa * config.fc**2 / config.fb)
                / state.precision
                * ((raw - state.score_mean) / sigma)
                * state.occupancy
            )
        else:
            match = (config.fc * vectors) @ state.mean
        loglik[:, s] = config.fa * (match - penalty)
    if not np.all(np.isfinite(loglik)):
        raise ComputationError("emission log-likelihoods are not finite")
    return loglik


def _log_transitions(pi: np.ndarray, loop_prob: float) -> np.ndarray:
    """Row-stochastic transition matrix: sticky diagonal, off-diagonal
    proportional to the stationary weights of the other states."""
    s = pi.shape[0]
    if s == 1:
        return np.zeros((1, 1))
    trans = np.empty((s, s))
    for i in range(s):
        others = np.delete(pi, i)
        total = others.sum()
        if total <= 0.0:
            row = np.full(s, (1.0 - loop_prob) / (s - 1))
        else:
            row = np.empty(s)
            row[np.arange(s) != i] = (1.0 - loop_prob) * np.delete(pi, i) / total
        row[i] = loop_prob
        trans[i] = row
    with np.errstate(divide="ignore"):
        return np.log(trans)


def vb_estep(
    loglik: np.ndarray, pi: np.ndarray, config: VbConfig
) -> tuple[np.ndarray, float]:
    """Exact HMM posteriors by log-domain forward-backward.

    Returns (gamma, log_evidence) where gamma rows sum to one and
    log_evidence is the forward normalizer. The transition model keeps a
    state with probability loop_prob and otherwise moves to another state
    with probability proportional to that state's weight.
    """
    loglik = np.asarray(loglik, dtype=np.float64)
    if loglik.ndim != 2:
        raise ShapeError(f"loglik must be (T, S), got shape {loglik.shape}")
    if not np.all(np.isfinite(loglik)):
        raise ComputationError("emission log-likelihoods must be finite")
    t, s = loglik.shape
    pi = np.asarray(pi, dtype=np.float64).reshape(-1)
    if pi.shape[0] != s:
        raise ShapeError(f"{pi.shape[0]} weights for {s} speakers")
    if np.any(pi < 0) or pi.sum() <= 0:
        raise ValueError("speaker weights must be non-negative and sum to > 0")
    pi = pi / pi.sum()

    if s == 1:
        return np.ones((t, 1)), float(loglik.sum())

    log_trans = _log_transitions(pi, config.loop_prob)
    with np.errstate(divide="ignore"):
        log_pi = np.log(pi)

    fwd = np.empty((t, s))
    fwd[0] = log_pi + loglik[0]
    for i in range(1, t):
        fwd[i] = loglik[i] + logsumexp(fwd[i - 1][:, None] + log_trans, axis=0)
    log_evidence = float(logsumexp(fwd[-1]))

    bwd = np.zeros((t, s))
    for i in range(t - 2, -1, -1):
        bwd[i] = logsumexp(log_trans + (loglik[i + 1] + bwd[i + 1])[None, :], axis=1)

    log_gamma = fwd + bwd - log_evidence
    gamma = np.exp(log_gamma)
    gamma /= gamma.sum(axis=1, keepdims=True)
    return gamma, log_evidence


def _kl_penalty(states: list[SpeakerState], config: VbConfig) -> float:
    """Divergence of the speaker posteriors from their unit-Gaussian prior,
    scaled the way it enters the optimized objective."""
    total = 0.0
    for state in states:
        d = state.mean.shape[0]
        p = state.precision
        total += 0.5 * (d / p + float(state.mean @ state.mean) - d + d * math.log(p))
    return config.fb * total


def vb_resegment(
    labels: np.ndarray, seq: EmbeddingSequence, config: VbConfig
) -> tuple[np.ndarray, VbDiagnostics]:
    """Iterate speaker updates and HMM smoothing from an initial labelling.

    Each iteration refits speaker posteriors from the current
    responsibilities, rescores all frames and recomputes exact HMM
    posteriors. Speakers whose occupancy falls below min_occupancy frames
    are removed between iterations; on such a change the state weights are
    rebuilt from the surviving occupancies, otherwise they stay fixed so
    the loop remains exact coordinate ascent. Stops when the variational
    objective (the forward log-evidence minus the weighted prior
    divergence of the speaker posteriors) improves by less than elbo_tol,
    or after max_iters.

    Returns (labels, diagnostics); labels are argmax responsibilities,
    renumbered 0..K-1 in order of first occurrence.
    """
    from .clustering import _dense_labels

    diag = VbDiagnostics()
    gamma, _, pi = vb_init(labels, seq, config)
    diag.initial_speakers = gamma.shape[1]

    previous = -math.inf
    for iteration in range(config.max_iters):
        states = vb_mstep(gamma, seq, config)
        loglik = vb_emission(states, seq, config)
        gamma, log_evidence = vb_estep(loglik, pi, config)
        objective = log_evidence - _kl_penalty(states, config)
        diag.objective.append(objective)
        diag.iterations = iteration + 1

        occupancy = gamma.sum(axis=0)
        keep = occupancy >= config.min_occupancy
        if not keep.any():
            keep[int(np.argmax(occupancy))] = True
        if not keep.all():
            dropped = int((~keep).sum())
            diag.messages.append(
                f"iteration {iteration + 1}: dropped {dropped} speaker(s) "
                f"below occupancy {config.min_occupancy:g}"
            )
            gamma = gamma[:, keep]
            row_mass = gamma.sum(axis=1, keepdims=True)
            empty_rows = row_mass[:, 0] <= 0.0
            if empty_rows.any():
                gamma[empty_rows] = 1.0 / gamma.shape[1]
                row_mass = gamma.sum(axis=1, keepdims=True)
            gamma = gamma / row_mass
            occupancy = gamma.sum(axis=0)
            # The old weights refer to a different state set, so rebuild
            # them from the surviving occupancies. While the speaker set
            # is stable the weights stay put: each iteration is then an
            # exact coordinate-ascent step and the recorded objective
            # cannot decrease (moving the weights every iteration loses
            # that guarantee).
            pi = occupancy / occupancy.sum()

        if objective - previous < config.elbo_tol:
            break
        previous = objective

    diag.final_speakers = gamma.shape[1]
    return _dense_labels(np.argmax(gamma, axis=1)), diag
