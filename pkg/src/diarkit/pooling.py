"""Frame-level pooling of channel-by-time feature matrices.

Implements plain statistics pooling (per-channel mean and stddev over
time), grouped channel shuffling, multi-head attentive pooling with one
scalar logit per head and frame, and the shuffled variant that pools the
concatenation of the input with its channel-shuffled copy.

Matrices are laid out (C, T): rows are channels, columns are frames.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, ShapeError

__all__ = [
    "PoolingConfig",
    "stats_pool",
    "channel_shuffle",
    "mha_attention_weights",
    "mha_pool",
    "shuffled_mha_pool",
]


@dataclass(frozen=True, eq=False)
class PoolingConfig:
    """Attention parameters for multi-head pooling.

    weights has one row per head: (H, G) without per-group statistics in
    the attention input, (H, 3G) with them, where G is the channel count
    of one head's group. None means zero parameters, which makes the
    attention uniform over frames.
    """

    heads: int = 8
    epsilon: float = 1e-8
    weights: np.ndarray | None = None
    biases: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.heads < 1:
            raise ValueError(f"heads must be >= 1, got {self.heads}")
        if not (self.epsilon > 0):
            raise ValueError(f"epsilon must be positive, got {self.epsilon!r}")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.float64)
            if w.ndim != 2 or w.shape[0] != self.heads:
                raise ShapeError(
                    f"weights must be (heads, group_width), got {w.shape} for {self.heads} heads"
                )
            if not np.all(np.isfinite(w)):
                raise ValueError("attention weights must be finite")
            object.__setattr__(self, "weights", w)
        if self.biases is not None:
            b = np.asarray(self.biases, dtype=np.float64)
            if b.shape != (self.heads,):
                raise ShapeError(f"biases must be ({self.heads},), got {b.shape}")
            if not np.all(np.isfinite(b)):
                raise ValueError("attention biases must be finite")
            object.__setattr__(self, "biases", b)

    @classmethod
    def random(
        cls,
        channels: int,
        heads: int = 8,
        with_stats: bool = False,
        rng: np.random.Generator | None = None,
        scale: float = 1.0,
        epsilon: float = 1e-8,
    ) -> "PoolingConfig":
        """Convenience constructor with Gaussian attention parameters."""
        if channels % heads:
            raise ShapeError(f"{channels} channels not divisible by {heads} heads")
        rng = rng or np.random.default_rng()
        width = (3 if with_stats else 1) * (channels // heads)
        return cls(
            heads=heads,
            epsilon=epsilon,
            weights=rng.normal(scale=scale, size=(heads, width)),
            biases=rng.normal(scale=scale, size=heads),
        )


def _check_frames(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"frame matrix must be 2-D (C, T), got shape {x.shape}")
    if x.shape[1] == 0:
        raise DegenerateInputError("frame matrix has no frames")
    if not np.all(np.isfinite(x)):
        raise ValueError("frame matrix must be finite")
    return x


def _floored_std(var: np.ndarray, epsilon: float) -> np.ndarray:
    # Variance is clamped at epsilon before the square root, so constant
    # channels give sqrt(epsilon) rather than zero.
    return np.sqrt(np.maximum(var, epsilon))


def stats_pool(x: np.ndarray, epsilon: float = 1e-8) -> np.ndarray:
    """Per-channel mean and epsilon-floored population stddev over time.

    Returns a vector of length 2C: all channel means followed by all
    channel stddevs.
    """
    x = _check_frames(x)
    mean = x.mean(axis=1)
    var = np.mean((x - mean[:, None]) ** 2, axis=1)
    return np.concatenate([mean, _floored_std(var, epsilon)])


def channel_shuffle(x: np.ndarray, groups: int) -> np.ndarray:
    """Interleave channel groups: input channel g*(C/groups)+k moves to k*groups+g."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"frame matrix must be 2-D (C, T), got shape {x.shape}")
    channels = x.shape[0]
    if groups < 1 or channels % groups:
        raise ShapeError(f"{channels} channels not divisible into {groups} groups")
    per = channels // groups
    return x.reshape(groups, per, x.shape[1]).transpose(1, 0, 2).reshape(channels, x.shape[1])


def _group_attention_input(group: np.ndarray, with_stats: bool, epsilon: float) -> np.ndarray:
    if not with_stats:
        return group
    mean = group.mean(axis=1)
    var = np.mean((group - mean[:, None]) ** 2, axis=1)
    std = _floored_std(var, epsilon)
    t = group.shape[1]
    return np.concatenate(
        [group, np.repeat(mean[:, None], t, axis=1), np.repeat(std[:, None], t, axis=1)]
    )


def mha_attention_weights(
    x: np.ndarray, config: PoolingConfig, with_stats: bool = False
) -> np.ndarray:
    """Softmax attention over frames for each head; shape (H, T).

    Each head owns one contiguous channel group. Its frame logit is an
    affine projection of the group's frame vector, optionally concatenated
    with the group's global mean and stddev.
    """
    x = _check_frames(x)
    channels, t = x.shape
    h = config.heads
    if channels % h:
        raise ShapeError(f"{channels} channels not divisible by {h} heads")
    g = channels // h
    width = (3 if with_stats else 1) * g
    weights = config.weights
    if weights is None:
        weights = np.zeros((h, width))
    if weights.shape != (h, width):
        raise ShapeError(
            f"attention weights shape {weights.shape} does not match (heads={h}, width={width})"
        )
    biases = config.biases if config.biases is not None else np.zeros(h)

    out = np.empty((h, t))
    for i in range(h):
        group = x[i * g : (i + 1) * g]
        feats = _group_attention_input(group, with_stats, config.epsilon)
        logits = weights[i] @ feats + biases[i]
        logits = logits - logits.max()
        e = np.exp(logits)
        out[i] = e / e.sum()
    return out


def mha_pool(x: np.ndarray, config: PoolingConfig, with_stats: bool = False) -> np.ndarray:
    """Multi-head attentive statistics pooling; output length 2C.

    The output is all attention-weighted channel means followed by all
    attention-weighted channel stddevs, so zero attention parameters
    reproduce stats_pool exactly.
    """
    x = _check_frames(x)
    attn = mha_attention_weights(x, config, with_stats)
    h = config.heads
    g = x.shape[0] // h
    means = np.empty(x.shape[0])
    stds = np.empty(x.shape[0])
    for i in range(h):
        group = x[i * g : (i + 1) * g]
        w = attn[i]
        m = group @ w
        var = ((group - m[:, None]) ** 2) @ w
        means[i * g : (i + 1) * g] = m
        stds[i * g : (i + 1) * g] = _floored_std(var, config.epsilon)
    return np.concatenate([means, stds])


def shuffled_mha_pool(
    x: np.ndarray, config: PoolingConfig, with_stats: bool = True
) -> np.ndarray:
    """Pool the concatenation of x with its channel-shuffled copy; output 4C.

    The shuffle uses one group per attention head. with_stats=True appends
    each group's global statistics to the attention input (the richer
    variant); with_stats=False keeps the plain attention input.
    """
    x = _check_frames(x)
    stacked = np.concatenate([x, channel_shuffle(x, config.heads)], axis=0)
    return mha_pool(stacked, config, with_stats=with_stats)
