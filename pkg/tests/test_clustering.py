"""Tests for sliding-window cutting and agglomerative clustering."""

import numpy as np
import pytest

from diarkit import (
    AhcConfig,
    ConfigurationError,
    DegenerateInputError,
    EmbeddingSequence,
    Segment,
    Timeline,
    WindowingConfig,
    ahc,
    make_windows,
    segment_windows,
)


def _seq(vectors, step=0.25, window=1.5):
    vectors = np.asarray(vectors, dtype=np.float64)
    segs = [Segment(i * step, window) for i in range(vectors.shape[0])]
    return EmbeddingSequence("rec", tuple(segs), vectors)


# ---------------------------------------------------------------------------
# windowing


def test_windows_default_two_seconds():
    got = segment_windows(Segment(0.0, 2.0), WindowingConfig())
    pairs = [(round(w.onset, 10), round(w.end, 10)) for w in got]
    assert pairs == [
        (0.0, 1.5),
        (0.25, 1.75),
        (0.5, 2.0),
        (0.75, 2.0),
        (1.0, 2.0),
        (1.25, 2.0),
        (1.5, 2.0),
        (1.75, 2.0),
    ]


def test_windows_short_segment_single_window():
    seg = Segment(3.0, 0.8)
    assert segment_windows(seg, WindowingConfig()) == [seg]


def test_windows_segment_equal_to_window_length():
    got = segment_windows(Segment(1.0, 1.5), WindowingConfig())
    assert len(got) == 6
    assert got[0] == Segment(1.0, 1.5)
    assert got[-1].end == pytest.approx(2.5, abs=1e-12)


def test_windows_stop_when_residual_below_hop():
    # 1.6s of speech: the last qualifying onset is 1.25 (residual 0.35);
    # an onset of 1.5 would leave only 0.1s, under one hop.
    got = segment_windows(Segment(0.0, 1.6), WindowingConfig())
    residuals = [round(1.6 - w.onset, 10) for w in got]
    assert min(residuals) >= 0.25
    assert len(got) == 6


def test_windows_cover_segment_and_stay_inside():
    rng = np.random.default_rng(40)
    cfg = WindowingConfig()
    for _ in range(50):
        seg = Segment(float(rng.uniform(0, 30)), float(rng.uniform(0.05, 12.0)))
        windows = segment_windows(seg, cfg)
        assert windows, seg
        for w in windows:
            assert w.onset >= seg.onset - 1e-12
            assert w.end <= seg.end + 1e-12
            assert w.duration <= cfg.window + 1e-12
        covered = Timeline(windows)
        assert covered.duration == pytest.approx(seg.duration, abs=1e-9)


def test_make_windows_concatenates_in_time_order():
    speech = Timeline([Segment(0.0, 0.5), Segment(5.0, 2.0)])
    got = make_windows(speech, WindowingConfig())
    assert got[0] == Segment(0.0, 0.5)
    assert len(got) == 1 + 8
    onsets = [w.onset for w in got]
    assert onsets == sorted(onsets)


def test_windowing_config_validation():
    with pytest.raises(ConfigurationError):
        WindowingConfig(window=0.0)
    with pytest.raises(ConfigurationError):
        WindowingConfig(step=0.0)
    with pytest.raises(ConfigurationError):
        WindowingConfig(window=1.0, step=1.5)


# ---------------------------------------------------------------------------
# agglomerative clustering


def _ahc_oracle(vectors, threshold):
    """Replay of the merge loop from first principles.

    Cluster pair score is the mean cosine similarity over all cross-pairs
    of original members; ties resolve to the smallest (i, j) over active
    cluster indices.
    """
    unit = vectors / np.linalg.norm(vectors, axis=1, keepdims=True)
    sim = np.clip(unit @ unit.T, -1.0, 1.0)
    clusters = [[i] for i in range(vectors.shape[0])]
    while len(clusters) > 1:
        best = -np.inf
        pick = None
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                score = float(
                    np.mean([sim[a, b] for a in clusters[i] for b in clusters[j]])
                )
                if score > best + 1e-15:
                    best = score
                    pick = (i, j)
        if best < threshold:
            break
        i, j = pick
        clusters[i].extend(clusters[j])
        del clusters[j]
    labels = np.empty(vectors.shape[0], dtype=np.int64)
    for k, members in enumerate(clusters):
        for idx in members:
            labels[idx] = k
    seen: dict[int, int] = {}
    out = np.empty_like(labels)
    for pos, lab in enumerate(labels):
        out[pos] = seen.setdefault(int(lab), len(seen))
    return out


def test_ahc_single_vector():
    labels = ahc(_seq([[1.0, 0.0]]), AhcConfig(threshold=0.5))
    np.testing.assert_array_equal(labels, [0])


def test_ahc_two_obvious_speakers():
    vecs = [[1.0, 0.0], [0.99, 0.05], [0.0, 1.0], [0.03, 0.98]]
    labels = ahc(_seq(vecs), AhcConfig(threshold=0.5))
    np.testing.assert_array_equal(labels, [0, 0, 1, 1])


def test_ahc_threshold_boundary_is_inclusive():
    # Two unit vectors with cosine exactly 0.5 merge at threshold 0.5.
    vecs = np.array([[1.0, 0.0], [0.5, np.sqrt(3) / 2]])
    merged = ahc(_seq(vecs), AhcConfig(threshold=0.5))
    assert len(set(merged.tolist())) == 1
    apart = ahc(_seq(vecs), AhcConfig(threshold=0.5 + 1e-9))
    np.testing.assert_array_equal(apart, [0, 1])


def test_ahc_threshold_minus_one_merges_everything():
    rng = np.random.default_rng(41)
    vecs = rng.normal(size=(12, 4))
    labels = ahc(_seq(vecs), AhcConfig(threshold=-1.0))
    assert set(labels.tolist()) == {0}


def test_ahc_labels_first_occurrence_order():
    # Labels must start at 0 for the first vector and increase as new
    # clusters first appear in time order.
    vecs = [[0.0, 1.0], [1.0, 0.0], [0.0, 0.9], [0.9, 0.0]]
    labels = ahc(_seq(vecs), AhcConfig(threshold=0.5))
    np.testing.assert_array_equal(labels, [0, 1, 0, 1])


def test_ahc_scale_invariance():
    rng = np.random.default_rng(42)
    vecs = rng.normal(size=(10, 5))
    scales = rng.uniform(0.1, 10.0, size=(10, 1))
    a = ahc(_seq(vecs), AhcConfig(threshold=0.3))
    b = ahc(_seq(vecs * scales), AhcConfig(threshold=0.3))
    np.testing.assert_array_equal(a, b)


def test_ahc_rotation_invariance():
    rng = np.random.default_rng(43)
    for _ in range(20):
        t = int(rng.integers(2, 9))
        d = int(rng.integers(2, 7))
        vecs = rng.normal(size=(t, d))
        q, _ = np.linalg.qr(rng.normal(size=(d, d)))
        threshold = float(rng.uniform(-0.2, 0.8))
        a = ahc(_seq(vecs), AhcConfig(threshold=threshold))
        b = ahc(_seq(vecs @ q.T), AhcConfig(threshold=threshold))
        np.testing.assert_array_equal(a, b)


def test_ahc_matches_replay_oracle():
    rng = np.random.default_rng(44)
    for _ in range(100):
        t = int(rng.integers(1, 9))
        d = int(rng.integers(2, 6))
        vecs = rng.normal(size=(t, d))
        threshold = float(rng.uniform(-0.5, 0.9))
        got = ahc(_seq(vecs), AhcConfig(threshold=threshold))
        want = _ahc_oracle(vecs, threshold)
        np.testing.assert_array_equal(got, want)


def test_ahc_tie_break_prefers_earliest_pair():
    # Two disjoint identical pairs tie at similarity 1; the (0, 1) merge
    # must happen before (2, 3) regardless of later merges.
    vecs = np.array(
        [[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]],
    )
    labels = ahc(_seq(vecs), AhcConfig(threshold=0.9))
    np.testing.assert_array_equal(labels, [0, 0, 1, 1])


def test_ahc_errors():
    with pytest.raises(DegenerateInputError):
        ahc(_seq(np.zeros((0, 3))), AhcConfig())
    with pytest.raises(DegenerateInputError):
        ahc(_seq([[0.0, 0.0], [1.0, 0.0]]), AhcConfig())
    with pytest.raises(ConfigurationError):
        AhcConfig(threshold=1.5)
