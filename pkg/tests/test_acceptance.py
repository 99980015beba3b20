"""Acceptance checks for the diarization and verification engine.

Each criterion is a separate test that prints exactly one
"ACCEPTANCE <n> PASS/FAIL" line with the measured numbers. Oracles are
embedded here so the file stands on its own: counting sweeps for the
detection metrics, a 1 ms rasterizer for DER, exhaustive path enumeration
for the HMM posteriors and a first-principles merge loop for clustering.

Run with `pytest tests/test_acceptance.py -s` to see the lines as they
print.
"""

import itertools
import json
import math
import time

import numpy as np
from scipy.special import logsumexp

from synthdata import grid_timeline, make_recording, random_diarization

from diarkit import (
    AhcConfig,
    CohortStats,
    Diarization,
    EmbeddingSequence,
    FusionConfig,
    PosteriorStream,
    PoolingConfig,
    Segment,
    Timeline,
    VbConfig,
    ahc,
    as_norm,
    der,
    eer,
    emit_rttm,
    fuse_posteriors,
    load_diarize_config,
    mha_pool,
    min_dcf,
    parse_rttm,
    posterior_to_segments,
    read_embeddings,
    read_posteriors,
    read_rttm,
    run_diarization,
    shuffled_mha_pool,
    stats_pool,
    top_score_stats,
    vad_metrics,
    vb_estep,
    vb_mstep,
    vb_resegment,
    write_embeddings,
    write_posteriors,
)


def _report(n: int, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {n} failed: {detail}"


# ---------------------------------------------------------------------------
# criterion 1: detection metrics against a counting sweep


def _sweep_curve(tar, non):
    thresholds = np.unique(np.concatenate([tar, non]))
    thresholds = np.append(thresholds, thresholds[-1] + 1.0)
    p_miss = (tar[:, None] < thresholds[None, :]).mean(axis=0)
    p_fa = (non[:, None] >= thresholds[None, :]).mean(axis=0)
    return p_miss, p_fa


def _eer_sweep(tar, non):
    p_miss, p_fa = _sweep_curve(tar, non)
    idx = int(np.argmax(p_miss >= p_fa))
    if p_miss[idx] == p_fa[idx] or idx == 0:
        return float(p_miss[idx])
    pm0, pf0 = p_miss[idx - 1], p_fa[idx - 1]
    pm1, pf1 = p_miss[idx], p_fa[idx]
    lam = (pf0 - pm0) / ((pm1 - pm0) + (pf0 - pf1))
    return float(pm0 + lam * (pm1 - pm0))


def _min_dcf_sweep(tar, non, p_target):
    p_miss, p_fa = _sweep_curve(tar, non)
    costs = p_target * p_miss + (1.0 - p_target) * p_fa
    return float(costs.min() / min(p_target, 1.0 - p_target))


def test_criterion_1_metric_oracle_equivalence():
    rng = np.random.default_rng(201)
    worst = 0.0
    elapsed = 0.0
    for _ in range(200):
        n_total = int(rng.integers(10, 501))
        n_tar = int(rng.integers(1, n_total))
        n_non = n_total - n_tar
        tar = rng.normal(loc=rng.uniform(0.0, 1.5), size=n_tar)
        non = rng.normal(size=n_non)
        if rng.random() < 0.3:
            tar = np.round(tar, 1)
            non = np.round(non, 1)
        p_target = float(rng.uniform(0.01, 0.5))
        t0 = time.perf_counter()
        got_eer = eer(tar, non)
        got_dcf = min_dcf(tar, non, p_target=p_target)
        elapsed += time.perf_counter() - t0
        worst = max(worst, abs(got_eer - _eer_sweep(tar, non)))
        worst = max(worst, abs(got_dcf - _min_dcf_sweep(tar, non, p_target)))
    ok = worst < 1e-9 and elapsed < 5.0
    _report(
        1,
        ok,
        f"eer/min_dcf match the threshold-sweep oracle on 200 trial sets "
        f"(max |delta| {worst:.3g}, tol 1e-9) in {elapsed:.2f}s (budget 5s)",
    )


# ---------------------------------------------------------------------------
# criterion 2: DER against a 1 ms rasterizer

_FRAME = 0.001


def _rasterize(timeline, t0, n):
    out = np.zeros(n, dtype=bool)
    for seg in timeline:
        lo = max(0, int(round((seg.onset - t0) / _FRAME)))
        hi = min(n, int(round((seg.end - t0) / _FRAME)))
        if hi > lo:
            out[lo:hi] = True
    return out


def _der_rasterized(ref, hyp):
    ext = ref.coverage().extent()
    t0 = ext.onset
    n = int(round((ext.end - t0) / _FRAME))
    ref_ids = sorted(ref.speakers)
    hyp_ids = sorted(hyp.speakers)
    ref_act = np.vstack([_rasterize(ref.speaker_timeline(r), t0, n) for r in ref_ids])
    hyp_act = (
        np.vstack([_rasterize(hyp.speaker_timeline(h), t0, n) for h in hyp_ids])
        if hyp_ids
        else np.zeros((0, n), dtype=bool)
    )
    total = int(ref_act.sum())

    best_matched = 0
    if ref_ids and hyp_ids:
        if len(ref_ids) <= len(hyp_ids):
            for perm in itertools.permutations(range(len(hyp_ids)), len(ref_ids)):
                matched = sum(
                    int((ref_act[i] & hyp_act[j]).sum()) for i, j in enumerate(perm)
                )
                best_matched = max(best_matched, matched)
        else:
            for perm in itertools.permutations(range(len(ref_ids)), len(hyp_ids)):
                matched = sum(
                    int((ref_act[i] & hyp_act[j]).sum()) for j, i in enumerate(perm)
                )
                best_matched = max(best_matched, matched)

    n_ref = ref_act.sum(axis=0).astype(np.int64)
    n_hyp = hyp_act.sum(axis=0).astype(np.int64)
    missed = int(np.maximum(0, n_ref - n_hyp).sum())
    false_alarm = int(np.maximum(0, n_hyp - n_ref).sum())
    confusion = int(np.minimum(n_ref, n_hyp).sum()) - best_matched
    return (missed + false_alarm + confusion) / total


def test_criterion_2_der_oracle_equivalence():
    rng = np.random.default_rng(202)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        duration = float(rng.uniform(20.0, 60.0))
        ref = random_diarization(rng, "rec", int(rng.integers(1, 6)), duration=duration)
        hyp = random_diarization(rng, "rec", int(rng.integers(1, 6)), duration=duration)
        got = der(ref, hyp, collar=0.0).der
        worst = max(worst, abs(got - _der_rasterized(ref, hyp)))
    identity_exact = True
    for _ in range(10):
        ref = random_diarization(rng, "rec", int(rng.integers(1, 6)))
        copy = Diarization("rec", list(ref.turns))
        identity_exact = identity_exact and der(ref, copy, collar=0.0).der == 0.0
    elapsed = time.perf_counter() - start
    ok = worst < 0.002 and identity_exact and elapsed < 30.0
    _report(
        2,
        ok,
        f"der matches the 1 ms rasterizer on 100 ref/hyp pairs "
        f"(max |delta| {worst:.3g}, tol 0.002), identity scores exactly 0: "
        f"{identity_exact}, in {elapsed:.1f}s (budget 30s)",
    )


# ---------------------------------------------------------------------------
# criterion 3: HMM posteriors, precision closed form, objective trace


def _enum_estep(loglik, pi, loop_prob):
    t, s = loglik.shape
    pi = np.asarray(pi, dtype=np.float64)
    pi = pi / pi.sum()
    if s == 1:
        trans = np.array([[1.0]])
    else:
        trans = np.empty((s, s))
        for a in range(s):
            for b in range(s):
                if a == b:
                    trans[a, b] = loop_prob
                else:
                    trans[a, b] = (1.0 - loop_prob) * pi[b] / (pi.sum() - pi[a])
    paths = list(itertools.product(range(s), repeat=t))
    log_probs = np.empty(len(paths))
    for p_idx, path in enumerate(paths):
        lp = math.log(pi[path[0]]) + loglik[0, path[0]]
        for i in range(1, t):
            lp += math.log(trans[path[i - 1], path[i]]) + loglik[i, path[i]]
        log_probs[p_idx] = lp
    total = float(logsumexp(log_probs))
    gamma = np.zeros((t, s))
    for i in range(t):
        for state in range(s):
            mask = np.array([p[i] == state for p in paths])
            gamma[i, state] = math.exp(logsumexp(log_probs[mask]) - total)
    return gamma, total


def _window_sequence(rec_id, vectors):
    segments = tuple(Segment(round(0.25 * i, 3), 1.5) for i in range(len(vectors)))
    return EmbeddingSequence(rec_id, segments, np.asarray(vectors, dtype=np.float64))


def _blocky_speaker_sequence(rng, dim=12):
    n_spk = int(rng.integers(2, 4))
    directions = np.linalg.qr(rng.normal(size=(dim, dim)))[0][:n_spk]
    labels = []
    while len(labels) < 60:
        labels.extend([int(rng.integers(0, n_spk))] * int(rng.integers(5, 16)))
    labels = np.array(labels[:60])
    vectors = directions[labels] + 0.15 * rng.normal(size=(60, dim))
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    init = labels.copy()
    for pos in rng.integers(0, 60, size=3):
        init[pos] = int(rng.integers(0, n_spk))
    # Dense relabel so state indices are first-occurrence contiguous.
    seen = {}
    init = np.array([seen.setdefault(int(v), len(seen)) for v in init])
    return _window_sequence("vbrec", vectors), init


def test_criterion_3_vb_correctness():
    rng = np.random.default_rng(203)

    worst_gamma = worst_evidence = worst_rowsum = 0.0
    for _ in range(50):
        t = int(rng.integers(1, 9))
        s = int(rng.integers(1, 4))
        loglik = rng.normal(size=(t, s))
        pi = rng.random(s) + 0.05
        loop = float(rng.uniform(0.5, 0.995))
        gamma, evidence = vb_estep(loglik, pi, VbConfig(loop_prob=loop))
        want_gamma, want_evidence = _enum_estep(loglik, pi, loop)
        worst_gamma = max(worst_gamma, float(np.abs(gamma - want_gamma).max()))
        worst_evidence = max(worst_evidence, abs(evidence - want_evidence))
        worst_rowsum = max(worst_rowsum, float(np.abs(gamma.sum(axis=1) - 1.0).max()))

    worst_precision = 0.0
    for _ in range(50):
        t = int(rng.integers(2, 40))
        s = int(rng.integers(1, 5))
        gamma = rng.random((t, s))
        vectors = rng.normal(size=(t, 12))
        vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
        config = VbConfig()  # fa 0.3, fb 17
        states = vb_mstep(gamma, _window_sequence("m", vectors), config)
        occupancy = gamma.sum(axis=0)
        for state, n_s in zip(states, occupancy):
            want = 1.0 + (config.fa / config.fb) * n_s
            worst_precision = max(worst_precision, abs(state.precision - want))

    worst_drop = math.inf
    for _ in range(20):
        seq, init = _blocky_speaker_sequence(rng)
        _, diag = vb_resegment(
            init,
            seq,
            VbConfig(fc=4.0, elbo_tol=0.0, max_iters=15, min_occupancy=0.0),
        )
        diffs = np.diff(diag.objective)
        if len(diffs):
            worst_drop = min(worst_drop, float(diffs.min()))

    ok = (
        worst_gamma < 1e-9
        and worst_evidence < 1e-9
        and worst_rowsum < 1e-9
        and worst_precision < 1e-12
        and worst_drop >= -1e-6
    )
    _report(
        3,
        ok,
        f"posteriors match path enumeration on 50 instances (max gamma delta "
        f"{worst_gamma:.3g}, evidence delta {worst_evidence:.3g}, tol 1e-9); "
        f"gamma rows sum to 1 (max delta {worst_rowsum:.3g}); precision matches "
        f"1 + (fa/fb)*occupancy (max delta {worst_precision:.3g}, tol 1e-12); "
        f"objective trace non-decreasing on 20 runs (worst step {worst_drop:.3g}, "
        f"tol -1e-6)",
    )


# ---------------------------------------------------------------------------
# criterion 4: synthetic end-to-end diarization


def _sweep_config(tmp_path, rec_ids, out_name, threshold, vb_enabled):
    config = {
        "output_dir": out_name,
        "figures": False,
        "ahc": {"threshold": threshold},
        "vb": {"enabled": vb_enabled, "fc": 4.0},
        "recordings": [
            {
                "recording_id": rec_id,
                "vad_streams": [f"{rec_id}.vad"],
                "embeddings": f"{rec_id}.emb",
            }
            for rec_id in rec_ids
        ],
    }
    path = tmp_path / f"{out_name}.json"
    path.write_text(json.dumps(config))
    return path


def _run_and_score(tmp_path, rec_ids, out_name, threshold, vb_enabled, truths):
    cfg = load_diarize_config(
        _sweep_config(tmp_path, rec_ids, out_name, threshold, vb_enabled)
    )
    summary = run_diarization(cfg)
    assert summary["failed"] == []
    hyps = {d.recording_id: d for d in read_rttm(tmp_path / out_name / "all.rttm")}
    return [der(truths[r], hyps[r], collar=0.0).der for r in rec_ids]


def test_criterion_4_end_to_end_synthetic(tmp_path):
    rng = np.random.default_rng(2024)
    rec_ids = []
    truths = {}
    for i in range(10):
        n_spk = int(rng.integers(2, 5))
        truth, stream, seq, _ = make_recording(
            rng, f"rec{i}", duration=120.0, n_speakers=n_spk
        )
        write_posteriors(stream, tmp_path / f"rec{i}.vad")
        write_embeddings(seq, tmp_path / f"rec{i}.emb")
        rec_ids.append(f"rec{i}")
        truths[f"rec{i}"] = truth

    start = time.perf_counter()
    sweep = {}
    for threshold in (0.3, 0.5, 0.7):
        sweep[threshold] = _run_and_score(
            tmp_path, rec_ids, f"ahc_{threshold}", threshold, False, truths
        )
    winner = min(sweep, key=lambda t: float(np.mean(sweep[t])))
    ahc_ders = sweep[winner]
    vb_ders = _run_and_score(tmp_path, rec_ids, "final_vb", winner, True, truths)
    elapsed = time.perf_counter() - start

    not_worse = sum(v <= a + 1e-12 for v, a in zip(vb_ders, ahc_ders))
    mean_der = float(np.mean(vb_ders))
    max_der = float(np.max(vb_ders))
    ok = max_der < 0.05 and not_worse >= 8 and elapsed < 60.0
    _report(
        4,
        ok,
        f"10 synthetic recordings (120s, 2-4 speakers): threshold sweep picked "
        f"{winner}, final DER mean {mean_der:.4f} / max {max_der:.4f} at collar 0 "
        f"(limit 0.05), re-clustering not worse than clustering alone on "
        f"{not_worse}/10 (need 8), in {elapsed:.1f}s (budget 60s)",
    )


# ---------------------------------------------------------------------------
# criterion 5: clustering against the exhaustive merge loop


def _ahc_oracle(vectors, threshold):
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


def test_criterion_5_ahc_oracle():
    rng = np.random.default_rng(205)
    oracle_matches = 0
    for _ in range(100):
        t = int(rng.integers(2, 9))
        dim = int(rng.integers(2, 7))
        vectors = rng.normal(size=(t, dim))
        threshold = float(rng.uniform(-0.2, 0.9))
        got = ahc(_window_sequence("c", vectors), AhcConfig(threshold=threshold))
        if np.array_equal(got, _ahc_oracle(vectors, threshold)):
            oracle_matches += 1

    rotation_matches = 0
    for _ in range(20):
        t = int(rng.integers(2, 9))
        vectors = rng.normal(size=(t, 6))
        threshold = float(rng.uniform(0.0, 0.8))
        q = np.linalg.qr(rng.normal(size=(6, 6)))[0]
        base = ahc(_window_sequence("c", vectors), AhcConfig(threshold=threshold))
        rotated = ahc(_window_sequence("c", vectors @ q.T), AhcConfig(threshold=threshold))
        if np.array_equal(base, rotated):
            rotation_matches += 1

    ok = oracle_matches == 100 and rotation_matches == 20
    _report(
        5,
        ok,
        f"clustering reproduces the exhaustive merge loop on {oracle_matches}/100 "
        f"small instances and is rotation invariant on {rotation_matches}/20",
    )


# ---------------------------------------------------------------------------
# criterion 6: pooling properties


def test_criterion_6_pooling_properties():
    rng = np.random.default_rng(206)
    worst_perm = worst_zero = 0.0
    dims_ok = True
    for _ in range(100):
        heads = int(rng.choice([2, 4]))
        channels = heads * int(rng.integers(2, 5))
        frames = int(rng.integers(5, 40))
        x = rng.normal(size=(channels, frames))
        group = 2 * channels // heads
        config = PoolingConfig(
            heads=heads,
            weights=0.5 * rng.normal(size=(heads, 3 * group)),
            biases=rng.normal(size=heads),
        )
        pooled = shuffled_mha_pool(x, config)
        permuted = shuffled_mha_pool(x[:, rng.permutation(frames)], config)
        worst_perm = max(worst_perm, float(np.abs(pooled - permuted).max()))
        dims_ok = dims_ok and pooled.shape == (4 * channels,)

        plain = PoolingConfig(heads=heads)
        zero_delta = np.abs(mha_pool(x, plain) - stats_pool(x)).max()
        worst_zero = max(worst_zero, float(zero_delta))
        dims_ok = dims_ok and mha_pool(x, plain).shape == (2 * channels,)

    ok = worst_perm < 1e-9 and worst_zero < 1e-9 and dims_ok
    _report(
        6,
        ok,
        f"pooling is frame-permutation invariant (max delta {worst_perm:.3g}), "
        f"zero attention parameters reproduce plain statistics (max delta "
        f"{worst_zero:.3g}, tol 1e-9), output sizes are exactly 2C and 4C: {dims_ok}",
    )


# ---------------------------------------------------------------------------
# criterion 7: score normalization affine invariance


def test_criterion_7_asnorm_affine_invariance():
    rng = np.random.default_rng(207)
    worst = 0.0
    for case in range(100):
        enroll_scores = rng.normal(size=50)
        test_scores = rng.normal(size=50)
        raw = float(rng.normal())
        k = 10
        mu_e, sd_e = top_score_stats(enroll_scores, k)
        mu_t, sd_t = top_score_stats(test_scores, k)
        base = as_norm(
            raw,
            CohortStats("e", mu_e, sd_e, k),
            CohortStats("t", mu_t, sd_t, k),
        )
        for a in (0.5, 2.0, 10.0):
            for b in (-1.0, 0.0, 3.0):
                mu_e2, sd_e2 = top_score_stats(a * enroll_scores + b, k)
                mu_t2, sd_t2 = top_score_stats(a * test_scores + b, k)
                moved = as_norm(
                    a * raw + b,
                    CohortStats("e", mu_e2, sd_e2, k),
                    CohortStats("t", mu_t2, sd_t2, k),
                )
                worst = max(worst, abs(moved - base))
    ok = worst < 1e-9
    _report(
        7,
        ok,
        f"normalized score unchanged under score maps a*s+b for a in "
        f"{{0.5, 2, 10}}, b in {{-1, 0, 3}} on 100 cases "
        f"(max |delta| {worst:.3g}, tol 1e-9)",
    )


# ---------------------------------------------------------------------------
# criterion 8: archive round-trips and run determinism


def test_criterion_8_roundtrips_and_determinism(tmp_path):
    rng = np.random.default_rng(208)

    turns = [
        (Segment(round(7.0 * k + 0.321, 3), round(2.0 + 0.013 * k, 3)), f"spk{k % 4}")
        for k in range(25)
    ]
    d = Diarization("rec", turns)
    rttm_ok = parse_rttm(emit_rttm(d)) == [d]
    rttm_ok = rttm_ok and emit_rttm(parse_rttm(emit_rttm(d))[0]) == emit_rttm(d)

    segments = tuple(Segment(round(0.25 * i, 3), 1.5) for i in range(40))
    seq = EmbeddingSequence("rec", segments, rng.normal(size=(40, 16)))
    write_embeddings(seq, tmp_path / "a.emb")
    back = read_embeddings(tmp_path / "a.emb")
    emb_ok = (
        np.array_equal(back.vectors, seq.vectors) and back.segments == seq.segments
    )
    write_embeddings(back, tmp_path / "b.emb")
    emb_ok = emb_ok and (tmp_path / "a.emb").read_bytes() == (tmp_path / "b.emb").read_bytes()

    stream = PosteriorStream("rec", 0.01, np.round(rng.uniform(size=1500), 6))
    write_posteriors(stream, tmp_path / "a.vad")
    back_stream = read_posteriors(tmp_path / "a.vad")
    post_ok = np.array_equal(back_stream.values, stream.values)
    write_posteriors(back_stream, tmp_path / "b.vad")
    post_ok = post_ok and (tmp_path / "a.vad").read_bytes() == (tmp_path / "b.vad").read_bytes()

    for i in range(2):
        _, stream_i, seq_i, _ = make_recording(rng, f"run{i}", duration=30.0)
        write_posteriors(stream_i, tmp_path / f"run{i}.vad")
        write_embeddings(seq_i, tmp_path / f"run{i}.emb")
    cfg_path = _sweep_config(tmp_path, ["run0", "run1"], "det", 0.5, True)
    config = load_diarize_config(cfg_path)
    first = run_diarization(config)
    watched = ["run0.rttm", "run1.rttm", "all.rttm", "manifest.json"]
    snapshot = {name: (tmp_path / "det" / name).read_bytes() for name in watched}
    second = run_diarization(config)
    det_ok = all(
        (tmp_path / "det" / name).read_bytes() == snapshot[name] for name in watched
    )
    for summary in (first, second):
        for entry in summary["recordings"].values():
            entry.pop("timings")
    det_ok = det_ok and first == second

    ok = rttm_ok and emb_ok and post_ok and det_ok
    _report(
        8,
        ok,
        f"turn files, embedding archives and posterior streams round-trip at "
        f"declared precision (rttm {rttm_ok}, embeddings {emb_ok}, posteriors "
        f"{post_ok}); rerunning one config is byte-identical: {det_ok}",
    )


# ---------------------------------------------------------------------------
# criterion 9: posterior fusion and threshold monotonicity


def test_criterion_9_fusion_and_threshold_monotonicity(tmp_path):
    rng = np.random.default_rng(209)

    worst_mean = 0.0
    for _ in range(50):
        n_streams = int(rng.integers(2, 5))
        n_frames = int(rng.integers(200, 800))
        streams = [
            PosteriorStream("rec", 0.01, rng.uniform(size=n_frames))
            for _ in range(n_streams)
        ]
        fused = fuse_posteriors(streams, None)
        mean = np.mean([s.values for s in streams], axis=0)
        worst_mean = max(worst_mean, float(np.abs(fused.values - mean).max()))

    monotone = True
    thresholds = (0.15, 0.3, 0.45, 0.6, 0.75, 0.9)
    for _ in range(50):
        n_frames = int(rng.integers(500, 2000))
        duration = n_frames * 0.01
        stream = PosteriorStream("rec", 0.01, rng.uniform(size=n_frames))
        ref = grid_timeline(rng, 8, horizon=duration * 0.8)
        support = Timeline([Segment(0.0, duration)])
        prev_fa, prev_miss = math.inf, -math.inf
        for threshold in thresholds:
            speech = posterior_to_segments(
                stream,
                FusionConfig(threshold=threshold, min_segment=0.0, min_gap=0.0),
            )
            report = vad_metrics(speech, ref, support)
            if report.false_alarm > prev_fa + 1e-12 or report.miss < prev_miss - 1e-12:
                monotone = False
            prev_fa, prev_miss = report.false_alarm, report.miss

    ok = worst_mean < 1e-12 and monotone
    _report(
        9,
        ok,
        f"equal-weight fusion equals the frame-wise mean on 50 stream sets "
        f"(max |delta| {worst_mean:.3g}, tol 1e-12); raising the speech threshold "
        f"never raises false alarm or lowers miss on 50 streams: {monotone}",
    )
