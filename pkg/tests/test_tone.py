"""Tone synthesis/extraction/matching: synthesize-then-extract loops."""

import numpy as np
import pytest

from simatlas.tone import (
    AudioClip,
    InvalidFingerprint,
    NoToneDetected,
    PRESETS,
    ToneFingerprint,
    extract_features,
    match_fingerprint,
    read_wav,
    synthesize_ringback,
    write_wav,
)
from simatlas.tone.presets import preset


def test_preset_count_and_labels_unique():
    labels = [fp.operator_label for fp in PRESETS]
    assert len(labels) == 19
    assert len(set(labels)) == 19


def test_synthesis_burst_count():
    fp = ToneFingerprint("X", (425.0,), 1.0, 4.0, -15.0)
    clip = synthesize_ringback(fp, total_s=10.0, noise_dbfs=-60.0)
    # exactly 2 on-bursts in 10 s of a 5 s cycle
    frames = clip.samples.astype(float)[: 10 * 8000].reshape(-1, 160)
    energy = (frames**2).mean(axis=1)
    on = energy > energy.max() / 4
    transitions = int(np.sum(np.diff(on.astype(int)) == 1)) + int(on[0])
    assert transitions == 2


def test_synthesis_deterministic_per_seed():
    fp = preset("DE_o2")
    a = synthesize_ringback(fp, 8.0, noise_dbfs=-30.0, seed=7)
    b = synthesize_ringback(fp, 8.0, noise_dbfs=-30.0, seed=7)
    c = synthesize_ringback(fp, 8.0, noise_dbfs=-30.0, seed=8)
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


def test_synthesis_rejects_short_clip():
    fp = preset("AT_A1")  # 6 s cycle
    with pytest.raises(InvalidFingerprint):
        synthesize_ringback(fp, total_s=5.0)


def test_dual_tone_beat_envelope():
    fp = ToneFingerprint("NA", (440.0, 480.0), 2.0, 4.0, -10.0)
    clip = synthesize_ringback(fp, 6.0, noise_dbfs=-80.0)
    # 40 Hz beat: the smoothed envelope dips near zero every 25 ms
    seg = np.abs(clip.samples[800:7200].astype(float))
    envelope = np.convolve(seg, np.ones(32) / 32, mode="valid")
    assert envelope.min() < 0.2 * envelope.max()
    # dips recur at the beat rate: count envelope minima under 20%
    low = envelope < 0.2 * envelope.max()
    dips = np.sum(np.diff(low.astype(int)) == 1)
    duration = len(envelope) / 8000
    assert abs(dips / duration - 40.0) <= 3.0


def test_extraction_recovers_features_clean():
    fp = preset("DE_Telekom")
    clip = synthesize_ringback(fp, 16.0, noise_dbfs=-40.0, seed=3)
    feats = extract_features(clip)
    assert abs(feats.freqs_hz[0] - 426.0) < 2.0
    assert abs(feats.duty_on_s - 1.0) <= 0.1
    assert abs(feats.duty_off_s - 4.0) <= 0.1
    assert abs(feats.amp_dbfs - (-14.7)) <= 1.0
    multiples = dict(feats.overtone_ratios)
    assert 2 in multiples
    assert abs(multiples[2] - (-16.0)) < 3.0


def test_extraction_dual_tone_spacing():
    fp = preset("US_ATT")
    clip = synthesize_ringback(fp, 14.0, noise_dbfs=-40.0, seed=1)
    feats = extract_features(clip)
    assert len(feats.freqs_hz) == 2
    f1, f2 = feats.freqs_hz
    assert abs((f2 - f1) - 40.0) <= 2.0


def test_silent_clip_raises():
    clip = AudioClip(samples=np.zeros(8000 * 4, dtype=np.int16))
    with pytest.raises(NoToneDetected):
        extract_features(clip)


def test_noise_only_clip_raises():
    rng = np.random.default_rng(0)
    clip = AudioClip(samples=(rng.normal(0, 300, 8000 * 4)).astype(np.int16))
    with pytest.raises(NoToneDetected):
        extract_features(clip)


def test_frequency_estimator_bias_sweep():
    """Bias below 0.5 Hz on clean single sinusoids, 400-500 Hz."""
    for freq in np.arange(400.0, 500.1, 10.0):
        fp = ToneFingerprint("sweep", (float(freq),), 1.0, 1.0, -10.0)
        clip = synthesize_ringback(fp, 6.0, noise_dbfs=-90.0, seed=0)
        feats = extract_features(clip)
        assert abs(feats.freqs_hz[0] - freq) < 0.5, freq


def test_duty_cycle_exact_to_one_frame_noiseless():
    fp = ToneFingerprint("D", (425.0,), 1.0, 4.0, -12.0)
    clip = synthesize_ringback(fp, 16.0, noise_dbfs=-90.0)
    feats = extract_features(clip)
    assert abs(feats.duty_on_s - 1.0) <= 0.02
    assert abs(feats.duty_off_s - 4.0) <= 0.02


def test_at_a1_five_second_off_time():
    clip = synthesize_ringback(preset("AT_A1"), 19.0, noise_dbfs=-40.0, seed=2)
    feats = extract_features(clip)
    assert abs(feats.duty_off_s - 5.0) <= 0.1


def test_closed_loop_match_all_presets_clean():
    for fp in PRESETS:
        clip = synthesize_ringback(fp, 16.0, noise_dbfs=-40.0, seed=11)
        feats = extract_features(clip)
        ranked = match_fingerprint(feats, PRESETS)
        assert ranked[0].label == fp.operator_label, (
            f"{fp.operator_label} classified as {ranked[0].label}"
        )


def test_eu_na_patterns_never_confused():
    eu = [fp for fp in PRESETS if len(fp.freqs_hz) == 1]
    na = [fp for fp in PRESETS if len(fp.freqs_hz) == 2]
    for fp in PRESETS:
        clip = synthesize_ringback(fp, 16.0, noise_dbfs=-20.0, seed=5)
        feats = extract_features(clip)
        best = match_fingerprint(feats, PRESETS)[0].label
        same_side = eu if len(fp.freqs_hz) == 1 else na
        assert best in {p.operator_label for p in same_side}


def test_symmetric_tie_reported():
    a = ToneFingerprint("A", (424.0,), 1.0, 4.0, -10.0)
    b = ToneFingerprint("B", (426.0,), 1.0, 4.0, -10.0)
    clip = synthesize_ringback(ToneFingerprint("M", (425.0,), 1.0, 4.0, -10.0), 12.0, -60.0)
    feats = extract_features(clip)
    # construct the exact midpoint feature for determinism
    feats.freqs_hz = (425.0,)
    feats.duty_on_s, feats.duty_off_s, feats.amp_dbfs = 1.0, 4.0, -10.0
    feats.overtone_ratios = ()
    ranked = match_fingerprint(feats, [a, b])
    assert ranked[0].tie and ranked[1].tie
    assert [r.label for r in ranked] == ["A", "B"]


def test_unmatchable_features_flagged():
    eu_only = synthesize_ringback(preset("DE_o2"), 12.0, noise_dbfs=-40.0)
    feats = extract_features(eu_only)
    na_db = [fp for fp in PRESETS if len(fp.freqs_hz) == 2]
    ranked = match_fingerprint(feats, na_db)
    assert ranked[0].label == "no confident match"


def test_wav_round_trip(tmp_path):
    clip = synthesize_ringback(preset("RO_Vodafone"), 8.0, noise_dbfs=-50.0, seed=4)
    path = tmp_path / "call.wav"
    write_wav(clip, path)
    loaded = read_wav(path)
    assert loaded.sample_rate_hz == clip.sample_rate_hz
    assert np.array_equal(loaded.samples, clip.samples)
