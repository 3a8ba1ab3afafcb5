"""Feature extraction from ringback audio.

Short-time energy segmentation (20 ms frames, threshold at the midpoint
between the two energy-cluster means) yields the duty cycle; per-burst
zero-padded spectra yield the one or two dominant base frequencies and
relative overtone levels; on-segment RMS (noise-compensated from the
off segments) yields the amplitude.
"""

from __future__ import annotations

from typing import List, Optional, Tuple

import numpy as np

from .model import (
    ANALYSIS_CAP_S,
    AudioClip,
    FeatureVector,
    FREQ_BAND,
    FULL_SCALE,
    NoToneDetected,
)

FRAME_S = 0.020
MIN_CLUSTER_RATIO = 2.0  # on/off energy separation, linear
DUAL_TONE_WINDOW_HZ = 20.0
DUAL_TONE_MAX_DROP_DB = 10.0
OVERTONE_WINDOW_HZ = 10.0
OVERTONE_FLOOR_DB = -28.0
MAX_OVERTONE_MULTIPLE = 4


def _two_means(values: np.ndarray) -> Tuple[float, float]:
    lo, hi = float(values.min()), float(values.max())
    if hi <= 0:
        return lo, hi
    for _ in range(12):
        mid = (lo + hi) / 2.0
        low_side = values[values <= mid]
        high_side = values[values > mid]
        if len(low_side) == 0 or len(high_side) == 0:
            break
        new_lo, new_hi = float(low_side.mean()), float(high_side.mean())
        if np.isclose(new_lo, lo) and np.isclose(new_hi, hi):
            break
        lo, hi = new_lo, new_hi
    return lo, hi


def _runs(mask: np.ndarray) -> List[Tuple[int, int, bool]]:
    """(start, end, value) runs over a boolean frame mask."""
    runs = []
    start = 0
    for i in range(1, len(mask) + 1):
        if i == len(mask) or mask[i] != mask[start]:
            runs.append((start, i, bool(mask[start])))
            start = i
    return runs


def _spectrum_peak(mag: np.ndarray, freqs: np.ndarray, lo: float, hi: float) -> Optional[Tuple[float, float]]:
    band = (freqs >= lo) & (freqs <= hi)
    if not band.any():
        return None
    idx = np.flatnonzero(band)
    k = idx[np.argmax(mag[idx])]
    if mag[k] <= 0:
        return None
    # parabolic interpolation on log magnitude
    if 0 < k < len(mag) - 1 and mag[k - 1] > 0 and mag[k + 1] > 0:
        a, b, c = np.log(mag[k - 1]), np.log(mag[k]), np.log(mag[k + 1])
        denom = a - 2 * b + c
        delta = 0.5 * (a - c) / denom if abs(denom) > 1e-12 else 0.0
        delta = float(np.clip(delta, -0.5, 0.5))
    else:
        delta = 0.0
    df = freqs[1] - freqs[0]
    return float(freqs[k] + delta * df), float(mag[k])


def extract_features(clip: AudioClip) -> FeatureVector:
    sr = clip.sample_rate_hz
    samples = clip.samples[: int(ANALYSIS_CAP_S * sr)].astype(np.float64)
    if len(samples) < sr:
        raise NoToneDetected("need at least one second of audio")

    frame_len = int(FRAME_S * sr)
    n_frames = len(samples) // frame_len
    frames = samples[: n_frames * frame_len].reshape(n_frames, frame_len)
    energy = np.mean(frames**2, axis=1) + 1e-12

    m_lo, m_hi = _two_means(energy)
    if m_hi < MIN_CLUSTER_RATIO * m_lo:
        raise NoToneDetected("no on/off energy contrast found")
    threshold = (m_lo + m_hi) / 2.0
    mask = energy > threshold
    # dual-tone beats modulate the per-frame energy; a majority vote
    # over 3 frames heals single-frame dropouts without moving edges
    if len(mask) >= 3:
        healed = mask.copy()
        healed[1:-1] = (mask[:-2].astype(int) + mask[1:-1].astype(int) + mask[2:].astype(int)) >= 2
        mask = healed

    runs = _runs(mask)
    on_runs = [(s, e) for s, e, v in runs if v]
    if not on_runs:
        raise NoToneDetected("no tone burst above threshold")
    complete_on = [(s, e) for s, e in on_runs if e < n_frames]
    off_runs = [
        (s, e)
        for s, e, v in runs
        if not v and s > 0 and e < n_frames
    ]
    duty_on = float(np.mean([(e - s) for s, e in (complete_on or on_runs)])) * FRAME_S
    duty_off = float(np.mean([(e - s) for s, e in off_runs])) * FRAME_S if off_runs else 0.0

    # amplitude: on-RMS with the off-segment noise power subtracted
    on_samples = np.concatenate([frames[s:e].ravel() for s, e in on_runs])
    off_frames = [frames[s:e].ravel() for s, e, v in runs if not v]
    noise_power = float(np.mean(np.concatenate(off_frames) ** 2)) if off_frames else 0.0
    on_power = float(np.mean(on_samples**2))
    signal_power = max(on_power - noise_power, 1e-9)
    amp_dbfs = 10 * np.log10(signal_power / FULL_SCALE**2)

    # spectrum of the longest burst, edges trimmed one frame
    s, e = max(on_runs, key=lambda r: r[1] - r[0])
    burst = samples[(s + 1) * frame_len : max((e - 1) * frame_len, (s + 1) * frame_len + frame_len)]
    if len(burst) < frame_len:
        burst = samples[s * frame_len : e * frame_len]
    window = np.hanning(len(burst))
    nfft = 1 << int(np.ceil(np.log2(len(burst) * 4)))
    mag = np.abs(np.fft.rfft(burst * window, nfft))
    freqs = np.fft.rfftfreq(nfft, 1.0 / sr)

    primary = _spectrum_peak(mag, freqs, FREQ_BAND[0], FREQ_BAND[1])
    if primary is None:
        raise NoToneDetected("no spectral peak in the call-progress band")
    f1, mag1 = primary
    found = [f1]
    masked = mag.copy()
    masked[np.abs(freqs - f1) < DUAL_TONE_WINDOW_HZ] = 0.0
    secondary = _spectrum_peak(masked, freqs, FREQ_BAND[0], FREQ_BAND[1])
    if secondary is not None:
        f2, mag2 = secondary
        if 20 * np.log10(mag2 / mag1) > -DUAL_TONE_MAX_DROP_DB:
            found.append(f2)

    base = min(found)
    overtones: List[Tuple[int, float]] = []
    for multiple in range(2, MAX_OVERTONE_MULTIPLE + 1):
        target = multiple * base
        if target >= sr / 2:
            break
        peak = _spectrum_peak(mag, freqs, target - OVERTONE_WINDOW_HZ, target + OVERTONE_WINDOW_HZ)
        if peak is None:
            continue
        fo, mago = peak
        rel_db = 20 * np.log10(mago / mag1)
        # require a real spectral line: clear of the local noise floor
        floor_band = (freqs > target + 2 * OVERTONE_WINDOW_HZ) & (freqs < target + 6 * OVERTONE_WINDOW_HZ)
        floor = np.median(mag[floor_band]) if floor_band.any() else 0.0
        if rel_db >= OVERTONE_FLOOR_DB and (floor <= 0 or mago > 4 * floor):
            overtones.append((multiple, float(rel_db)))

    confidence = {
        "freqs_hz": 1.0 if len(found) == len(set(round(f) for f in found)) else 0.5,
        "duty_on_s": min(1.0, len(complete_on or on_runs) / 2.0),
        "duty_off_s": min(1.0, len(off_runs) / 1.0) if off_runs else 0.0,
        "amp_dbfs": min(1.0, len(on_samples) / sr),
        "overtone_ratios": 1.0 if overtones else 0.5,
    }
    return FeatureVector(
        freqs_hz=tuple(found),
        duty_on_s=duty_on,
        duty_off_s=duty_off,
        amp_dbfs=float(amp_dbfs),
        overtone_ratios=tuple(overtones),
        confidence=confidence,
    )
