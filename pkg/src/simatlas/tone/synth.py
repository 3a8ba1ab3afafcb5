"""Ringback synthesis: gated sinusoids plus white noise."""

from __future__ import annotations

import numpy as np

from .model import AudioClip, FULL_SCALE, InvalidFingerprint, MIN_SAMPLE_RATE, ToneFingerprint


def synthesize_ringback(
    fp: ToneFingerprint,
    total_s: float,
    noise_dbfs: float = -60.0,
    seed: int = 0,
    sample_rate_hz: int = MIN_SAMPLE_RATE,
) -> AudioClip:
    """Deterministic tone burst train.

    The on-segment RMS hits fp.amp_dbfs; overtones ride at their
    relative level on every base frequency.  White noise at noise_dbfs
    covers the whole clip.
    """
    if total_s < fp.cycle_s:
        raise InvalidFingerprint(
            f"clip of {total_s}s cannot hold one {fp.cycle_s}s on+off cycle"
        )
    n = int(round(total_s * sample_rate_hz))
    t = np.arange(n) / sample_rate_hz

    components = [(f, 0.0) for f in fp.freqs_hz]
    components += [(m * f, rel_db) for (m, rel_db) in fp.overtone_ratios for f in fp.freqs_hz]
    weights = np.array([10 ** (rel / 20.0) for _, rel in components])
    # incoherent sines: RMS of the sum is sqrt(sum(w^2/2))
    scale = 10 ** (fp.amp_dbfs / 20.0) * FULL_SCALE / np.sqrt(np.sum(weights**2) / 2.0)

    signal = np.zeros(n)
    for (freq, rel), w in zip(components, weights):
        signal += w * np.sin(2 * np.pi * freq * t)
    signal *= scale

    envelope = (np.mod(t, fp.cycle_s) < fp.duty_on_s).astype(float)
    signal *= envelope

    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, 10 ** (noise_dbfs / 20.0) * FULL_SCALE, size=n)

    samples = np.clip(signal + noise, -FULL_SCALE, FULL_SCALE).astype(np.int16)
    return AudioClip(samples=samples, sample_rate_hz=sample_rate_hz)
