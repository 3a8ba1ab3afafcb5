"""RIFF WAV I/O, 16-bit mono PCM."""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np

from ..errors import AtlasError
from .model import AudioClip


class WavError(AtlasError):
    code = "WavError"


def write_wav(clip: AudioClip, path) -> None:
    with wave.open(str(path), "wb") as out:
        out.setnchannels(1)
        out.setsampwidth(2)
        out.setframerate(clip.sample_rate_hz)
        out.writeframes(clip.samples.astype("<i2").tobytes())


def read_wav(path) -> AudioClip:
    if not Path(path).exists():
        raise WavError(f"no such file: {path}")
    with wave.open(str(path), "rb") as inp:
        if inp.getsampwidth() != 2:
            raise WavError("only 16-bit PCM is supported")
        frames = inp.readframes(inp.getnframes())
        samples = np.frombuffer(frames, dtype="<i2")
        if inp.getnchannels() > 1:
            samples = samples.reshape(-1, inp.getnchannels()).mean(axis=1).astype(np.int16)
        return AudioClip(samples=samples.copy(), sample_rate_hz=inp.getframerate())
