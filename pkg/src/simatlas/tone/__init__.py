"""Ringback-tone synthesis, feature extraction, and fingerprinting.

Call-progress tones leak the callee's serving network: base frequency,
overtone composition, on/off duty cycle, and amplitude differ between
operators.  This package synthesizes labeled tones, extracts those four
features from audio, and ranks fingerprint matches.
"""

from .model import (
    AudioClip,
    ToneFingerprint,
    FeatureVector,
    InvalidFingerprint,
    NoToneDetected,
)
from .synth import synthesize_ringback
from .features import extract_features
from .match import MatchResult, match_fingerprint
from .presets import PRESETS, default_db, load_db, save_db
from .wav import read_wav, write_wav

__all__ = [
    "AudioClip",
    "ToneFingerprint",
    "FeatureVector",
    "InvalidFingerprint",
    "NoToneDetected",
    "synthesize_ringback",
    "extract_features",
    "MatchResult",
    "match_fingerprint",
    "PRESETS",
    "default_db",
    "load_db",
    "save_db",
    "read_wav",
    "write_wav",
]
