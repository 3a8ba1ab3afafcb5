"""Audio and fingerprint value types."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from ..errors import AtlasError

MIN_SAMPLE_RATE = 8000
ANALYSIS_CAP_S = 20.0  # recordings are cut before voicemail kicks in
FREQ_BAND = (300.0, 600.0)
FULL_SCALE = 32767.0


class InvalidFingerprint(AtlasError):
    code = "InvalidFingerprint"


class NoToneDetected(AtlasError):
    code = "NoToneDetected"


@dataclass
class AudioClip:
    samples: np.ndarray  # int16
    sample_rate_hz: int = MIN_SAMPLE_RATE

    def __post_init__(self):
        if self.sample_rate_hz < MIN_SAMPLE_RATE:
            raise InvalidFingerprint(f"sample rate {self.sample_rate_hz} below {MIN_SAMPLE_RATE}")
        self.samples = np.asarray(self.samples, dtype=np.int16)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


@dataclass(frozen=True)
class ToneFingerprint:
    operator_label: str
    freqs_hz: Tuple[float, ...]
    duty_on_s: float
    duty_off_s: float
    amp_dbfs: float
    overtone_ratios: Tuple[Tuple[int, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "freqs_hz", tuple(sorted(float(f) for f in self.freqs_hz)))
        object.__setattr__(
            self, "overtone_ratios", tuple((int(m), float(db)) for m, db in self.overtone_ratios)
        )
        if not 1 <= len(self.freqs_hz) <= 2:
            raise InvalidFingerprint("one or two base frequencies required")
        for f in self.freqs_hz:
            if not FREQ_BAND[0] <= f <= FREQ_BAND[1]:
                raise InvalidFingerprint(f"base frequency {f} outside {FREQ_BAND}")
        if self.duty_on_s <= 0 or self.duty_off_s <= 0:
            raise InvalidFingerprint("duty times must be positive")
        if self.amp_dbfs > 0:
            raise InvalidFingerprint("amplitude must be <= 0 dBFS")
        for multiple, _ in self.overtone_ratios:
            if multiple < 2:
                raise InvalidFingerprint("overtone multiples start at 2")

    @property
    def cycle_s(self) -> float:
        return self.duty_on_s + self.duty_off_s

    def as_dict(self) -> dict:
        return {
            "operator_label": self.operator_label,
            "freqs_hz": list(self.freqs_hz),
            "duty_on_s": self.duty_on_s,
            "duty_off_s": self.duty_off_s,
            "amp_dbfs": self.amp_dbfs,
            "overtone_ratios": [[m, db] for m, db in self.overtone_ratios],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ToneFingerprint":
        return cls(
            operator_label=d["operator_label"],
            freqs_hz=tuple(d["freqs_hz"]),
            duty_on_s=float(d["duty_on_s"]),
            duty_off_s=float(d["duty_off_s"]),
            amp_dbfs=float(d["amp_dbfs"]),
            overtone_ratios=tuple((int(m), float(db)) for m, db in d.get("overtone_ratios", [])),
        )


@dataclass
class FeatureVector:
    freqs_hz: Tuple[float, ...]
    duty_on_s: float
    duty_off_s: float
    amp_dbfs: float
    overtone_ratios: Tuple[Tuple[int, float], ...] = ()
    confidence: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.freqs_hz = tuple(sorted(self.freqs_hz))

    def as_dict(self) -> dict:
        return {
            "freqs_hz": list(self.freqs_hz),
            "duty_on_s": self.duty_on_s,
            "duty_off_s": self.duty_off_s,
            "amp_dbfs": self.amp_dbfs,
            "overtone_ratios": [[m, db] for m, db in self.overtone_ratios],
            "confidence": dict(self.confidence),
        }
