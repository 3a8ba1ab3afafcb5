"""Labeled fingerprint presets.

European singles around 420-430 Hz with one second on / four seconds
off (AT_A1 runs five seconds off on circuit-switched calls); North
American operators share the 440+480 Hz dual tone with two seconds on
and differ mainly in amplitude.  Amplitudes and overtone levels are
synthetic but mutually distinguishable.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import List, Sequence

from .model import ToneFingerprint


def _eu(label, freq, amp, overtones=(), off=4.0):
    return ToneFingerprint(
        operator_label=label,
        freqs_hz=(freq,),
        duty_on_s=1.0,
        duty_off_s=off,
        amp_dbfs=amp,
        overtone_ratios=tuple(overtones),
    )


def _na(label, amp):
    return ToneFingerprint(
        operator_label=label,
        freqs_hz=(440.0, 480.0),
        duty_on_s=2.0,
        duty_off_s=4.0,
        amp_dbfs=amp,
    )


PRESETS: List[ToneFingerprint] = [
    _eu("AT_A1", 425.0, -8.0, off=5.0),  # the five-second off-time outlier
    _eu("AT_Magenta", 425.0, -11.0, [(2, -18.0)]),
    _eu("AT_Drei", 420.0, -9.0),
    _eu("DE_o2", 426.0, -9.2),
    _eu("DE_Telekom", 426.0, -14.7, [(2, -16.0)]),
    _eu("DE_Vodafone", 425.0, -14.0, [(3, -20.0)]),
    _eu("RO_Vodafone", 430.0, -15.6),
    _eu("RO_Digi", 426.5, -12.0),
    _eu("RO_Orange", 430.0, -10.0, [(2, -14.0)]),
    _eu("FI_Telia", 426.5, -13.5),  # near-collision with RO_Digi
    _eu("FI_DNA", 425.0, -17.0, [(2, -12.0)]),
    _eu("HR_A1", 425.0, -12.5),
    _eu("SI_A1", 425.5, -16.5),  # near-collision with HR_A1
    _eu("SI_Telekom", 420.0, -15.0, [(2, -22.0)]),
    _eu("SK_Telekom", 425.0, -6.0, [(2, -25.0)]),
    _na("US_ATT", -8.0),
    _na("US_TMobile", -11.5),
    _na("CA_Rogers", -15.0),
    _na("CA_Bell", -17.5),
]


def default_db() -> List[ToneFingerprint]:
    return list(PRESETS)


def preset(label: str) -> ToneFingerprint:
    for fp in PRESETS:
        if fp.operator_label == label:
            return fp
    raise KeyError(f"no preset named {label!r}")


def save_db(db: Sequence[ToneFingerprint], path) -> None:
    Path(path).write_text(json.dumps([fp.as_dict() for fp in db], indent=2) + "\n")


def load_db(path) -> List[ToneFingerprint]:
    return [ToneFingerprint.from_dict(d) for d in json.loads(Path(path).read_text())]
