"""Nearest-fingerprint matching.

Distance is a weighted sum of per-field normalized deviations chosen so
one just-noticeable step per field contributes about equally: 2 Hz of
frequency, 0.1 s of duty, 1 dB of amplitude.  A missing or extra base
frequency carries a flat penalty large enough that single-tone and
dual-tone plans never confuse.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

from .model import FeatureVector, ToneFingerprint

FREQ_SCALE_HZ = 2.0
DUTY_SCALE_S = 0.1
AMP_SCALE_DB = 1.0
OVERTONE_SCALE_DB = 6.0
MISSING_FREQ_PENALTY = 10.0
OVERTONE_MISMATCH_PENALTY = 1.0
DEFAULT_REJECT_THRESHOLD = 8.0
TIE_EPSILON = 1e-9


@dataclass(frozen=True)
class MatchResult:
    label: str
    distance: float
    tie: bool = False


def fingerprint_distance(features: FeatureVector, fp: ToneFingerprint) -> float:
    total = 0.0
    got, want = list(features.freqs_hz), list(fp.freqs_hz)
    for a, b in zip(got, want):
        total += abs(a - b) / FREQ_SCALE_HZ
    total += MISSING_FREQ_PENALTY * abs(len(got) - len(want))
    total += abs(features.duty_on_s - fp.duty_on_s) / DUTY_SCALE_S
    total += abs(features.duty_off_s - fp.duty_off_s) / DUTY_SCALE_S
    total += abs(features.amp_dbfs - fp.amp_dbfs) / AMP_SCALE_DB
    mine = dict(features.overtone_ratios)
    theirs = dict(fp.overtone_ratios)
    for multiple in sorted(set(mine) | set(theirs)):
        if multiple in mine and multiple in theirs:
            total += abs(mine[multiple] - theirs[multiple]) / OVERTONE_SCALE_DB
        else:
            total += OVERTONE_MISMATCH_PENALTY
    return total


def match_fingerprint(
    features: FeatureVector,
    db: Sequence[ToneFingerprint],
    reject_threshold: Optional[float] = DEFAULT_REJECT_THRESHOLD,
) -> List[MatchResult]:
    """Ranked matches, ascending distance; lexicographic label order
    breaks exact ties and flags them.  An empty db is a caller error.

    When the best distance exceeds reject_threshold the first result is
    replaced by a "no confident match" marker with the same distance.
    """
    if not db:
        raise ValueError("fingerprint db must not be empty")
    scored = sorted(
        (fingerprint_distance(features, fp), fp.operator_label) for fp in db
    )
    results: List[MatchResult] = []
    for i, (distance, label) in enumerate(scored):
        tie = (i > 0 and abs(distance - scored[i - 1][0]) <= TIE_EPSILON) or (
            i + 1 < len(scored) and abs(distance - scored[i + 1][0]) <= TIE_EPSILON
        )
        results.append(MatchResult(label=label, distance=distance, tie=tie))
    if reject_threshold is not None and results[0].distance > reject_threshold:
        results.insert(0, MatchResult(label="no confident match", distance=results[0].distance))
    return results
