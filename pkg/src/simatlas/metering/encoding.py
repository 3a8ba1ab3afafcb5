"""Binary-power traffic-class encoding.

Class c transfers 2^c units of data, so one quota diff taken after the
CDRs settle separates every class: the billed amount's decomposition
over the planned powers identifies exactly which classes were charged.
Decoding inverts that under the operator's round-up granularity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Optional, Set, Tuple

from ..errors import AtlasError

MIB = 1024 * 1024
MAX_CLASS = 20


class Ambiguous(AtlasError):
    code = "Ambiguous"


class NegativeBilled(AtlasError):
    code = "NegativeBilled"


class PlanError(AtlasError):
    code = "PlanError"


@dataclass(frozen=True)
class TrafficClassPlan:
    classes: FrozenSet[int]
    unit_bytes: int = MIB

    def __post_init__(self):
        object.__setattr__(self, "classes", frozenset(self.classes))
        if any(not 0 <= c <= MAX_CLASS for c in self.classes):
            raise PlanError(f"class numbers must lie in 0..{MAX_CLASS}")
        if self.unit_bytes < 1:
            raise PlanError("unit_bytes must be positive")

    def volume(self, class_nr: int) -> int:
        return (1 << class_nr) * self.unit_bytes

    def total(self, subset: Iterable[int]) -> int:
        return sum(self.volume(c) for c in subset)


@dataclass(frozen=True)
class TransferStep:
    class_nr: int
    volume_bytes: int


def encode_classes(plan: TrafficClassPlan) -> List[TransferStep]:
    """Transfer schedule: one step per class, ascending class order."""
    return [TransferStep(c, plan.volume(c)) for c in sorted(plan.classes)]


def round_up(n: int, granularity: int) -> int:
    if granularity < 1:
        raise PlanError("rounding granularity must be >= 1 byte")
    return -(-n // granularity) * granularity


def decode_billed(billed_bytes: int, plan: TrafficClassPlan, rounding_bytes: int) -> FrozenSet[int]:
    """Recover the set of billed classes from one settled quota diff.

    Finds the subset minimizing |billed - round_up(subset volume)|;
    raises Ambiguous when the minimizer is not unique or misses by a
    full rounding step (the billed amount then cannot have come from
    this plan at this granularity).

    Subset sums of distinct powers are strictly monotone in the
    compressed-bit index over ascending classes, and the rounded sum is
    therefore monotone too, so the minimizer sits at the boundary found
    by a binary search; ties can only be index-adjacent windows.
    """
    if billed_bytes < 0:
        raise NegativeBilled(f"billed amount {billed_bytes} is negative")
    if rounding_bytes < 1:
        raise PlanError("rounding granularity must be >= 1 byte")

    order = sorted(plan.classes)
    top = (1 << len(order)) - 1

    def subset_sum(x: int) -> int:
        return sum(plan.volume(c) for i, c in enumerate(order) if x & (1 << i))

    def rounded(x: int) -> int:
        total = subset_sum(x)
        return round_up(total, rounding_bytes) if total else 0

    def to_classes(x: int) -> FrozenSet[int]:
        return frozenset(c for i, c in enumerate(order) if x & (1 << i))

    # largest index whose rounded sum does not exceed billed
    lo_x, hi_x = 0, top
    while lo_x < hi_x:
        mid = (lo_x + hi_x + 1) // 2
        if rounded(mid) <= billed_bytes:
            lo_x = mid
        else:
            hi_x = mid - 1
    below = lo_x if rounded(lo_x) <= billed_bytes else None
    above = below + 1 if below is not None and below < top else (0 if below is None else None)

    f_below = billed_bytes - rounded(below) if below is not None else None
    f_above = rounded(above) - billed_bytes if above is not None else None

    candidates = [(f, x) for f, x in ((f_below, below), (f_above, above)) if f is not None]
    best, winner = min(candidates)
    ambiguity = f"{billed_bytes} sits exactly between two subsets"
    ambiguous = f_below is not None and f_above is not None and f_below == f_above
    # a same-side tie means two sums share the winning rounding window
    if not ambiguous and winner == below and below > 0 and rounded(below - 1) == rounded(below):
        ambiguous, ambiguity = True, "two subsets round to the same billed amount"
    if not ambiguous and winner == above and above < top and rounded(above + 1) == rounded(above):
        ambiguous, ambiguity = True, "two subsets round to the same billed amount"
    if ambiguous:
        raise Ambiguous(ambiguity)
    if best >= rounding_bytes:
        raise Ambiguous(
            f"no subset within one rounding step of {billed_bytes} (closest misses by {best})"
        )
    return to_classes(winner)
