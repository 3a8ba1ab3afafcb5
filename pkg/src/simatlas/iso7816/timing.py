"""Fi/Di timing tables and clock math.

One elementary time unit (etu, the bit period) lasts Fi/Di clock cycles,
so the line rate is clock_hz * Di / Fi baud.  Reserved table slots are
rejected outright instead of being defaulted.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import AtlasError

# Index -> value tables from ISO 7816-3. None marks an RFU slot.
FI_TABLE = (372, 372, 558, 744, 1116, 1488, 1860, None, None, 512, 768, 1024, 1536, 2048, None, None)
DI_TABLE = (None, 1, 2, 4, 8, 16, 32, 64, None, None, None, None, None, None, None, None)


class InvalidClockParams(AtlasError):
    code = "InvalidClockParams"


def fi_from_index(index: int) -> int:
    if not 0 <= index <= 15 or FI_TABLE[index] is None:
        raise InvalidClockParams(f"Fi index {index} is reserved")
    return FI_TABLE[index]


def di_from_index(index: int) -> int:
    if not 0 <= index <= 15 or DI_TABLE[index] is None:
        raise InvalidClockParams(f"Di index {index} is reserved")
    return DI_TABLE[index]


@dataclass(frozen=True)
class ClockParams:
    clock_hz: float
    fi: int = 372
    di: int = 1

    def __post_init__(self):
        if self.clock_hz <= 0:
            raise InvalidClockParams(f"clock must be positive, got {self.clock_hz}")
        if self.fi not in FI_TABLE:
            raise InvalidClockParams(f"F={self.fi} is not a table value")
        if self.di not in DI_TABLE:
            raise InvalidClockParams(f"D={self.di} is not a table value")

    @classmethod
    def from_indices(cls, clock_hz: float, fi_index: int, di_index: int) -> "ClockParams":
        return cls(clock_hz, fi_from_index(fi_index), di_from_index(di_index))

    @classmethod
    def from_ta1(cls, clock_hz: float, ta1: int) -> "ClockParams":
        return cls.from_indices(clock_hz, (ta1 >> 4) & 0x0F, ta1 & 0x0F)


def effective_baud(params: ClockParams) -> float:
    """Bit rate in baud for the negotiated Fi/Di at the given clock."""
    return params.clock_hz * params.di / params.fi


def clock_within_tolerance(nominal_hz: float, actual_hz: float, neg_pct: float, pos_pct: float) -> bool:
    """True iff the actual clock deviates from nominal by no more than
    neg_pct below and pos_pct above (percent)."""
    if nominal_hz <= 0:
        raise InvalidClockParams("nominal clock must be positive")
    if neg_pct < 0 or pos_pct < 0:
        raise InvalidClockParams("tolerances must be non-negative")
    deviation_pct = 100.0 * (actual_hz - nominal_hz) / nominal_hz
    return -neg_pct <= deviation_pct <= pos_pct
