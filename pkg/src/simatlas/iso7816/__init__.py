"""Byte-accurate ISO 7816-3 T=0 building blocks.

APDU encode/decode, ATR and PPS frames with checksums, Fi/Di timing
math, and the card-side T=0 state machine with waiting-time extension
(NULL byte) support.
"""

from .apdu import Apdu, ResponseApdu, ApduError, LengthMismatch
from .atr import Atr, InterfaceByte, MalformedAtr, parse_atr, build_atr, read_atr
from .pps import PpsFrame, InvalidIndex, MalformedPps, build_pps, parse_pps
from .timing import (
    FI_TABLE,
    DI_TABLE,
    ClockParams,
    effective_baud,
    clock_within_tolerance,
)
from .t0 import (
    T0CardSession,
    T0State,
    BytePipe,
    CardWire,
    ProtocolViolation,
    HandlerFailure,
    WaitingTimeExpired,
    RESET,
    t0_card_drive,
)

__all__ = [
    "Apdu",
    "ResponseApdu",
    "ApduError",
    "LengthMismatch",
    "Atr",
    "InterfaceByte",
    "MalformedAtr",
    "parse_atr",
    "build_atr",
    "read_atr",
    "PpsFrame",
    "InvalidIndex",
    "MalformedPps",
    "build_pps",
    "parse_pps",
    "FI_TABLE",
    "DI_TABLE",
    "ClockParams",
    "effective_baud",
    "clock_within_tolerance",
    "T0CardSession",
    "T0State",
    "BytePipe",
    "CardWire",
    "ProtocolViolation",
    "HandlerFailure",
    "WaitingTimeExpired",
    "RESET",
    "t0_card_drive",
]
