"""Protocol and Parameter Selection frames.

A PPS exchange after the ATR lets the modem switch to faster Fi/Di
settings.  The check byte makes the XOR over the whole frame zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..errors import AtlasError
from .timing import di_from_index, fi_from_index, InvalidClockParams

PPSS = 0xFF
_PPS1_PRESENT = 0x10


class InvalidIndex(AtlasError):
    code = "InvalidIndex"


class MalformedPps(AtlasError):
    code = "MalformedPps"


@dataclass(frozen=True)
class PpsFrame:
    pps0: int
    pps1: Optional[int] = None
    ppss: int = PPSS

    def __post_init__(self):
        if self.ppss != PPSS:
            raise MalformedPps(f"PPSS must be 0xFF, got {self.ppss:#04x}")
        if (self.pps1 is not None) != bool(self.pps0 & _PPS1_PRESENT):
            raise MalformedPps("PPS1 presence disagrees with PPS0 bit 5")

    @property
    def pck(self) -> int:
        pck = self.ppss ^ self.pps0
        if self.pps1 is not None:
            pck ^= self.pps1
        return pck

    @property
    def protocol(self) -> int:
        return self.pps0 & 0x0F

    def fi_di(self) -> Optional[tuple]:
        if self.pps1 is None:
            return None
        return fi_from_index((self.pps1 >> 4) & 0x0F), di_from_index(self.pps1 & 0x0F)

    def to_bytes(self) -> bytes:
        body = [self.ppss, self.pps0]
        if self.pps1 is not None:
            body.append(self.pps1)
        body.append(self.pck)
        return bytes(body)


def build_pps(fi_index: int, di_index: int, protocol: int = 0) -> PpsFrame:
    """PPS request frame selecting the given Fi/Di table indices.

    Raises InvalidIndex for reserved table slots.
    """
    try:
        fi_from_index(fi_index)
        di_from_index(di_index)
    except InvalidClockParams as exc:
        raise InvalidIndex(str(exc)) from exc
    if not 0 <= protocol <= 0x0F:
        raise InvalidIndex(f"protocol nibble out of range: {protocol}")
    pps0 = _PPS1_PRESENT | protocol
    pps1 = ((fi_index & 0x0F) << 4) | (di_index & 0x0F)
    return PpsFrame(pps0=pps0, pps1=pps1)


def parse_pps(raw: bytes) -> PpsFrame:
    if len(raw) < 3:
        raise MalformedPps(f"PPS frame too short: {len(raw)} bytes")
    if raw[0] != PPSS:
        raise MalformedPps(f"bad PPSS byte {raw[0]:#04x}")
    pps0 = raw[1]
    expected_len = 4 if pps0 & _PPS1_PRESENT else 3
    # Optional PPS2/PPS3 are never emitted by this stack.
    if pps0 & 0x60:
        raise MalformedPps("PPS2/PPS3 not supported")
    if len(raw) != expected_len:
        raise MalformedPps(f"expected {expected_len} bytes, got {len(raw)}")
    xor = 0
    for b in raw:
        xor ^= b
    if xor != 0:
        raise MalformedPps(f"PCK check failed (xor={xor:#04x})")
    pps1 = raw[2] if pps0 & _PPS1_PRESENT else None
    return PpsFrame(pps0=pps0, pps1=pps1)
