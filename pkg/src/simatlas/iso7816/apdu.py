"""Command and response APDUs (short form, T=0 wire layout)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..errors import AtlasError


class ApduError(AtlasError):
    code = "ApduError"


class LengthMismatch(ApduError):
    code = "LengthMismatch"


@dataclass(frozen=True)
class Apdu:
    """Command APDU.

    The four ISO 7816 cases are mutually exclusive and derived from
    (lc, le) presence: case 1 = neither, case 2 = le only,
    case 3 = lc only, case 4 = both.  On the T=0 wire the header is
    always exactly 5 bytes; P3 carries Lc (cases 3/4) or Le (case 2)
    or zero (case 1).
    """

    cla: int
    ins: int
    p1: int
    p2: int
    data: bytes = b""
    le: Optional[int] = None

    def __post_init__(self):
        for name in ("cla", "ins", "p1", "p2"):
            v = getattr(self, name)
            if not 0 <= v <= 0xFF:
                raise ApduError(f"{name} out of byte range: {v}")
        if len(self.data) > 255:
            raise ApduError(f"data too long for short APDU: {len(self.data)}")
        if self.le is not None and not 0 <= self.le <= 256:
            raise ApduError(f"le out of range: {self.le}")

    @property
    def lc(self) -> Optional[int]:
        return len(self.data) if self.data else None

    @property
    def case(self) -> int:
        if self.data:
            return 4 if self.le is not None else 3
        return 2 if self.le is not None else 1

    @property
    def p3(self) -> int:
        """The fifth header byte: Lc, Le (mod 256), or 0."""
        if self.data:
            return len(self.data)
        if self.le is not None:
            return self.le % 256
        return 0

    def header(self) -> bytes:
        return bytes([self.cla, self.ins, self.p1, self.p2, self.p3])

    def to_bytes(self) -> bytes:
        """Header plus command body.  Case-4 Le is not representable on
        the T=0 wire (GET RESPONSE carries it); to_bytes drops it."""
        return self.header() + self.data

    @classmethod
    def from_bytes(cls, raw: bytes) -> "Apdu":
        if len(raw) < 5:
            raise LengthMismatch(f"APDU shorter than 5-byte header: {len(raw)}")
        cla, ins, p1, p2, p3 = raw[:5]
        body = bytes(raw[5:])
        if body:
            if len(body) != p3:
                raise LengthMismatch(f"P3={p3} but {len(body)} body bytes")
            return cls(cla, ins, p1, p2, data=body)
        return cls(cla, ins, p1, p2, le=p3 if p3 else None)

    def matches_key(self, other: "Apdu") -> bool:
        """Equality on header fields plus the command body, used by
        trace replay.  Le is deliberately excluded: replays tolerate a
        modem probing response lengths differently."""
        return (self.cla, self.ins, self.p1, self.p2, self.lc, self.data) == (
            other.cla,
            other.ins,
            other.p1,
            other.p2,
            other.lc,
            other.data,
        )

    def __str__(self) -> str:
        return self.to_bytes().hex()


@dataclass(frozen=True)
class ResponseApdu:
    """Response APDU: optional data followed by the SW1 SW2 status."""

    data: bytes = b""
    sw1: int = 0x90
    sw2: int = 0x00

    def __post_init__(self):
        if not (0 <= self.sw1 <= 0xFF and 0 <= self.sw2 <= 0xFF):
            raise ApduError(f"status bytes out of range: {self.sw1:#x} {self.sw2:#x}")

    @property
    def sw(self) -> int:
        return (self.sw1 << 8) | self.sw2

    @classmethod
    def from_sw(cls, sw: int, data: bytes = b"") -> "ResponseApdu":
        return cls(data=data, sw1=(sw >> 8) & 0xFF, sw2=sw & 0xFF)

    def to_bytes(self) -> bytes:
        return self.data + bytes([self.sw1, self.sw2])

    @classmethod
    def from_bytes(cls, raw: bytes) -> "ResponseApdu":
        if len(raw) < 2:
            raise LengthMismatch("response APDU needs at least SW1 SW2")
        return cls(data=bytes(raw[:-2]), sw1=raw[-2], sw2=raw[-1])

    def __str__(self) -> str:
        return self.to_bytes().hex()


# Frequently used status words.
SW_OK = 0x9000
SW_FILE_NOT_FOUND = 0x6A82
SW_WRONG_LENGTH = 0x6700
SW_INS_NOT_SUPPORTED = 0x6D00
SW_UNKNOWN_ERROR = 0x6F00
