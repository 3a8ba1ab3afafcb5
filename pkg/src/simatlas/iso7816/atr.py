"""Answer To Reset parsing and construction.

Only the direct convention (TS = 0x3B) is accepted; every modem in the
deployment negotiates direct convention and inverse-convention cards are
out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

from ..errors import AtlasError

TS_DIRECT = 0x3B

# Interface byte tags in transmission order within one set.
TAGS = ("TA", "TB", "TC", "TD")
_TAG_BIT = {"TA": 0x1, "TB": 0x2, "TC": 0x4, "TD": 0x8}


class MalformedAtr(AtlasError):
    code = "MalformedAtr"


@dataclass(frozen=True)
class InterfaceByte:
    tag: str  # TA / TB / TC / TD
    index: int  # set number, starting at 1
    value: int

    def __post_init__(self):
        if self.tag not in TAGS:
            raise MalformedAtr(f"unknown interface byte tag {self.tag}")
        if not 0 <= self.value <= 0xFF:
            raise MalformedAtr(f"interface byte value out of range: {self.value}")


@dataclass(frozen=True)
class Atr:
    ts: int = TS_DIRECT
    t0: int = 0x00
    interface_bytes: Tuple[InterfaceByte, ...] = ()
    historical: bytes = b""
    tck: Optional[int] = None

    def protocols(self) -> set:
        """Protocols indicated by TD bytes; empty set implies T=0 only."""
        protos = {ib.value & 0x0F for ib in self.interface_bytes if ib.tag == "TD"}
        return protos or {0}

    def ta1(self) -> Optional[int]:
        for ib in self.interface_bytes:
            if ib.tag == "TA" and ib.index == 1:
                return ib.value
        return None


def parse_atr(raw: bytes) -> Atr:
    """Parse a raw ATR; raises MalformedAtr on any structural defect,
    including trailing garbage."""
    if len(raw) < 2:
        raise MalformedAtr(f"ATR needs at least TS and T0, got {len(raw)} bytes")
    if raw[0] != TS_DIRECT:
        raise MalformedAtr(f"unsupported TS {raw[0]:#04x} (direct convention only)")
    t0 = raw[1]
    pos = 2
    interface: List[InterfaceByte] = []
    y = (t0 >> 4) & 0x0F
    index = 1
    while y:
        for tag in TAGS:
            if y & _TAG_BIT[tag]:
                if pos >= len(raw):
                    raise MalformedAtr(f"ATR truncated at {tag}{index}")
                interface.append(InterfaceByte(tag, index, raw[pos]))
                pos += 1
        tds = [ib for ib in interface if ib.tag == "TD" and ib.index == index]
        y = (tds[0].value >> 4) & 0x0F if tds else 0
        index += 1

    hist_len = t0 & 0x0F
    if pos + hist_len > len(raw):
        raise MalformedAtr("ATR truncated inside historical bytes")
    historical = bytes(raw[pos : pos + hist_len])
    pos += hist_len

    protocols = {ib.value & 0x0F for ib in interface if ib.tag == "TD"} or {0}
    tck = None
    if protocols != {0}:
        if pos >= len(raw):
            raise MalformedAtr("TCK required when a protocol other than T=0 is offered")
        tck = raw[pos]
        pos += 1
        xor = 0
        for b in raw[1 : pos]:
            xor ^= b
        if xor != 0:
            raise MalformedAtr(f"TCK check failed (xor={xor:#04x})")
    if pos != len(raw):
        raise MalformedAtr(f"{len(raw) - pos} trailing byte(s) after ATR")
    return Atr(ts=raw[0], t0=t0, interface_bytes=tuple(interface), historical=historical, tck=tck)


def build_atr(atr: Atr) -> bytes:
    """Serialize; validates that t0/TD presence nibbles agree with the
    interface byte list and that TCK is present exactly when needed."""
    by_index: dict = {}
    for ib in atr.interface_bytes:
        key = (ib.index, ib.tag)
        if key in by_index:
            raise MalformedAtr(f"duplicate interface byte {ib.tag}{ib.index}")
        by_index[key] = ib.value

    if len(atr.historical) > 15:
        raise MalformedAtr("more than 15 historical bytes")
    if atr.t0 & 0x0F != len(atr.historical):
        raise MalformedAtr("T0 low nibble disagrees with historical length")

    out = bytearray([atr.ts, atr.t0])
    indices = sorted({i for (i, _) in by_index}) or []
    y = (atr.t0 >> 4) & 0x0F
    index = 1
    consumed = 0
    while y:
        present = [tag for tag in TAGS if y & _TAG_BIT[tag]]
        for tag in present:
            if (index, tag) not in by_index:
                raise MalformedAtr(f"presence bit set but {tag}{index} missing")
            out.append(by_index[(index, tag)])
            consumed += 1
        y = (by_index[(index, "TD")] >> 4) & 0x0F if (index, "TD") in by_index else 0
        index += 1
    if consumed != len(by_index):
        raise MalformedAtr("interface bytes present without matching presence bits")
    if indices and indices != list(range(1, len(indices) + 1)):
        raise MalformedAtr("interface byte set indices must be contiguous from 1")

    out += atr.historical
    if atr.protocols() != {0}:
        tck = 0
        for b in out[1:]:
            tck ^= b
        if atr.tck is not None and atr.tck != tck:
            raise MalformedAtr(f"stored TCK {atr.tck:#04x} disagrees with computed {tck:#04x}")
        out.append(tck)
    elif atr.tck is not None:
        raise MalformedAtr("TCK forbidden when only T=0 is offered")
    return bytes(out)


def read_atr(recv: Callable[[], Optional[int]]) -> bytes:
    """Incrementally read one ATR from a byte source.

    recv() returns the next byte or None on timeout/stream end, in which
    case the ATR is reported truncated.  Used by the modem side, which
    must know how many bytes to expect before it can parse.
    """
    buf = bytearray()

    def need(n: int):
        while len(buf) < n:
            b = recv()
            if b is None:
                raise MalformedAtr(f"ATR truncated after {len(buf)} bytes")
            buf.append(b)

    need(2)
    if buf[0] != TS_DIRECT:
        raise MalformedAtr(f"unsupported TS {buf[0]:#04x}")
    pos = 2
    y = (buf[1] >> 4) & 0x0F
    protocols = set()
    while y:
        count = bin(y).count("1")
        need(pos + count)
        td_offset = None
        if y & _TAG_BIT["TD"]:
            td_offset = pos + count - 1
        pos += count
        if td_offset is not None:
            protocols.add(buf[td_offset] & 0x0F)
            y = (buf[td_offset] >> 4) & 0x0F
        else:
            y = 0
    need(pos + (buf[1] & 0x0F))
    pos += buf[1] & 0x0F
    if protocols and protocols != {0}:
        need(pos + 1)
        pos += 1
    return bytes(buf)
