"""Sliding-window identifier scanner for opaque binary blobs.

Structure-agnostic by design: proactive SMS payloads observed in the
field have unexplained framing, so the scanner tries every offset and
lets the BCD/Luhn/MCC constraints filter candidates.  Hits may overlap.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import FrozenSet, Iterable, List, Optional

from .bcd import decode_bcd_swapped, luhn_valid, NonDecimalNibble
from .mcc import KNOWN_MCCS

ICCID_BYTES = 10
IMSI_LENGTH_BYTE = 0x08
IMEISV_BYTES = 8


class IdentifierKind(Enum):
    IMSI = "Imsi"
    ICCID = "Iccid"
    IMEISV = "ImeiSv"


class Confidence(Enum):
    STRONG = "Strong"
    WEAK = "Weak"


@dataclass(frozen=True)
class IdentifierHit:
    kind: IdentifierKind
    digits: str
    byte_offset: int
    confidence: Confidence

    def as_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "digits": self.digits,
            "byte_offset": self.byte_offset,
            "confidence": self.confidence.value,
        }


def _try_iccid(blob: bytes, offset: int) -> Optional[IdentifierHit]:
    window = blob[offset : offset + ICCID_BYTES]
    if len(window) < ICCID_BYTES:
        return None
    try:
        digits = decode_bcd_swapped(window, filler_f_allowed=True)
    except NonDecimalNibble:
        return None
    if not 19 <= len(digits) <= 20:
        return None
    if not digits.startswith("89") or not luhn_valid(digits):
        return None
    return IdentifierHit(IdentifierKind.ICCID, digits, offset, Confidence.STRONG)


def _try_imsi(blob: bytes, offset: int, mcc_list: FrozenSet[str]) -> Optional[IdentifierHit]:
    if blob[offset] != IMSI_LENGTH_BYTE:
        return None
    body = blob[offset + 1 : offset + 1 + IMSI_LENGTH_BYTE]
    if len(body) < IMSI_LENGTH_BYTE:
        return None
    parity = body[0] & 0x0F
    if parity not in (0b0001, 0b1001):
        return None
    nibbles = [(body[0] >> 4) & 0x0F]
    for b in body[1:]:
        nibbles.append(b & 0x0F)
        nibbles.append((b >> 4) & 0x0F)
    if parity == 0b0001:
        if nibbles[-1] != 0xF:
            return None
        nibbles.pop()
    if any(n > 9 for n in nibbles):
        return None
    digits = "".join(str(n) for n in nibbles)
    if len(digits) > 15 or len(digits) < 6:
        return None
    confidence = Confidence.STRONG if digits[:3] in mcc_list else Confidence.WEAK
    return IdentifierHit(IdentifierKind.IMSI, digits, offset, confidence)


def _try_imeisv(blob: bytes, offset: int) -> Optional[IdentifierHit]:
    window = blob[offset : offset + IMEISV_BYTES]
    if len(window) < IMEISV_BYTES:
        return None
    try:
        digits = decode_bcd_swapped(window, filler_f_allowed=False)
    except NonDecimalNibble:
        return None
    if len(digits) != 16:
        return None
    return IdentifierHit(IdentifierKind.IMEISV, digits, offset, Confidence.WEAK)


def scan_identifiers(blob: bytes, mcc_list: Optional[Iterable[str]] = None) -> List[IdentifierHit]:
    """Scan a blob for embedded ICCID/IMSI/IMEI-SV encodings.

    Returns hits sorted by offset; an empty list when nothing matches.
    MCC membership only upgrades IMSI confidence, it never rejects.
    """
    if len(blob) < 3:
        return []
    mccs = frozenset(mcc_list) if mcc_list is not None else KNOWN_MCCS
    hits: List[IdentifierHit] = []
    for offset in range(len(blob)):
        for probe in (_try_iccid, _try_imeisv):
            hit = probe(blob, offset)
            if hit:
                hits.append(hit)
        hit = _try_imsi(blob, offset, mccs)
        if hit:
            hits.append(hit)
    hits.sort(key=lambda h: (h.byte_offset, h.kind.value))
    return hits
