"""Nibble-swapped BCD codecs and Luhn arithmetic.

Telecom identifiers (ICCID, IMSI, IMEI) travel as packed BCD with the
low nibble holding the earlier digit; unused trailing nibbles are 0xF
filler.  IMSI adds a leading length byte and a parity nibble.
"""

from __future__ import annotations

from ..errors import AtlasError


class NonDecimalNibble(AtlasError):
    code = "NonDecimalNibble"


class BadIdentifier(AtlasError):
    code = "BadIdentifier"


def decode_bcd_swapped(data: bytes, filler_f_allowed: bool = False) -> str:
    """Decode packed swapped BCD to a digit string.

    Per byte the low nibble comes first.  Trailing 0xF nibbles are
    stripped when filler_f_allowed; any other non-decimal nibble raises
    NonDecimalNibble.
    """
    if not data:
        raise NonDecimalNibble("empty BCD input")
    nibbles = []
    for b in data:
        nibbles.append(b & 0x0F)
        nibbles.append((b >> 4) & 0x0F)
    if filler_f_allowed:
        while nibbles and nibbles[-1] == 0xF:
            nibbles.pop()
    for n in nibbles:
        if n > 9:
            raise NonDecimalNibble(f"nibble {n:#x} is not a decimal digit")
    return "".join(str(n) for n in nibbles)


def encode_bcd_swapped(digits: str) -> bytes:
    """Inverse of decode_bcd_swapped; odd digit counts get an F filler
    in the final high nibble."""
    if not digits.isdigit():
        raise NonDecimalNibble(f"non-digit in {digits!r}")
    out = bytearray()
    for i in range(0, len(digits), 2):
        lo = int(digits[i])
        hi = int(digits[i + 1]) if i + 1 < len(digits) else 0xF
        out.append((hi << 4) | lo)
    return bytes(out)


def luhn_check_digit(digits: str) -> int:
    """Check digit that makes digits+d Luhn-valid."""
    total = 0
    for pos, ch in enumerate(reversed(digits)):
        d = int(ch)
        if pos % 2 == 0:  # doubling starts right of the check digit
            d *= 2
            if d > 9:
                d -= 9
        total += d
    return (10 - total % 10) % 10


def luhn_valid(digits: str) -> bool:
    if not digits.isdigit() or len(digits) < 2:
        return False
    return luhn_check_digit(digits[:-1]) == int(digits[-1])


def encode_iccid(iccid: str) -> bytes:
    """EF_ICCID content: ten bytes of swapped BCD, F-padded for
    19-digit ICCIDs."""
    if not 19 <= len(iccid) <= 20 or not iccid.isdigit():
        raise BadIdentifier(f"ICCID must be 19-20 digits, got {iccid!r}")
    raw = encode_bcd_swapped(iccid)
    return raw.ljust(10, b"\xff")


def decode_iccid(data: bytes) -> str:
    return decode_bcd_swapped(data, filler_f_allowed=True)


def encode_imsi(imsi: str) -> bytes:
    """EF_IMSI content: length byte, then parity-nibble BCD.

    The first content byte carries the parity/type nibble (1001 for an
    odd digit count, 0001 for even) low and the first digit high.
    """
    if not 6 <= len(imsi) <= 15 or not imsi.isdigit():
        raise BadIdentifier(f"IMSI must be 6-15 digits, got {imsi!r}")
    parity = 0b1001 if len(imsi) % 2 else 0b0001
    nibbles = [parity, int(imsi[0])] + [int(d) for d in imsi[1:]]
    if len(nibbles) % 2:
        nibbles.append(0xF)
    body = bytearray()
    for i in range(0, len(nibbles), 2):
        body.append((nibbles[i + 1] << 4) | nibbles[i])
    return bytes([len(body)]) + bytes(body)


def decode_imsi(data: bytes) -> str:
    """Inverse of encode_imsi; validates length byte and parity."""
    if len(data) < 2:
        raise BadIdentifier("EF_IMSI content shorter than 2 bytes")
    length = data[0]
    if length < 1 or 1 + length > len(data):
        raise BadIdentifier(f"IMSI length byte {length} exceeds content")
    body = data[1 : 1 + length]
    parity = body[0] & 0x0F
    if parity not in (0b0001, 0b1001):
        raise BadIdentifier(f"bad IMSI parity nibble {parity:#x}")
    nibbles = [(body[0] >> 4) & 0x0F]
    for b in body[1:]:
        nibbles.append(b & 0x0F)
        nibbles.append((b >> 4) & 0x0F)
    if parity == 0b0001:  # even count: final high nibble is filler
        if nibbles[-1] != 0xF:
            raise BadIdentifier("even-parity IMSI missing F filler")
        nibbles.pop()
    for n in nibbles:
        if n > 9:
            raise NonDecimalNibble(f"nibble {n:#x} in IMSI digits")
    return "".join(str(n) for n in nibbles)
