"""Tunnel wire format.

Nine-byte header: payload length (u32 BE), kind (u8), sequence number
(u32 BE), then the payload.  Sequence numbers increase strictly per
direction; response kinds echo the sequence of the frame they answer.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import Optional

from ..errors import AtlasError

PROTO_VERSION = 1
HEADER_LEN = 9
MAX_PAYLOAD = 1 << 20  # sanity cap; SIM traffic is tiny


class FrameError(AtlasError):
    code = "FrameError"


class Truncated(FrameError):
    code = "Truncated"


class UnknownKind(FrameError):
    code = "UnknownKind"


class FrameLengthMismatch(FrameError):
    code = "LengthMismatch"


class FrameKind(IntEnum):
    HELLO = 0x01
    ATTACH = 0x02
    GRANTED = 0x03
    APDU_REQ = 0x04
    APDU_RESP = 0x05
    RESET = 0x06
    ATR = 0x07
    PING = 0x08
    PONG = 0x09
    DETACH = 0x0A
    ERROR = 0x0F


@dataclass(frozen=True)
class TunnelFrame:
    kind: FrameKind
    seq: int
    payload: bytes = b""

    def __post_init__(self):
        if not isinstance(self.kind, FrameKind):
            raise UnknownKind(f"bad frame kind {self.kind!r}")
        if not 0 <= self.seq <= 0xFFFFFFFF:
            raise FrameError(f"seq out of range: {self.seq}")


def encode_frame(frame: TunnelFrame) -> bytes:
    return struct.pack(">IBI", len(frame.payload), frame.kind, frame.seq) + frame.payload


def decode_frame(data: bytes) -> TunnelFrame:
    """Decode exactly one frame; the buffer must contain nothing else."""
    if len(data) < HEADER_LEN:
        raise Truncated(f"frame needs {HEADER_LEN} header bytes, got {len(data)}")
    length, kind_byte, seq = struct.unpack(">IBI", data[:HEADER_LEN])
    try:
        kind = FrameKind(kind_byte)
    except ValueError as exc:
        raise UnknownKind(f"kind byte {kind_byte:#04x}") from exc
    payload = data[HEADER_LEN:]
    if len(payload) != length:
        raise FrameLengthMismatch(f"declared {length} payload bytes, got {len(payload)}")
    return TunnelFrame(kind=kind, seq=seq, payload=bytes(payload))


def read_frame(read_exactly) -> Optional[TunnelFrame]:
    """Read one frame from a stream.

    read_exactly(n) must return exactly n bytes, b"" on a clean EOF at
    a frame boundary, and raise on a mid-frame disconnect.  Returns
    None on clean EOF.
    """
    header = read_exactly(HEADER_LEN)
    if not header:
        return None
    if len(header) < HEADER_LEN:
        raise Truncated("stream ended inside a frame header")
    length, kind_byte, seq = struct.unpack(">IBI", header)
    if length > MAX_PAYLOAD:
        raise FrameError(f"payload length {length} exceeds cap")
    try:
        kind = FrameKind(kind_byte)
    except ValueError as exc:
        raise UnknownKind(f"kind byte {kind_byte:#04x}") from exc
    payload = read_exactly(length) if length else b""
    if len(payload) < length:
        raise Truncated("stream ended inside a frame payload")
    return TunnelFrame(kind=kind, seq=seq, payload=bytes(payload))


def sock_reader(sock):
    """read_exactly over a socket for read_frame."""

    def read_exactly(n: int) -> bytes:
        buf = bytearray()
        while len(buf) < n:
            chunk = sock.recv(n - len(buf))
            if not chunk:
                if buf:
                    raise Truncated("connection lost mid-frame")
                return b""
            buf += chunk
        return bytes(buf)

    return read_exactly
