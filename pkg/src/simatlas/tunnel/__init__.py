"""Framed TCP protocol that decouples SIM from modem.

Attach-by-IMSI, APDU relay with per-direction sequence numbers,
reset/ATR propagation, keepalive, and the client-side circuit state.
"""

from .frames import (
    FrameKind,
    TunnelFrame,
    FrameError,
    Truncated,
    UnknownKind,
    FrameLengthMismatch,
    encode_frame,
    decode_frame,
    read_frame,
    PROTO_VERSION,
)
from .client import (
    TunnelClient,
    CircuitState,
    TunnelError,
    Detached,
    TunnelTimeout,
    AttachRefused,
    SimBusy,
    UnknownImsi,
    BadToken,
    CooldownActive,
    CapacityExceeded,
    error_to_exception,
)

__all__ = [
    "FrameKind",
    "TunnelFrame",
    "FrameError",
    "Truncated",
    "UnknownKind",
    "FrameLengthMismatch",
    "encode_frame",
    "decode_frame",
    "read_frame",
    "PROTO_VERSION",
    "TunnelClient",
    "CircuitState",
    "TunnelError",
    "Detached",
    "TunnelTimeout",
    "AttachRefused",
    "SimBusy",
    "UnknownImsi",
    "BadToken",
    "CooldownActive",
    "CapacityExceeded",
    "error_to_exception",
]
