"""Deterministic authentication stub.

A keyed PRF (HMAC-SHA256) stands in for the operator's MILENAGE or
COMP128: the measurement stack only needs determinism and full key/
challenge dependence, not cryptographic interoperability.
"""

from __future__ import annotations

import hashlib
import hmac

from ..errors import AtlasError

RES_LEN = 8
SESSION_KEY_LEN = 16


class LengthError(AtlasError):
    code = "LengthError"


def authenticate_stub(ki: bytes, rand: bytes) -> tuple:
    """(res, session_key) derived from the 16-byte key and challenge."""
    if len(ki) != 16:
        raise LengthError(f"ki must be 16 bytes, got {len(ki)}")
    if len(rand) != 16:
        raise LengthError(f"rand must be 16 bytes, got {len(rand)}")
    digest = hmac.new(ki, b"auth" + rand, hashlib.sha256).digest()
    return digest[:RES_LEN], digest[RES_LEN : RES_LEN + SESSION_KEY_LEN]
