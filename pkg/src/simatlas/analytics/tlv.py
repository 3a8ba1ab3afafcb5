"""Definite-length TLV trees, including SIM Toolkit proactive commands.

The proactive command template (tag 0xD0) does not set the BER
constructed bit but still wraps a sequence of simple TLVs, so it is
special-cased as a container.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

from ..errors import AtlasError

PROACTIVE_COMMAND_TAG = 0xD0
SMS_TPDU_TAG = 0x8B
COMMAND_DETAILS_TAG = 0x81
DEVICE_IDENTITIES_TAG = 0x82
CMD_SEND_SHORT_MESSAGE = 0x13

# Tags treated as containers despite a clear constructed bit.
_CONTAINER_TAGS = frozenset({PROACTIVE_COMMAND_TAG})


class TlvError(AtlasError):
    code = "TlvError"


class Truncated(TlvError):
    code = "Truncated"


class IndefiniteLength(TlvError):
    code = "IndefiniteLength"


@dataclass(frozen=True)
class TlvNode:
    tag: int
    value: bytes = b""
    children: Tuple["TlvNode", ...] = ()

    @property
    def length(self) -> int:
        if self.children:
            return len(_serialize_children(self.children))
        return len(self.value)

    def find(self, tag: int) -> Optional["TlvNode"]:
        for child in self.children:
            if child.tag == tag:
                return child
        return None


def _is_container(tag: int) -> bool:
    first = tag >> 8 if tag > 0xFF else tag
    return bool(first & 0x20) or tag in _CONTAINER_TAGS


def _read_tag(data: bytes, pos: int) -> tuple:
    if pos >= len(data):
        raise Truncated("expected a tag byte")
    tag = data[pos]
    pos += 1
    if tag & 0x1F == 0x1F:  # two-byte tag
        if pos >= len(data):
            raise Truncated("two-byte tag cut short")
        tag = (tag << 8) | data[pos]
        pos += 1
    return tag, pos


def _read_length(data: bytes, pos: int) -> tuple:
    if pos >= len(data):
        raise Truncated("expected a length byte")
    first = data[pos]
    pos += 1
    if first < 0x80:
        return first, pos
    if first == 0x80:
        raise IndefiniteLength("indefinite lengths are not supported")
    count = first & 0x7F
    if count > 2:
        raise TlvError(f"length of length {count} exceeds 65535 cap")
    if pos + count > len(data):
        raise Truncated("long-form length cut short")
    value = int.from_bytes(data[pos : pos + count], "big")
    return value, pos + count


def _encode_length(length: int) -> bytes:
    if length < 0x80:
        return bytes([length])
    if length <= 0xFF:
        return bytes([0x81, length])
    if length <= 0xFFFF:
        return bytes([0x82, length >> 8, length & 0xFF])
    raise TlvError(f"value too long for definite length: {length}")


def _encode_tag(tag: int) -> bytes:
    if tag <= 0xFF:
        return bytes([tag])
    return bytes([(tag >> 8) & 0xFF, tag & 0xFF])


def _parse_one(data: bytes, pos: int) -> tuple:
    tag, pos = _read_tag(data, pos)
    length, pos = _read_length(data, pos)
    if pos + length > len(data):
        raise Truncated(f"value of tag {tag:#x} needs {length} bytes, {len(data) - pos} left")
    value = bytes(data[pos : pos + length])
    pos += length
    if _is_container(tag):
        children = _parse_sequence(value)
        return TlvNode(tag=tag, children=children), pos
    return TlvNode(tag=tag, value=value), pos


def _parse_sequence(data: bytes) -> Tuple[TlvNode, ...]:
    nodes = []
    pos = 0
    while pos < len(data):
        node, pos = _parse_one(data, pos)
        nodes.append(node)
    return tuple(nodes)


def parse_tlv(data: bytes) -> TlvNode:
    """Parse exactly one TLV object; trailing bytes are an error."""
    node, pos = _parse_one(bytes(data), 0)
    if pos != len(data):
        raise TlvError(f"{len(data) - pos} trailing byte(s) after TLV")
    return node


def _serialize_children(children: Tuple[TlvNode, ...]) -> bytes:
    return b"".join(serialize_tlv(c) for c in children)


def serialize_tlv(node: TlvNode) -> bytes:
    body = _serialize_children(node.children) if node.children else node.value
    return _encode_tag(node.tag) + _encode_length(len(body)) + body


def build_proactive_sms(payload: bytes) -> bytes:
    """Minimal SEND SHORT MESSAGE proactive command wrapping payload.

    Command details (type 0x13), device identities SIM->network, and
    the SMS TPDU holding the raw payload.
    """
    if len(payload) > 255:
        raise TlvError("proactive SMS payload larger than 255 bytes")
    node = TlvNode(
        tag=PROACTIVE_COMMAND_TAG,
        children=(
            TlvNode(COMMAND_DETAILS_TAG, bytes([0x01, CMD_SEND_SHORT_MESSAGE, 0x00])),
            TlvNode(DEVICE_IDENTITIES_TAG, bytes([0x81, 0x83])),
            TlvNode(SMS_TPDU_TAG, bytes(payload)),
        ),
    )
    return serialize_tlv(node)


def extract_proactive_sms(tlv: TlvNode) -> bytes:
    """SMS payload from a tag-D0 proactive command."""
    if tlv.tag != PROACTIVE_COMMAND_TAG:
        raise TlvError(f"not a proactive command: tag {tlv.tag:#x}")
    tpdu = tlv.find(SMS_TPDU_TAG)
    if tpdu is None:
        raise TlvError("proactive command carries no SMS TPDU")
    return tpdu.value
