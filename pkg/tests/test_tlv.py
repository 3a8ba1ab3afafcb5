import pytest
from hypothesis import given, settings, strategies as st

from simatlas.analytics import (
    IndefiniteLength,
    TlvError,
    TlvNode,
    Truncated,
    extract_proactive_sms,
    parse_tlv,
    serialize_tlv,
)
from simatlas.analytics.tlv import build_proactive_sms


def test_primitive_round_trip():
    node = TlvNode(tag=0x81, value=b"\x01\x02\x03")
    assert parse_tlv(serialize_tlv(node)) == node


def test_nested_two_level_round_trip():
    tree = TlvNode(
        tag=0xA1,  # constructed bit set
        children=(
            TlvNode(0x81, b"\x01"),
            TlvNode(0x82, b"\x02\x03"),
        ),
    )
    raw = serialize_tlv(tree)
    parsed = parse_tlv(raw)
    assert parsed == tree
    assert serialize_tlv(parsed) == raw
    assert len(parsed.children) == 2


def test_truncated_value_detected():
    with pytest.raises(Truncated):
        parse_tlv(bytes.fromhex("d003a104"))


def test_indefinite_length_rejected():
    with pytest.raises(IndefiniteLength):
        parse_tlv(bytes.fromhex("a180"))


def test_trailing_bytes_rejected():
    with pytest.raises(TlvError):
        parse_tlv(bytes.fromhex("810100ff"))


def test_long_form_lengths():
    node = TlvNode(tag=0x83, value=bytes(300))
    raw = serialize_tlv(node)
    assert raw[1] == 0x82
    assert parse_tlv(raw) == node


def test_proactive_sms_round_trip():
    payload = bytes(range(40))
    raw = build_proactive_sms(payload)
    tree = parse_tlv(raw)
    assert tree.tag == 0xD0
    assert extract_proactive_sms(tree) == payload


def test_extract_requires_proactive_tag():
    with pytest.raises(TlvError):
        extract_proactive_sms(TlvNode(tag=0x81, value=b""))


@st.composite
def tlv_trees(draw, depth=0):
    primitive_tag = draw(st.sampled_from([0x01, 0x04, 0x81, 0x8B, 0x90, 0x1E]))
    if depth >= 2 or draw(st.booleans()):
        return TlvNode(tag=primitive_tag, value=draw(st.binary(max_size=40)))
    constructed_tag = draw(st.sampled_from([0x21, 0xA1, 0xA4, 0xE0]))
    children = draw(st.lists(tlv_trees(depth=depth + 1), min_size=0, max_size=4))
    return TlvNode(tag=constructed_tag, children=tuple(children))


@given(tlv_trees())
@settings(max_examples=300)
def test_generated_tree_round_trip(tree):
    assert parse_tlv(serialize_tlv(tree)) == tree
