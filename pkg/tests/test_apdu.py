import pytest
from hypothesis import given, settings, strategies as st

from simatlas.iso7816 import Apdu, ResponseApdu, ApduError, LengthMismatch


def test_case_detection():
    assert Apdu(0xA0, 0xB0, 0, 0).case == 1
    assert Apdu(0xA0, 0xB0, 0, 0, le=10).case == 2
    assert Apdu(0xA0, 0xA4, 0, 0, data=b"\x3f\x00").case == 3
    assert Apdu(0xA0, 0xA4, 0, 0, data=b"\x3f\x00", le=32).case == 4


def test_header_is_five_bytes():
    select = Apdu(0xA0, 0xA4, 0x00, 0x00, data=b"\x3f\x00")
    assert select.header() == bytes.fromhex("a0a4000002")
    assert select.to_bytes() == bytes.fromhex("a0a40000023f00")
    read = Apdu(0xA0, 0xB0, 0x00, 0x00, le=10)
    assert read.header() == bytes.fromhex("a0b000000a")


def test_field_ranges_checked():
    with pytest.raises(ApduError):
        Apdu(0x1FF, 0, 0, 0)
    with pytest.raises(ApduError):
        Apdu(0, 0, 0, 0, le=257)
    with pytest.raises(ApduError):
        Apdu(0, 0, 0, 0, data=bytes(256))


def test_from_bytes_body_length_must_match_p3():
    with pytest.raises(LengthMismatch):
        Apdu.from_bytes(bytes.fromhex("a0a40000033f00"))
    with pytest.raises(LengthMismatch):
        Apdu.from_bytes(bytes.fromhex("a0a400"))


def test_response_round_trip():
    resp = ResponseApdu(data=b"\x01\x02", sw1=0x90, sw2=0x00)
    assert resp.to_bytes() == bytes.fromhex("01029000")
    assert ResponseApdu.from_bytes(resp.to_bytes()) == resp
    assert resp.sw == 0x9000
    assert ResponseApdu.from_sw(0x6A82).to_bytes() == bytes.fromhex("6a82")


def test_response_needs_status():
    with pytest.raises(LengthMismatch):
        ResponseApdu.from_bytes(b"\x90")


@st.composite
def wire_apdus(draw):
    """Cases 1-3: everything the T=0 wire can represent losslessly."""
    cla = draw(st.integers(0, 255))
    ins = draw(st.integers(0, 255))
    p1 = draw(st.integers(0, 255))
    p2 = draw(st.integers(0, 255))
    case = draw(st.sampled_from([1, 2, 3]))
    if case == 1:
        return Apdu(cla, ins, p1, p2)
    if case == 2:
        return Apdu(cla, ins, p1, p2, le=draw(st.integers(1, 255)))
    return Apdu(cla, ins, p1, p2, data=draw(st.binary(min_size=1, max_size=255)))


@given(wire_apdus())
@settings(max_examples=500)
def test_apdu_round_trip(apdu):
    assert Apdu.from_bytes(apdu.to_bytes()) == apdu


@given(st.binary(min_size=0, max_size=255), st.integers(0, 255), st.integers(0, 255))
@settings(max_examples=300)
def test_response_apdu_round_trip(data, sw1, sw2):
    resp = ResponseApdu(data=data, sw1=sw1, sw2=sw2)
    assert ResponseApdu.from_bytes(resp.to_bytes()) == resp
