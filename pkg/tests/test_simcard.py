import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from simatlas.analytics import decode_bcd_swapped, extract_proactive_sms, parse_tlv, luhn_check_digit
from simatlas.iso7816 import Apdu, ResponseApdu
from simatlas.simcard import (
    LengthError,
    ProactiveEvent,
    ProfileError,
    SimProfile,
    TraceExhausted,
    authenticate_stub,
    load_profile,
    save_profile,
    simulated_sim,
    trace_replay_sim,
)

KI = bytes.fromhex("000102030405060708090a0b0c0d0e0f")


def make_profile(**kw):
    payload = "894303999" + "0123456789"
    defaults = dict(
        imsi="232030000000001",
        iccid=payload + str(luhn_check_digit(payload)),
        ki=KI,
        home_country="AT",
        label="demo",
    )
    defaults.update(kw)
    return SimProfile(**defaults)


def select(fid_hex):
    return Apdu(0xA0, 0xA4, 0x00, 0x00, data=bytes.fromhex(fid_hex))


def read_binary(length, offset=0):
    return Apdu(0xA0, 0xB0, offset >> 8, offset & 0xFF, le=length)


# -- profile -----------------------------------------------------------


def test_identity_files_are_installed():
    p = make_profile()
    assert decode_bcd_swapped(p.files["3F00/2FE2"], filler_f_allowed=True) == p.iccid
    ef_imsi = p.files["3F00/7F20/6F07"]
    assert ef_imsi[0] == 0x08
    assert len(ef_imsi) == 9


def test_profile_validation():
    with pytest.raises(ProfileError):
        make_profile(imsi="12")
    with pytest.raises(ProfileError):
        make_profile(imsi="999990000000001")  # 999 is not a known MCC
    with pytest.raises(ProfileError):
        make_profile(iccid="8943039990123456780")  # Luhn breaks
    with pytest.raises(ProfileError):
        make_profile(ki=b"short")
    with pytest.raises(ProfileError):
        make_profile(home_country="Austria")


def test_profile_json_round_trip(tmp_path):
    p = make_profile(
        proactive_script=[ProactiveEvent("after_commands", "send_binary_sms", after_n=3, payload=b"\x01\x02")]
    )
    path = tmp_path / "sim.json"
    save_profile(p, path)
    loaded = load_profile(path)
    assert loaded.as_dict() == p.as_dict()
    # documented JSON shape: hex-encoded byte fields
    on_disk = json.loads(path.read_text())
    assert on_disk["ki"] == KI.hex()
    assert all(set(v) <= set("0123456789abcdef") for v in on_disk["files"].values())


@given(
    tail=st.text(alphabet="0123456789", min_size=3, max_size=12),
    icc_tail=st.text(alphabet="0123456789", min_size=10, max_size=11),
)
@settings(max_examples=100)
def test_ef_iccid_round_trip_for_generated_profiles(tail, icc_tail):
    payload = "8943" + icc_tail.ljust(14, "0")
    iccid = payload + str(luhn_check_digit(payload))
    p = make_profile(imsi="232" + tail, iccid=iccid)
    assert decode_bcd_swapped(p.files["3F00/2FE2"], filler_f_allowed=True) == iccid


# -- simulated SIM ------------------------------------------------------


def test_select_and_read_iccid():
    p = make_profile()
    sim = simulated_sim(p)
    assert sim.exchange(select("3F00")).sw1 == 0x9F
    resp = sim.exchange(select("2FE2"))
    assert resp.sw1 == 0x9F
    content = sim.exchange(read_binary(10))
    assert content.sw == 0x9000
    assert decode_bcd_swapped(content.data, filler_f_allowed=True) == p.iccid


def test_select_missing_file():
    sim = simulated_sim(make_profile())
    assert sim.exchange(select("7F99")).sw == 0x6A82


def test_select_nested_imsi_path():
    sim = simulated_sim(make_profile())
    sim.exchange(select("3F00"))
    assert sim.exchange(select("7F20")).sw1 == 0x9F
    assert sim.exchange(select("6F07")).sw1 == 0x9F
    resp = sim.exchange(read_binary(9))
    assert resp.sw == 0x9000
    assert resp.data[0] == 0x08


def test_update_binary_persists():
    sim = simulated_sim(make_profile())
    sim.exchange(select("3F00"))
    sim.exchange(select("7F20"))
    sim.exchange(select("6F7E"))
    assert sim.exchange(Apdu(0xA0, 0xD6, 0, 0, data=b"\xaa\xbb")).sw == 0x9000
    assert sim.exchange(read_binary(2)).data == b"\xaa\xbb"


def test_wrong_length_on_read_past_end():
    sim = simulated_sim(make_profile())
    sim.exchange(select("3F00"))
    sim.exchange(select("2FE2"))
    assert sim.exchange(read_binary(200)).sw == 0x6700


def test_unknown_ins():
    sim = simulated_sim(make_profile())
    assert sim.exchange(Apdu(0xA0, 0x99, 0, 0)).sw == 0x6D00


def test_authenticate_flow():
    p = make_profile()
    sim = simulated_sim(p)
    rand = bytes(range(16))
    resp = sim.exchange(Apdu(0xA0, 0x88, 0, 0, data=rand))
    assert resp.sw1 == 0x9F and resp.sw2 == 24
    out = sim.exchange(Apdu(0xA0, 0xC0, 0, 0, le=24))
    assert out.sw == 0x9000
    res, key = authenticate_stub(p.ki, rand)
    assert out.data == res + key


def test_proactive_sequence():
    payload = b"\xca\xfe\x42"
    p = make_profile(
        proactive_script=[ProactiveEvent("after_commands", "send_binary_sms", after_n=3, payload=payload)]
    )
    sim = simulated_sim(p)
    sim.exchange(select("3F00"))
    second = sim.exchange(Apdu(0xA0, 0xF2, 0, 0, le=8))
    assert second.sw == 0x9000
    third = sim.exchange(Apdu(0xA0, 0xF2, 0, 0, le=8))
    assert third.sw1 == 0x91
    tlv_len = third.sw2
    # signaled again until fetched exactly once
    again = sim.exchange(Apdu(0xA0, 0xF2, 0, 0, le=8))
    assert again.sw1 == 0x91
    fetched = sim.exchange(Apdu(0xA0, 0x12, 0, 0, le=tlv_len))
    assert fetched.sw == 0x9000
    assert extract_proactive_sms(parse_tlv(fetched.data)) == payload
    after = sim.exchange(Apdu(0xA0, 0xF2, 0, 0, le=8))
    assert after.sw == 0x9000


def test_proactive_on_authenticate():
    p = make_profile(
        proactive_script=[ProactiveEvent("on_authenticate", "send_binary_sms", payload=b"\x01")]
    )
    sim = simulated_sim(p)
    assert sim.exchange(Apdu(0xA0, 0xF2, 0, 0, le=8)).sw == 0x9000
    resp = sim.exchange(Apdu(0xA0, 0x88, 0, 0, data=bytes(16)))
    assert resp.sw1 == 0x9F  # response data pending; signal follows
    sim.exchange(Apdu(0xA0, 0xC0, 0, 0, le=24))
    assert sim.exchange(Apdu(0xA0, 0xF2, 0, 0, le=8)).sw1 == 0x91


def test_fuzz_totality():
    rng = random.Random(7)
    sim = simulated_sim(make_profile())
    for _ in range(10_000):
        if rng.random() < 0.5:
            apdu = Apdu(0xA0, rng.randrange(256), rng.randrange(256), rng.randrange(256),
                        le=rng.randrange(1, 256))
        else:
            apdu = Apdu(0xA0, rng.randrange(256), rng.randrange(256), rng.randrange(256),
                        data=bytes(rng.randrange(256) for _ in range(rng.randrange(1, 32))))
        resp = sim.exchange(apdu)
        assert isinstance(resp, ResponseApdu)
        assert len(resp.to_bytes()) >= 2


# -- authentication stub ------------------------------------------------


def test_auth_stub_golden_vector():
    res, key = authenticate_stub(bytes(16), bytes(16))
    assert res.hex() == "f64c3b513c028bd5"
    assert key.hex() == "b0415f6d12c52c4ac85e538e62adda26"


def test_auth_stub_deterministic():
    a = authenticate_stub(KI, bytes(range(16)))
    b = authenticate_stub(KI, bytes(range(16)))
    assert a == b


def test_auth_stub_length_checks():
    with pytest.raises(LengthError):
        authenticate_stub(KI, bytes(15))
    with pytest.raises(LengthError):
        authenticate_stub(KI[:-1], bytes(16))


def test_auth_stub_avalanche():
    rng = random.Random(99)
    base_res, base_key = authenticate_stub(KI, bytes(16))
    fractions = []
    for _ in range(200):
        which = rng.choice(["ki", "rand"])
        bit = rng.randrange(128)
        ki, rand = bytearray(KI), bytearray(16)
        (ki if which == "ki" else rand)[bit // 8] ^= 1 << (bit % 8)
        res, key = authenticate_stub(bytes(ki), bytes(rand))
        assert (res, key) != (base_res, base_key)
        diff = int.from_bytes(res + key, "big") ^ int.from_bytes(base_res + base_key, "big")
        fractions.append(bin(diff).count("1") / (24 * 8))
    mean = sum(fractions) / len(fractions)
    assert 0.40 < mean < 0.60


# -- trace replay --------------------------------------------------------


def record_init_trace():
    sim = simulated_sim(make_profile())
    commands = [select("3F00"), select("2FE2"), read_binary(10), select("3F00"), select("7F20"), select("6F07"), read_binary(9)]
    return [(cmd, sim.exchange(cmd)) for cmd in commands]


def test_replay_own_recording():
    trace = record_init_trace()
    replay = trace_replay_sim(trace)
    for cmd, expected in trace:
        assert replay.exchange(cmd) == expected
    assert replay.divergences == []


def test_replay_divergence_flagged():
    trace = record_init_trace()
    replay = trace_replay_sim(trace)
    out = replay.exchange(select("7F20"))  # out of order
    assert out.sw == 0x6F00
    assert len(replay.divergences) == 1
    # expected entry was not consumed
    cmd, expected = trace[0]
    assert replay.exchange(cmd) == expected


def test_replay_exhaustion():
    trace = record_init_trace()
    replay = trace_replay_sim(trace)
    for cmd, _ in trace:
        replay.exchange(cmd)
    with pytest.raises(TraceExhausted):
        replay.exchange(select("3F00"))


def test_replay_reset_rewinds():
    trace = record_init_trace()
    replay = trace_replay_sim(trace)
    for cmd, _ in trace:
        replay.exchange(cmd)
    replay.reset()
    cmd, expected = trace[0]
    assert replay.exchange(cmd) == expected
