"""Card-side T=0 state machine tests.

The case-3 exchange expectations are hand-traced: after the 5-byte
header A0 A4 00 00 02 the card acks with the INS byte (A4), the modem
supplies the body (3F 00), and the card answers SW1 SW2.  The card's
own output is therefore A4 90 00; the full-wire dialogue interleaves
the inbound body between ack and status.
"""

import math
import threading
import time

import pytest

from simatlas.clock import SystemClock
from simatlas.iso7816 import (
    Apdu,
    CardWire,
    ProtocolViolation,
    ResponseApdu,
    T0CardSession,
    T0State,
    t0_card_drive,
)
from simatlas.iso7816.t0 import CLOSED, NULL_BYTE

ATR = bytes.fromhex("3b00")


def ok_handler(apdu):
    return ResponseApdu.from_sw(0x9000)


def make_session(handler=ok_handler, **kw):
    return T0CardSession(handler, atr_source=lambda: ATR, **kw)


def test_case3_exchange_hand_traced():
    seen = []

    def handler(apdu):
        seen.append(apdu)
        return ResponseApdu.from_sw(0x9000)

    out = t0_card_drive(make_session(handler), bytes.fromhex("a0a40000023f00"))
    assert out == bytes.fromhex("a49000")
    assert seen == [Apdu(0xA0, 0xA4, 0x00, 0x00, data=b"\x3f\x00")]


def test_case2_exchange_returns_data():
    def handler(apdu):
        assert apdu.le == 3
        return ResponseApdu(data=b"\x98\x34\x30", sw1=0x90, sw2=0x00)

    out = t0_card_drive(make_session(handler), bytes.fromhex("a0b0000003"))
    # ack, data, SW
    assert out == bytes.fromhex("b0" + "983430" + "9000")


def test_error_status_sent_without_procedure_byte():
    out = t0_card_drive(
        make_session(lambda a: ResponseApdu.from_sw(0x6A82)),
        bytes.fromhex("a0b0000003"),
    )
    assert out == bytes.fromhex("6a82")


def test_truncated_header_is_protocol_violation():
    with pytest.raises(ProtocolViolation):
        t0_card_drive(make_session(), bytes.fromhex("a0a40000"))


def test_truncated_body_is_protocol_violation():
    session = make_session(waiting_time_ms=50)
    with pytest.raises(ProtocolViolation):
        t0_card_drive(session, bytes.fromhex("a0a40000023f"))


def test_handler_exception_maps_to_6f00():
    def broken(apdu):
        raise RuntimeError("backend fell over")

    out = t0_card_drive(make_session(broken), bytes.fromhex("a0a4000000"))
    assert out == bytes.fromhex("6f00")


def test_pps_request_is_echoed():
    out = t0_card_drive(make_session(), bytes.fromhex("ff109679"))
    assert out == bytes.fromhex("ff109679")


def test_reset_emits_atr():
    session = make_session()
    wire = CardWire(session.clock)
    wire.modem_reset()
    wire.modem_send(bytes.fromhex("a0a4000000"))
    wire.to_card.close()
    session.serve(wire)
    wire.to_modem.close()
    out = bytearray()
    while (item := wire.modem_recv(0)) not in (CLOSED, None):
        out.append(item)
    # case-1 command: no body to move, so the SW doubles as procedure byte
    assert bytes(out) == ATR + bytes.fromhex("9000")


def test_state_transition_order():
    session = make_session()
    t0_card_drive(session, bytes.fromhex("a0a40000023f00"))
    trace = [s for s in session.state_trace if s != T0State.IDLE]
    assert trace == [
        T0State.AWAIT_HEADER,
        T0State.SEND_PROCEDURE,
        T0State.TRANSFER_DATA,
        T0State.SEND_STATUS,
        T0State.AWAIT_HEADER,
    ]


def test_wtx_nulls_mask_slow_handler():
    """1000 ms handler latency with 250 ms WTX interval: at least
    floor(1000/250) - 1 = 3 NULLs precede the status, and the modem
    never observes an inter-byte gap reaching the 350 ms waiting time.
    """
    latency, interval, waiting_time = 1.0, 0.25, 0.35
    clock = SystemClock()

    def slow(apdu):
        time.sleep(latency)
        return ResponseApdu.from_sw(0x9000)

    session = make_session(slow, clock=clock, wtx_interval_ms=interval * 1000,
                           waiting_time_ms=waiting_time * 1000)
    wire = CardWire(clock)
    received = []

    def pump():
        wire.modem_send(bytes.fromhex("a0a4000000"))
        while len(received) < 2 or bytes(b for _, b in received[-2:]) != b"\x90\x00":
            item = wire.modem_recv(2.0)
            if item in (CLOSED, None):
                break
            received.append((clock.now(), item))
        wire.to_card.close()

    t = threading.Thread(target=pump)
    t.start()
    session.serve(wire)
    t.join()

    sent_at = received[0][0] - 0.01  # pump sent header just before first byte
    payload = bytes(b for _, b in received)
    nulls = payload.count(NULL_BYTE)
    assert nulls >= math.floor(latency / interval) - 1
    assert payload[-2:] == b"\x90\x00"
    assert payload[:-2] == bytes([NULL_BYTE]) * nulls
    stamps = [sent_at] + [ts for ts, _ in received]
    gaps = [b - a for a, b in zip(stamps, stamps[1:])]
    assert max(gaps) < waiting_time
    assert session.nulls_sent == nulls


def test_wtx_disabled_creates_long_gap():
    latency = 0.4
    clock = SystemClock()

    def slow(apdu):
        time.sleep(latency)
        return ResponseApdu.from_sw(0x9000)

    session = make_session(slow, clock=clock, wtx_enabled=False, waiting_time_ms=100)
    wire = CardWire(clock)

    def feed():
        wire.modem_send(bytes.fromhex("a0a4000000"))

    threading.Thread(target=feed).start()
    done = threading.Thread(target=lambda: (session.serve(wire)))
    # modem perspective: nothing arrives within the 100 ms waiting time
    start = clock.now()
    threading.Thread(target=session.serve, args=(wire,), daemon=True).start()
    item = wire.modem_recv(0.1)
    assert item is None  # waiting time would have expired
    # eventually the SW still arrives
    item = wire.modem_recv(2.0)
    assert item == 0x90
    assert clock.now() - start >= latency * 0.9
    wire.close()
