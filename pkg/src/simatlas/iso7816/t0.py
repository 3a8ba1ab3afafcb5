"""Card-side T=0 state machine and the modem<->card byte wire.

The card session acknowledges each 5-byte command header with a
procedure byte, moves the body in the direction the instruction
dictates, and ends with SW1 SW2.  While the backing handler (usually a
tunnel round-trip) is outstanding, the session emits NULL bytes (0x60)
every wtx_interval so the modem-side waiting time never expires -- this
is what masks tunnel latency.
"""

from __future__ import annotations

import threading
from collections import deque
from enum import Enum
from typing import Callable, List, Optional

from ..clock import Clock, SystemClock
from ..errors import AtlasError
from .apdu import Apdu, ResponseApdu

NULL_BYTE = 0x60

#: Sentinels that can travel on a BytePipe alongside plain bytes.
RESET = "RESET"
CLOSED = "CLOSED"

# Instructions that carry a command body (P3 = Lc).  Everything else
# with P3 > 0 is treated as an expected-response length (P3 = Le).
INCOMING_DATA_INS = frozenset(
    {
        0xA4,  # SELECT
        0xD6,  # UPDATE BINARY
        0xDC,  # UPDATE RECORD
        0x88,  # AUTHENTICATE / RUN GSM ALGORITHM
        0x10,  # TERMINAL PROFILE
        0x14,  # TERMINAL RESPONSE
        0xC2,  # ENVELOPE
        0x20,  # VERIFY
        0x24,  # CHANGE PIN
        0x26,  # DISABLE PIN
        0x28,  # ENABLE PIN
        0x2C,  # UNBLOCK PIN
        0xA2,  # SEEK
    }
)


class ProtocolViolation(AtlasError):
    code = "ProtocolViolation"


class HandlerFailure(AtlasError):
    code = "HandlerFailure"


class WaitingTimeExpired(AtlasError):
    code = "WaitingTimeExpired"


class T0State(Enum):
    AWAIT_HEADER = "AwaitHeader"
    SEND_PROCEDURE = "SendProcedure"
    TRANSFER_DATA = "TransferData"
    SEND_STATUS = "SendStatus"
    IDLE = "Idle"


class BytePipe:
    """Unidirectional byte stream with clock-aware blocking reads."""

    def __init__(self, clock: Clock):
        self._clock = clock
        self._q: deque = deque()
        self._lock = threading.Lock()
        self._closed = False

    def send(self, data) -> None:
        with self._lock:
            if self._closed:
                return
            if isinstance(data, int):
                self._q.append(data)
            elif isinstance(data, (bytes, bytearray)):
                self._q.extend(data)
            else:
                self._q.append(data)  # sentinel
        self._clock.notify()

    def close(self) -> None:
        with self._lock:
            self._closed = True
        self._clock.notify()

    def _peek_ready(self) -> bool:
        with self._lock:
            return bool(self._q) or self._closed

    def recv(self, timeout: Optional[float]):
        """Next item: an int byte, a sentinel string, or None on timeout."""
        self._clock.wait_until(self._peek_ready, timeout)
        with self._lock:
            if self._q:
                return self._q.popleft()
            if self._closed:
                return CLOSED
        return None


class CardWire:
    """The two pipes of a modem<->card line, plus helpers per side."""

    def __init__(self, clock: Optional[Clock] = None):
        self.clock = clock or SystemClock()
        self.to_card = BytePipe(self.clock)
        self.to_modem = BytePipe(self.clock)

    # -- modem side -------------------------------------------------
    def modem_send(self, data) -> None:
        self.to_card.send(data)

    def modem_reset(self) -> None:
        self.to_card.send(RESET)

    def modem_recv(self, timeout: Optional[float]):
        return self.to_modem.recv(timeout)

    # -- card side --------------------------------------------------
    def card_send(self, data) -> None:
        self.to_modem.send(data)

    def card_recv(self, timeout: Optional[float]):
        return self.to_card.recv(timeout)

    def close(self) -> None:
        self.to_card.close()
        self.to_modem.close()


class T0CardSession:
    """Drives the card side of a T=0 wire against an APDU handler.

    handler(apdu) -> ResponseApdu may block (tunnel round-trip); a
    worker thread runs it so the session can keep emitting NULLs.
    atr_source() -> bytes answers wire resets.
    """

    def __init__(
        self,
        handler: Callable[[Apdu], ResponseApdu],
        atr_source: Callable[[], bytes],
        clock: Optional[Clock] = None,
        wtx_interval_ms: float = 250.0,
        waiting_time_ms: float = 350.0,
        wtx_enabled: bool = True,
        incoming_ins: frozenset = INCOMING_DATA_INS,
    ):
        self.handler = handler
        self.atr_source = atr_source
        self.clock = clock or SystemClock()
        self.wtx_interval_ms = wtx_interval_ms
        self.waiting_time_ms = waiting_time_ms
        self.wtx_enabled = wtx_enabled
        self.incoming_ins = incoming_ins
        self.state = T0State.IDLE
        self.pending: Optional[Apdu] = None
        self.nulls_sent = 0
        self.exchanges = 0
        self.state_trace: List[T0State] = []

    def _set_state(self, state: T0State) -> None:
        self.state = state
        self.state_trace.append(state)

    def _dispatch(self, apdu: Apdu):
        """Run the handler on a worker thread; returns (event, box)."""
        done = self.clock.event()
        box: dict = {}

        def run():
            try:
                box["resp"] = self.handler(apdu)
            except Exception as exc:  # handler failures map to SW 6F00
                box["error"] = exc
            done.set()

        threading.Thread(target=run, name="t0-handler", daemon=True).start()
        return done, box

    def _await_response(self, wire: CardWire, done, box) -> ResponseApdu:
        interval = self.wtx_interval_ms / 1000.0
        while not done.wait(interval if self.wtx_enabled else None):
            wire.card_send(NULL_BYTE)
            self.nulls_sent += 1
        if "error" in box:
            return ResponseApdu.from_sw(0x6F00)
        return box["resp"]

    def serve(self, wire: CardWire) -> None:
        """Process resets, PPS requests, and commands until the wire
        closes.

        Raises ProtocolViolation if the stream dies inside a header or
        a command body.
        """
        self._set_state(T0State.AWAIT_HEADER)
        header = bytearray()
        while True:
            item = wire.card_recv(None)
            if item == CLOSED:
                if header:
                    raise ProtocolViolation(f"stream ended after {len(header)} header byte(s)")
                self._set_state(T0State.IDLE)
                return
            if item == RESET:
                header.clear()
                self.pending = None
                wire.card_send(self.atr_source())
                self._set_state(T0State.AWAIT_HEADER)
                continue
            if item is None:
                continue
            header.append(item)
            # PPSS (0xFF) never occurs as a CLA in SIM traffic, so the
            # first byte tells commands and PPS requests apart.  A PPS
            # frame is 3 or 4 bytes depending on the PPS1 presence bit.
            if header[0] == 0xFF:
                if len(header) >= 2 and len(header) == (4 if header[1] & 0x10 else 3):
                    self._handle_pps(wire, bytes(header))
                    header.clear()
                    self._set_state(T0State.AWAIT_HEADER)
                continue
            if len(header) < 5:
                continue

            apdu_header = bytes(header)
            header.clear()
            self._handle_command(wire, apdu_header)
            self._set_state(T0State.AWAIT_HEADER)

    def _handle_command(self, wire: CardWire, hdr: bytes) -> None:
        cla, ins, p1, p2, p3 = hdr
        incoming = ins in self.incoming_ins and p3 > 0
        data = b""
        if incoming:
            self._set_state(T0State.SEND_PROCEDURE)
            wire.card_send(ins)  # single ACK transfers the whole body
            self._set_state(T0State.TRANSFER_DATA)
            body = bytearray()
            while len(body) < p3:
                item = wire.card_recv(self.waiting_time_ms / 1000.0)
                if item == CLOSED or item is None:
                    raise ProtocolViolation(f"command body truncated at {len(body)}/{p3}")
                if item == RESET:
                    raise ProtocolViolation("reset inside command body")
                body.append(item)
            data = bytes(body)

        apdu = (
            Apdu(cla, ins, p1, p2, data=data)
            if incoming
            else Apdu(cla, ins, p1, p2, le=p3 if p3 else None)
        )
        self.pending = apdu
        self.exchanges += 1

        done, box = self._dispatch(apdu)
        resp = self._await_response(wire, done, box)
        self.pending = None

        if not incoming and resp.data:
            self._set_state(T0State.SEND_PROCEDURE)
            wire.card_send(ins)
            self._set_state(T0State.TRANSFER_DATA)
            wire.card_send(resp.data)
        self._set_state(T0State.SEND_STATUS)
        wire.card_send(bytes([resp.sw1, resp.sw2]))

    def _handle_pps(self, wire: CardWire, frame: bytes) -> None:
        from .pps import parse_pps

        parse_pps(frame)  # raises MalformedPps on checksum error
        wire.card_send(frame)  # echo = accept requested parameters


def t0_card_drive(
    session: T0CardSession,
    inbound: bytes,
    handler: Optional[Callable[[Apdu], ResponseApdu]] = None,
) -> bytes:
    """Feed a scripted modem->card byte stream through a session and
    collect the card's outbound bytes.

    Convenience wrapper for tests and offline traces; live probes run
    session.serve() on a CardWire instead.
    """
    if handler is not None:
        session.handler = handler
    wire = CardWire(session.clock)
    wire.modem_send(inbound)
    wire.to_card.close()
    session.serve(wire)
    wire.to_modem.close()
    out = bytearray()
    while True:
        item = wire.modem_recv(0)
        if item == CLOSED or item is None:
            break
        out.append(item)
    return bytes(out)
