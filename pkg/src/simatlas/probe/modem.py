"""Simulated modem driving a tunneled SIM over the byte wire.

The modem talks real T=0 bytes to the probe-local card emulator, which
relays APDUs through the tunnel.  The modem enforces the waiting time
on every inter-byte gap: WTX NULLs from the emulator are what keep
long tunnel round-trips alive.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional

from ..analytics.bcd import decode_imsi
from ..clock import Clock, SystemClock
from ..errors import AtlasError
from ..iso7816 import (
    Apdu,
    CardWire,
    ClockParams,
    ResponseApdu,
    T0CardSession,
    build_pps,
    parse_atr,
    read_atr,
)
from ..iso7816.t0 import CLOSED, NULL_BYTE, RESET
from .operator_sim import SimulatedOperator

logger = logging.getLogger(__name__)

DEFAULT_INIT_APDU_COUNT = 50
DEFAULT_SIM_CLOCK_HZ = 3_842_000.0
DEFAULT_WAITING_TIME_MS = 350.0
ATR_TIMEOUT_MS = 5_000.0

GET_RESPONSE = 0xC0
FETCH = 0x12


class WaitingTimeExpired(AtlasError):
    code = "WaitingTimeExpired"


class CircuitLost(AtlasError):
    code = "CircuitLost"


class ModemProtocolError(AtlasError):
    code = "ModemProtocolError"


class ModemState(Enum):
    OFF = "Off"
    SIM_READY = "SimReady"
    ATTACHED = "Attached"


@dataclass
class AttachReport:
    apdus_used: int
    wall_ms: float
    wtx_nulls_observed: int
    atr: bytes
    imsi: str
    assigned_ip: str
    session_key: bytes = b""


def _select(fid: str) -> Apdu:
    return Apdu(0xA0, 0xA4, 0x00, 0x00, data=bytes.fromhex(fid))


def _read_binary(length: int) -> Apdu:
    return Apdu(0xA0, 0xB0, 0x00, 0x00, le=length)


def _status(length: int) -> Apdu:
    return Apdu(0xA0, 0xF2, 0x00, 0x00, le=length)


# Standard-file walk the modem cycles through during initialization.
_INIT_TEMPLATE: List[Callable[[], Apdu]] = [
    lambda: _select("3F00"),
    lambda: _select("2FE2"),
    lambda: _read_binary(10),
    lambda: _select("3F00"),
    lambda: _select("7F20"),
    lambda: _select("6F07"),
    lambda: _read_binary(9),
    lambda: _select("6F46"),
    lambda: _read_binary(17),
    lambda: _select("6FAD"),
    lambda: _read_binary(4),
    lambda: _status(22),
]


class ModemSim:
    def __init__(
        self,
        clock: Optional[Clock] = None,
        init_apdu_count: int = DEFAULT_INIT_APDU_COUNT,
        sim_clock_hz: float = DEFAULT_SIM_CLOCK_HZ,
        waiting_time_ms: float = DEFAULT_WAITING_TIME_MS,
        use_pps: bool = True,
    ):
        self.clock = clock or SystemClock()
        self.init_apdu_count = init_apdu_count
        self.sim_clock_hz = sim_clock_hz
        self.waiting_time_ms = waiting_time_ms
        self.use_pps = use_pps
        self.state = ModemState.OFF
        self.clock_params = ClockParams(sim_clock_hz, 372, 1)
        self.last_atr: bytes = b""
        self.imsi: Optional[str] = None
        self.assigned_ip: Optional[str] = None
        self.wtx_nulls_observed = 0
        self.apdus_sent = 0
        self._wire: Optional[CardWire] = None
        self._io_lock = threading.Lock()

    # -- byte-level wire driving ------------------------------------------

    def _recv(self, timeout_ms: float) -> int:
        assert self._wire is not None
        item = self._wire.modem_recv(timeout_ms / 1000.0)
        if item is None:
            raise WaitingTimeExpired(f"no byte within {timeout_ms} ms")
        if item == CLOSED:
            raise CircuitLost("card wire closed")
        if item == RESET:
            raise ModemProtocolError("unexpected reset indication")
        return item

    def power_on(self, wire: CardWire) -> bytes:
        """Reset the (emulated) card, read the ATR, optionally run PPS."""
        self._wire = wire
        wire.modem_reset()
        remaining = [ATR_TIMEOUT_MS]

        def one_byte() -> Optional[int]:
            b = self._recv(remaining[0])
            remaining[0] = self.waiting_time_ms
            return b

        raw = read_atr(one_byte)
        atr = parse_atr(raw)
        self.last_atr = raw
        self.state = ModemState.SIM_READY
        ta1 = atr.ta1()
        if self.use_pps and ta1 is not None and ta1 != 0x11:
            self._negotiate_pps(ta1)
        return raw

    def _negotiate_pps(self, ta1: int) -> None:
        frame = build_pps((ta1 >> 4) & 0x0F, ta1 & 0x0F).to_bytes()
        assert self._wire is not None
        self._wire.modem_send(frame)
        echo = bytes(self._recv(self.waiting_time_ms) for _ in range(len(frame)))
        if echo == frame:
            self.clock_params = ClockParams.from_ta1(self.sim_clock_hz, ta1)
        else:
            logger.warning("PPS echo mismatch, staying at F=372/D=1")

    def send_apdu(self, apdu: Apdu) -> ResponseApdu:
        """One T=0 exchange, counting WTX NULLs and enforcing the
        waiting time on every gap."""
        if self.state == ModemState.OFF:
            raise ModemProtocolError("modem is off")
        assert self._wire is not None
        with self._io_lock:
            self.apdus_sent += 1
            self._wire.modem_send(apdu.header())
            body_sent = False
            data = b""
            while True:
                b = self._recv(self.waiting_time_ms)
                if b == NULL_BYTE:
                    self.wtx_nulls_observed += 1
                    continue
                if b == apdu.ins:
                    if apdu.data and not body_sent:
                        self._wire.modem_send(apdu.data)
                        body_sent = True
                        continue
                    if apdu.le:
                        data = bytes(self._recv(self.waiting_time_ms) for _ in range(apdu.le))
                    continue
                if b == (apdu.ins ^ 0xFF):
                    raise ModemProtocolError("per-byte transfer mode not supported")
                if 0x61 <= b <= 0x6F or 0x90 <= b <= 0x9F:
                    sw2 = self._recv(self.waiting_time_ms)
                    return ResponseApdu(data=data, sw1=b, sw2=sw2)
                raise ModemProtocolError(f"unexpected procedure byte {b:#04x}")

    # -- initialization and attach ------------------------------------------

    def _init_commands(self):
        """Exactly init_apdu_count exchanges over the standard files,
        chasing 9F/91 status words with GET RESPONSE / FETCH."""
        sent = 0
        template_pos = 0
        last: Optional[ResponseApdu] = None
        while sent < self.init_apdu_count:
            if last is not None and last.sw1 == 0x9F:
                apdu = Apdu(0xA0, GET_RESPONSE, 0, 0, le=last.sw2)
            elif last is not None and last.sw1 == 0x91 and last.sw2 > 0:
                apdu = Apdu(0xA0, FETCH, 0, 0, le=last.sw2)
            else:
                apdu = _INIT_TEMPLATE[template_pos % len(_INIT_TEMPLATE)]()
                template_pos += 1
            last = yield apdu
            sent += 1

    def initialize(self) -> None:
        """Run the SELECT/READ init burst, learning the IMSI on the way."""
        gen = self._init_commands()
        resp = None
        while True:
            try:
                apdu = gen.send(resp) if resp is not None else next(gen)
            except StopIteration:
                break
            resp = self.send_apdu(apdu)
            if apdu.ins == 0xB0 and apdu.le == 9 and resp.sw == 0x9000 and len(resp.data) == 9:
                try:
                    self.imsi = decode_imsi(resp.data)
                except AtlasError:
                    pass

    def _ensure_imsi(self) -> str:
        if self.imsi:
            return self.imsi
        for apdu in (_select("3F00"), _select("7F20"), _select("6F07"), _read_binary(9)):
            resp = self.send_apdu(apdu)
        self.imsi = decode_imsi(resp.data)
        return self.imsi

    def attach(self, operator: SimulatedOperator, roaming: bool = False) -> None:
        """IMSI attach: challenge-response against the operator."""
        imsi = self._ensure_imsi()
        rand = operator.challenge()
        resp = self.send_apdu(Apdu(0xA0, 0x88, 0x00, 0x00, data=rand))
        if resp.sw1 != 0x9F:
            raise ModemProtocolError(f"authenticate answered {resp.sw:04x}")
        out = self.send_apdu(Apdu(0xA0, GET_RESPONSE, 0, 0, le=resp.sw2))
        res = out.data[:8]
        self._session_key = operator.verify(imsi, rand, res)  # raises AuthFailure
        self.assigned_ip = operator.assign_ip(imsi, roaming)
        self.state = ModemState.ATTACHED


def modem_init_and_attach(
    modem: ModemSim,
    wire: CardWire,
    operator: SimulatedOperator,
    roaming: bool = False,
) -> AttachReport:
    """Full power-on -> init burst -> authenticate flow.

    Returns the report used by the latency-robustness benchmarks.
    """
    started = modem.clock.now()
    before = modem.apdus_sent
    modem.power_on(wire)
    modem.initialize()
    modem.attach(operator, roaming=roaming)
    return AttachReport(
        apdus_used=modem.apdus_sent - before,
        wall_ms=(modem.clock.now() - started) * 1000.0,
        wtx_nulls_observed=modem.wtx_nulls_observed,
        atr=modem.last_atr,
        imsi=modem.imsi or "",
        assigned_ip=modem.assigned_ip or "",
        session_key=getattr(modem, "_session_key", b""),
    )


class ProbeCircuit:
    """Owns the plumbing between a tunnel client and a modem wire:
    the card emulator session thread relaying through the tunnel."""

    def __init__(self, tunnel_client, clock: Optional[Clock] = None,
                 wtx_interval_ms: float = 250.0, waiting_time_ms: float = DEFAULT_WAITING_TIME_MS,
                 wtx_enabled: bool = True):
        self.client = tunnel_client
        self.clock = clock or SystemClock()
        self.wire = CardWire(self.clock)
        self.session = T0CardSession(
            handler=self.client.relay,
            atr_source=self.client.reset,
            clock=self.clock,
            wtx_interval_ms=wtx_interval_ms,
            waiting_time_ms=waiting_time_ms,
            wtx_enabled=wtx_enabled,
        )
        self._thread = threading.Thread(target=self._serve, name="card-emulator", daemon=True)
        self._thread.start()

    def _serve(self) -> None:
        try:
            self.session.serve(self.wire)
        except AtlasError as exc:
            logger.debug("card emulator stopped: %s", exc)

    def close(self) -> None:
        self.wire.close()
        try:
            self.client.detach()
        except AtlasError:
            pass
