"""Tunnel-serving SIM provider.

One handler thread per TCP connection; a connection carries at most one
circuit.  Exclusivity (one circuit per IMSI) and the concurrent-circuit
capacity limit are enforced under a single lock.  Every relayed APDU is
appended to the per-circuit log with monotonic and wall timestamps.
"""

from __future__ import annotations

import json
import logging
import random
import socket
import threading
import uuid
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

from ..clock import Clock, SystemClock
from ..errors import AtlasError
from ..gsmtap import write_gsmtap_pcap
from ..iso7816 import Apdu
from ..tunnel.frames import FrameKind, TunnelFrame, encode_frame, read_frame, sock_reader, PROTO_VERSION
from .apdulog import ApduLogRecord, Direction, log_to_jsonl
from .registry import SimRegistry, UnknownSim

logger = logging.getLogger(__name__)

DEFAULT_CAPACITY = 32


class UnknownCircuit(AtlasError):
    code = "UnknownCircuit"


@dataclass
class ProviderCircuit:
    circuit_id: str
    imsi: str
    opened_wall: float
    closed_wall: Optional[float] = None
    close_reason: Optional[str] = None
    log: List[ApduLogRecord] = field(default_factory=list)


class _Refusal(AtlasError):
    """Internal: attach refused; code/message travel in an ERROR frame."""


class ProviderService:
    def __init__(
        self,
        registry: SimRegistry,
        host: str = "127.0.0.1",
        port: int = 0,
        max_concurrent_sims: int = DEFAULT_CAPACITY,
        clock: Optional[Clock] = None,
        require_tokens: bool = True,
        rng_seed: Optional[int] = None,
        on_registry_change: Optional[Callable[[], None]] = None,
    ):
        self.registry = registry
        self.host = host
        self._requested_port = port
        self.max_concurrent_sims = max_concurrent_sims
        self.clock = clock or SystemClock()
        self.require_tokens = require_tokens
        self.on_registry_change = on_registry_change
        self._rng = random.Random(rng_seed)
        self._lock = threading.RLock()
        self._tokens: Dict[str, tuple] = {}  # token hex -> (imsi, circuit_id)
        self._circuits: Dict[str, ProviderCircuit] = {}
        self._active_count = 0
        self._latency_s = 0.0
        self._server_sock: Optional[socket.socket] = None
        self._accept_thread: Optional[threading.Thread] = None
        self._running = False

    # -- lifecycle ------------------------------------------------------

    def start(self) -> None:
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            sock.bind((self.host, self._requested_port))
        except OSError as exc:
            raise AtlasError(f"cannot bind {self.host}:{self._requested_port}: {exc}") from exc
        sock.listen(64)
        self._server_sock = sock
        self._running = True
        self._accept_thread = threading.Thread(target=self._accept_loop, name="provider-accept", daemon=True)
        self._accept_thread.start()
        logger.info("provider serving on %s:%d", self.host, self.port)

    def stop(self) -> None:
        self._running = False
        if self._server_sock:
            try:
                self._server_sock.close()
            except OSError:
                pass
            self._server_sock = None

    @property
    def port(self) -> int:
        assert self._server_sock is not None, "service not started"
        return self._server_sock.getsockname()[1]

    @property
    def address(self) -> str:
        return f"{self.host}:{self.port}"

    # -- knobs ------------------------------------------------------------

    def inject_latency(self, per_response_delay_ms: float) -> None:
        """Delay every APDU response by the given amount (tunnel
        robustness benchmarking)."""
        if per_response_delay_ms < 0:
            raise AtlasError("latency must be >= 0")
        self._latency_s = per_response_delay_ms / 1000.0

    def push_token(self, imsi: str, token: bytes, circuit_id: Optional[str] = None) -> None:
        """Authorize a broker-minted attach token for an IMSI."""
        with self._lock:
            self._tokens[token.hex()] = (imsi, circuit_id or str(uuid.uuid4()))

    # -- introspection ------------------------------------------------------

    def active_circuits(self) -> List[ProviderCircuit]:
        with self._lock:
            return [c for c in self._circuits.values() if c.closed_wall is None]

    def circuits(self) -> List[ProviderCircuit]:
        with self._lock:
            return list(self._circuits.values())

    def get_circuit(self, circuit_id: str) -> ProviderCircuit:
        with self._lock:
            circuit = self._circuits.get(circuit_id)
        if circuit is None:
            raise UnknownCircuit(f"no circuit {circuit_id}")
        return circuit

    def export_apdu_log(self, circuit_id: str, fmt: str = "jsonl") -> bytes:
        circuit = self.get_circuit(circuit_id)
        with self._lock:
            records = list(circuit.log)
        if fmt == "jsonl":
            return log_to_jsonl(records)
        if fmt in ("gsmtap", "gsmtap_pcap"):
            return write_gsmtap_pcap(records)
        raise AtlasError(f"unknown log format {fmt!r}")

    # -- connection handling -------------------------------------------------

    def _accept_loop(self) -> None:
        assert self._server_sock is not None
        while self._running:
            try:
                conn, peer = self._server_sock.accept()
            except OSError:
                return
            threading.Thread(
                target=self._serve_connection, args=(conn, peer), name="provider-conn", daemon=True
            ).start()

    def _serve_connection(self, conn: socket.socket, peer) -> None:
        reader = sock_reader(conn)
        circuit: Optional[ProviderCircuit] = None
        entry = None

        def reply(kind: FrameKind, seq: int, payload: bytes = b"") -> None:
            conn.sendall(encode_frame(TunnelFrame(kind=kind, seq=seq, payload=payload)))

        def reply_error(seq: int, code: str, message: str, **extra) -> None:
            doc = {"code": code, "message": message}
            doc.update(extra)
            reply(FrameKind.ERROR, seq, json.dumps(doc).encode())

        try:
            while True:
                frame = read_frame(reader)
                if frame is None:
                    break
                if frame.kind == FrameKind.HELLO:
                    doc = json.loads(frame.payload or b"{}")
                    if doc.get("proto") != PROTO_VERSION:
                        reply_error(frame.seq, "BadProto", f"unsupported proto {doc.get('proto')}")
                        break
                    continue
                if frame.kind == FrameKind.PING:
                    reply(FrameKind.PONG, frame.seq)
                    continue
                if frame.kind == FrameKind.ATTACH:
                    if circuit is not None:
                        reply_error(frame.seq, "SimBusy", "connection already carries a circuit")
                        continue
                    doc = json.loads(frame.payload or b"{}")
                    try:
                        entry, circuit = self._attach(doc.get("imsi", ""), doc.get("token", ""))
                    except _Refusal as exc:
                        reply_error(frame.seq, exc.details.get("code", "AttachRefused"), exc.message,
                                    **{k: v for k, v in exc.details.items() if k != "code"})
                        continue
                    entry.backend.reset()
                    reply(FrameKind.GRANTED, frame.seq, entry.backend.atr())
                    continue
                if circuit is None or entry is None:
                    reply_error(frame.seq, "Detached", "no circuit on this connection")
                    continue
                if frame.kind == FrameKind.APDU_REQ:
                    apdu = Apdu.from_bytes(frame.payload)
                    self._log(circuit, Direction.TO_SIM, apdu.to_bytes())
                    resp = entry.backend.exchange(apdu)
                    if self._latency_s > 0:
                        self.clock.sleep(self._latency_s)
                    self._log(circuit, Direction.FROM_SIM, resp.to_bytes())
                    reply(FrameKind.APDU_RESP, frame.seq, resp.to_bytes())
                    continue
                if frame.kind == FrameKind.RESET:
                    entry.backend.reset()
                    reply(FrameKind.ATR, frame.seq, entry.backend.atr())
                    continue
                if frame.kind == FrameKind.DETACH:
                    self._close_circuit(circuit, entry, "detach")
                    circuit, entry = None, None
                    reply(FrameKind.DETACH, frame.seq)
                    continue
                reply_error(frame.seq, "BadFrame", f"unexpected {frame.kind.name}")
        except Exception as exc:
            logger.debug("connection %s ended: %s", peer, exc)
        finally:
            if circuit is not None and entry is not None:
                self._close_circuit(circuit, entry, "connection_lost")
            try:
                conn.close()
            except OSError:
                pass

    # -- circuit bookkeeping ---------------------------------------------------

    def _attach(self, imsi: str, token_hex: str):
        with self._lock:
            try:
                entry = self.registry.get(imsi)
            except UnknownSim:
                raise _Refusal("IMSI not registered", code="UnknownImsi")
            if not entry.online:
                raise _Refusal("SIM is offline", code="UnknownImsi")
            circuit_id = None
            if self.require_tokens:
                granted = self._tokens.get(token_hex)
                if granted is None or granted[0] != imsi:
                    raise _Refusal("token not valid for this SIM", code="BadToken")
                circuit_id = granted[1]
            if entry.circuited:
                raise _Refusal("SIM already has an open circuit", code="SimBusy")
            if self._active_count >= self.max_concurrent_sims:
                raise _Refusal(
                    f"capacity {self.max_concurrent_sims} circuits reached", code="capacity"
                )
            if entry.flaky_attach_probability > 0 and self._rng.random() < entry.flaky_attach_probability:
                raise _Refusal("simulated reader failure", code="Flaky")
            if self.require_tokens:
                self._tokens.pop(token_hex, None)
            circuit = ProviderCircuit(
                circuit_id=circuit_id or str(uuid.uuid4()),
                imsi=imsi,
                opened_wall=self.clock.wall(),
            )
            self._circuits[circuit.circuit_id] = circuit
            entry.circuit_id = circuit.circuit_id
            self._active_count += 1
            return entry, circuit

    def _close_circuit(self, circuit: ProviderCircuit, entry, reason: str) -> None:
        with self._lock:
            if circuit.closed_wall is not None:
                return
            circuit.closed_wall = self.clock.wall()
            circuit.close_reason = reason
            if entry.circuit_id == circuit.circuit_id:
                entry.circuit_id = None
            self._active_count -= 1

    def _log(self, circuit: ProviderCircuit, direction: Direction, raw: bytes) -> None:
        record = ApduLogRecord(
            circuit_id=circuit.circuit_id,
            imsi=circuit.imsi,
            direction=direction,
            raw=raw,
            ts_mono=self.clock.now(),
            ts_wall=self.clock.wall(),
        )
        with self._lock:
            circuit.log.append(record)

    # -- registry mutations (admin surface) -------------------------------------

    def register_sim(self, profile) -> str:
        with self._lock:
            imsi = self.registry.register_profile(profile)
        self._notify_registry_change()
        return imsi

    def unregister_sim(self, imsi: str) -> None:
        with self._lock:
            self.registry.unregister(imsi)
        self._notify_registry_change()

    def _notify_registry_change(self) -> None:
        if self.on_registry_change:
            try:
                self.on_registry_change()
            except Exception:
                logger.exception("registry change notification failed")
