"""Probe-side tunnel client.

One TCP connection per circuit.  A reader thread pairs responses to
requests by echoed sequence number; relay() is blocking with a
configurable deadline.  Keepalive PINGs run while the connection is
idle; two missed PONGs detach the circuit.
"""

from __future__ import annotations

import json
import logging
import socket
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional

from ..clock import Clock, SystemClock
from ..errors import AtlasError
from ..iso7816 import Apdu, ResponseApdu
from .frames import FrameKind, TunnelFrame, encode_frame, read_frame, sock_reader, PROTO_VERSION

logger = logging.getLogger(__name__)

DEFAULT_PORT = 7816
DEFAULT_TIMEOUT_S = 30.0
KEEPALIVE_INTERVAL_S = 10.0
KEEPALIVE_MISS_LIMIT = 2


class TunnelError(AtlasError):
    code = "TunnelError"


class Detached(TunnelError):
    code = "Detached"


class TunnelTimeout(TunnelError):
    code = "Timeout"


class AttachRefused(TunnelError):
    code = "AttachRefused"


class SimBusy(AttachRefused):
    code = "SimBusy"


class UnknownImsi(AttachRefused):
    code = "UnknownImsi"


class BadToken(AttachRefused):
    code = "BadToken"


class CapacityExceeded(AttachRefused):
    code = "capacity"


class CooldownActive(AttachRefused):
    code = "CooldownActive"

    def __init__(self, message: str = "", retry_after: float = 0.0, **details):
        super().__init__(message, retry_after=retry_after, **details)
        self.retry_after = retry_after


_ERROR_MAP = {
    "SimBusy": SimBusy,
    "UnknownImsi": UnknownImsi,
    "BadToken": BadToken,
    "capacity": CapacityExceeded,
    "CooldownActive": CooldownActive,
    "Detached": Detached,
}


def error_to_exception(payload: bytes) -> TunnelError:
    try:
        doc = json.loads(payload or b"{}")
    except ValueError:
        return TunnelError("malformed error payload")
    code = doc.get("code", "TunnelError")
    message = doc.get("message", code)
    cls = _ERROR_MAP.get(code, TunnelError)
    if cls is CooldownActive:
        return CooldownActive(message, retry_after=float(doc.get("retry_after", 0.0)))
    exc = cls(message)
    exc.details.update({k: v for k, v in doc.items() if k not in ("code", "message")})
    return exc


class CircuitState(Enum):
    ATTACHING = "Attaching"
    ACTIVE = "Active"
    DETACHED = "Detached"


@dataclass
class _Pending:
    event: object
    frame: Optional[TunnelFrame] = None
    error: Optional[Exception] = None


class TunnelClient:
    def __init__(
        self,
        host: str,
        port: int = DEFAULT_PORT,
        clock: Optional[Clock] = None,
        timeout_s: float = DEFAULT_TIMEOUT_S,
        keepalive_interval_s: float = KEEPALIVE_INTERVAL_S,
    ):
        self.host = host
        self.port = port
        self.clock = clock or SystemClock()
        self.timeout_s = timeout_s
        self.keepalive_interval_s = keepalive_interval_s
        self.state = CircuitState.DETACHED
        self.imsi: Optional[str] = None
        self._sock: Optional[socket.socket] = None
        self._seq = 0
        self._lock = threading.Lock()
        self._pending: Dict[int, _Pending] = {}
        self._reader: Optional[threading.Thread] = None
        self._keepalive: Optional[threading.Thread] = None
        self._closed = False
        self._missed_pongs = 0
        self._last_traffic = 0.0

    # -- lifecycle ----------------------------------------------------

    def connect(self) -> None:
        self._sock = socket.create_connection((self.host, self.port), timeout=30)
        self._sock.settimeout(None)
        self._closed = False
        self._reader = threading.Thread(target=self._read_loop, name="tunnel-reader", daemon=True)
        self._reader.start()
        self._request(FrameKind.HELLO, json.dumps({"proto": PROTO_VERSION}).encode(), expect=None)

    def close(self) -> None:
        self._closed = True
        self.state = CircuitState.DETACHED
        sock = self._sock
        if sock is not None:
            try:
                sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            sock.close()
            self._sock = None
        self._fail_pending(Detached("client closed"))
        self.clock.notify()

    # -- wire helpers -------------------------------------------------

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def _send(self, kind: FrameKind, payload: bytes = b"") -> int:
        with self._lock:
            if self._sock is None:
                raise Detached("not connected")
            seq = self._next_seq()
            frame = TunnelFrame(kind=kind, seq=seq, payload=payload)
            try:
                self._sock.sendall(encode_frame(frame))
            except OSError as exc:
                raise Detached(f"send failed: {exc}") from exc
            self._last_traffic = self.clock.now()
            return seq

    def _request(self, kind: FrameKind, payload: bytes = b"", expect=FrameKind.PONG, timeout: Optional[float] = None):
        """Send a frame and wait for its seq-echoed answer.

        expect=None sends without waiting (HELLO, DETACH).
        """
        if expect is None:
            self._send(kind, payload)
            return None
        # pin the deadline before the request leaves, so clock movement
        # during the send cannot stretch the wait
        window = timeout if timeout is not None else self.timeout_s
        deadline_at = self.clock.now() + window
        slot = _Pending(event=self.clock.event())
        with self._lock:
            if self._sock is None:
                raise Detached("not connected")
            seq = self._next_seq()
            self._pending[seq] = slot
            try:
                self._sock.sendall(encode_frame(TunnelFrame(kind=kind, seq=seq, payload=payload)))
            except OSError as exc:
                self._pending.pop(seq, None)
                raise Detached(f"send failed: {exc}") from exc
            self._last_traffic = self.clock.now()
        if not slot.event.wait_at(deadline_at):
            with self._lock:
                self._pending.pop(seq, None)
            raise TunnelTimeout(f"{kind.name} unanswered after {window}s")
        if slot.error is not None:
            raise slot.error
        frame = slot.frame
        assert frame is not None
        if frame.kind == FrameKind.ERROR:
            raise error_to_exception(frame.payload)
        if frame.kind != expect:
            raise TunnelError(f"expected {expect.name}, got {frame.kind.name}")
        return frame

    def _read_loop(self) -> None:
        sock = self._sock
        assert sock is not None
        reader = sock_reader(sock)
        try:
            while not self._closed:
                frame = read_frame(reader)
                if frame is None:
                    break
                self._on_frame(frame)
        except Exception as exc:
            if not self._closed:
                logger.debug("tunnel reader ended: %s", exc)
        finally:
            detached = Detached("connection lost")
            if self.state == CircuitState.ACTIVE:
                self.state = CircuitState.DETACHED
            self._fail_pending(detached)

    def _on_frame(self, frame: TunnelFrame) -> None:
        self._last_traffic = self.clock.now()
        if frame.kind == FrameKind.PONG:
            self._missed_pongs = 0
        with self._lock:
            slot = self._pending.pop(frame.seq, None)
        if slot is not None:
            slot.frame = frame
            slot.event.set()
            return
        if frame.kind == FrameKind.DETACH:  # server-initiated
            self.state = CircuitState.DETACHED
            self._fail_pending(Detached("server detached circuit"))
            return
        logger.debug("unmatched frame %s seq=%d", frame.kind.name, frame.seq)

    def _fail_pending(self, error: Exception) -> None:
        with self._lock:
            pending, self._pending = self._pending, {}
        for slot in pending.values():
            slot.error = error
            slot.event.set()

    # -- protocol operations -------------------------------------------

    def attach(self, imsi: str, token: bytes) -> bytes:
        """Attach to a SIM by IMSI; returns the SIM's ATR bytes."""
        if self._sock is None:
            self.connect()
        self.state = CircuitState.ATTACHING
        payload = json.dumps({"imsi": imsi, "token": token.hex()}).encode()
        try:
            granted = self._request(FrameKind.ATTACH, payload, expect=FrameKind.GRANTED)
        except TunnelError:
            self.state = CircuitState.DETACHED
            raise
        self.state = CircuitState.ACTIVE
        self.imsi = imsi
        self._missed_pongs = 0
        if self.keepalive_interval_s > 0 and self._keepalive is None:
            self._keepalive = threading.Thread(target=self._keepalive_loop, name="tunnel-keepalive", daemon=True)
            self._keepalive.start()
        return granted.payload

    def relay(self, apdu: Apdu) -> ResponseApdu:
        if self.state != CircuitState.ACTIVE:
            raise Detached("circuit is not active")
        frame = self._request(FrameKind.APDU_REQ, apdu.to_bytes(), expect=FrameKind.APDU_RESP)
        return ResponseApdu.from_bytes(frame.payload)

    def reset(self) -> bytes:
        if self.state != CircuitState.ACTIVE:
            raise Detached("circuit is not active")
        frame = self._request(FrameKind.RESET, expect=FrameKind.ATR)
        return frame.payload

    def ping(self) -> None:
        self._request(FrameKind.PING, expect=FrameKind.PONG)

    def detach(self) -> None:
        if self.state == CircuitState.ACTIVE:
            try:
                # server echoes DETACH once the circuit is released
                self._request(FrameKind.DETACH, expect=FrameKind.DETACH, timeout=10.0)
            except TunnelError:
                pass
        self.close()

    # -- keepalive ------------------------------------------------------

    def _keepalive_loop(self) -> None:
        while not self._closed and self.state == CircuitState.ACTIVE:
            self.clock.sleep(self.keepalive_interval_s)
            if self._closed or self.state != CircuitState.ACTIVE:
                return
            if self.clock.now() - self._last_traffic < self.keepalive_interval_s:
                continue
            try:
                self._missed_pongs += 1
                self._request(FrameKind.PING, expect=FrameKind.PONG, timeout=self.keepalive_interval_s)
            except TunnelTimeout:
                if self._missed_pongs >= KEEPALIVE_MISS_LIMIT:
                    logger.warning("keepalive lost %d pongs, detaching", self._missed_pongs)
                    self.state = CircuitState.DETACHED
                    self.close()
                    return
            except TunnelError:
                return
