"""SIM backends: the simulated card and the trace-replay card.

A backend is what a tunnel session serves: atr(), exchange(), reset().
exchange() is total for the simulated card -- unknown instructions and
bad accesses come back as error status words, never exceptions.
"""

from __future__ import annotations

import logging
from typing import Callable, List, Optional, Protocol, Sequence, Tuple

from ..analytics.tlv import build_proactive_sms
from ..errors import AtlasError
from ..iso7816 import Apdu, Atr, InterfaceByte, ResponseApdu, build_atr
from .auth import authenticate_stub
from .profile import (
    KIND_NOOP,
    KIND_SEND_BINARY_SMS,
    SimProfile,
    TRIGGER_AFTER_COMMANDS,
    TRIGGER_ON_AUTHENTICATE,
)

logger = logging.getLogger(__name__)

SW_OK = 0x9000
SW_FILE_NOT_FOUND = 0x6A82
SW_WRONG_LENGTH = 0x6700
SW_INS_NOT_SUPPORTED = 0x6D00
SW_NO_EF_SELECTED = 0x6986
SW_CONDITIONS = 0x6985
SW_UNKNOWN = 0x6F00

INS_SELECT = 0xA4
INS_READ_BINARY = 0xB0
INS_UPDATE_BINARY = 0xD6
INS_GET_RESPONSE = 0xC0
INS_STATUS = 0xF2
INS_AUTHENTICATE = 0x88
INS_FETCH = 0x12

MF_FID = "3F00"


class SimBackend(Protocol):
    def atr(self) -> bytes: ...

    def exchange(self, apdu: Apdu) -> ResponseApdu: ...

    def reset(self) -> None: ...


class TraceExhausted(AtlasError):
    code = "TraceExhausted"


def default_atr(historical: bytes = b"ATLAS1") -> bytes:
    """Direct-convention T=0 ATR advertising fast Fi/Di (F=512, D=32)
    via TA1 so modems have a reason to run PPS."""
    t0 = 0x90 | len(historical)
    atr = Atr(
        t0=t0,
        interface_bytes=(InterfaceByte("TA", 1, 0x96), InterfaceByte("TD", 1, 0x00)),
        historical=historical,
    )
    return build_atr(atr)


class SimulatedSim:
    """File-system-backed software SIM with proactive event support."""

    def __init__(self, profile: SimProfile):
        self.profile = profile
        self._atr = default_atr()
        self._cwd: List[str] = [MF_FID]
        self._selected: Optional[str] = None
        self._response_buf = b""
        self._exchange_count = 0
        self._script_pos = 0
        self._pending_fetch: Optional[bytes] = None

    # -- SimBackend surface ------------------------------------------

    def atr(self) -> bytes:
        return self._atr

    def reset(self) -> None:
        self._cwd = [MF_FID]
        self._selected = None
        self._response_buf = b""

    def exchange(self, apdu: Apdu) -> ResponseApdu:
        self._exchange_count += 1
        handler = {
            INS_SELECT: self._select,
            INS_READ_BINARY: self._read_binary,
            INS_UPDATE_BINARY: self._update_binary,
            INS_GET_RESPONSE: self._get_response,
            INS_STATUS: self._status,
            INS_AUTHENTICATE: self._authenticate,
            INS_FETCH: self._fetch,
        }.get(apdu.ins)
        if handler is None:
            resp = ResponseApdu.from_sw(SW_INS_NOT_SUPPORTED)
        else:
            try:
                resp = handler(apdu)
            except Exception:
                logger.exception("SIM handler failed for %s", apdu)
                resp = ResponseApdu.from_sw(SW_UNKNOWN)
        self._arm_proactive()
        return self._signal_proactive(apdu, resp)

    # -- proactive machinery -----------------------------------------

    def _arm_proactive(self) -> None:
        if self._pending_fetch is not None or self._script_pos >= len(self.profile.proactive_script):
            return
        event = self.profile.proactive_script[self._script_pos]
        fired = False
        if event.trigger == TRIGGER_AFTER_COMMANDS:
            fired = self._exchange_count >= event.after_n
        elif event.trigger == TRIGGER_ON_AUTHENTICATE:
            fired = getattr(self, "_authenticated", False)
        if not fired:
            return
        self._script_pos += 1
        if event.kind == KIND_SEND_BINARY_SMS:
            self._pending_fetch = build_proactive_sms(event.payload)
        elif event.kind == KIND_NOOP:
            pass

    def _signal_proactive(self, apdu: Apdu, resp: ResponseApdu) -> ResponseApdu:
        # 91 XX replaces a normal-ending 90 00 (data may precede it)
        # on every response until the pending command is fetched.
        if self._pending_fetch is not None and apdu.ins != INS_FETCH and resp.sw == SW_OK:
            return ResponseApdu(data=resp.data, sw1=0x91, sw2=len(self._pending_fetch))
        return resp

    def _fetch(self, apdu: Apdu) -> ResponseApdu:
        if self._pending_fetch is None:
            return ResponseApdu.from_sw(SW_CONDITIONS)
        tlv = self._pending_fetch
        if apdu.le is not None and apdu.le != len(tlv):
            return ResponseApdu.from_sw(SW_WRONG_LENGTH)
        self._pending_fetch = None
        return ResponseApdu(data=tlv)

    # -- file system --------------------------------------------------

    def _known_dirs(self) -> set:
        dirs = {(MF_FID,)}
        for path in self.profile.files:
            parts = tuple(path.split("/"))
            for i in range(1, len(parts)):
                dirs.add(parts[:i])
        return dirs

    def _select(self, apdu: Apdu) -> ResponseApdu:
        if len(apdu.data) != 2:
            return ResponseApdu.from_sw(SW_WRONG_LENGTH)
        fid = apdu.data.hex().upper()
        dirs = self._known_dirs()
        if fid == MF_FID:
            self._cwd, self._selected = [MF_FID], None
            return self._select_ok(is_dir=True, fid=fid)
        # DF under the current directory or directly under MF
        for base in (tuple(self._cwd), (MF_FID,)):
            if base + (fid,) in dirs:
                self._cwd = list(base) + [fid]
                self._selected = None
                return self._select_ok(is_dir=True, fid=fid)
        # EF under the current directory, its parent, or MF
        candidates = [tuple(self._cwd) + (fid,)]
        if len(self._cwd) > 1:
            candidates.append(tuple(self._cwd[:-1]) + (fid,))
        candidates.append((MF_FID, fid))
        for cand in candidates:
            path = "/".join(cand)
            if path in self.profile.files:
                self._cwd = list(cand[:-1])
                self._selected = path
                return self._select_ok(is_dir=False, fid=fid, size=len(self.profile.files[path]))
        return ResponseApdu.from_sw(SW_FILE_NOT_FOUND)

    def _select_ok(self, is_dir: bool, fid: str, size: int = 0) -> ResponseApdu:
        # 2G-style select response: RFU(2) size(2) fid(2) type(1) pad
        info = bytes(2) + size.to_bytes(2, "big") + bytes.fromhex(fid)
        info += b"\x01" if is_dir else b"\x04"
        info += bytes(8)
        self._response_buf = info
        return ResponseApdu.from_sw(0x9F00 | len(info))

    def _read_binary(self, apdu: Apdu) -> ResponseApdu:
        if self._selected is None:
            return ResponseApdu.from_sw(SW_NO_EF_SELECTED)
        content = self.profile.files[self._selected]
        offset = (apdu.p1 << 8) | apdu.p2
        length = apdu.le or 0
        if length == 0 or offset + length > len(content):
            return ResponseApdu.from_sw(SW_WRONG_LENGTH)
        return ResponseApdu(data=content[offset : offset + length])

    def _update_binary(self, apdu: Apdu) -> ResponseApdu:
        if self._selected is None:
            return ResponseApdu.from_sw(SW_NO_EF_SELECTED)
        content = bytearray(self.profile.files[self._selected])
        offset = (apdu.p1 << 8) | apdu.p2
        if not apdu.data or offset + len(apdu.data) > len(content):
            return ResponseApdu.from_sw(SW_WRONG_LENGTH)
        content[offset : offset + len(apdu.data)] = apdu.data
        self.profile.files[self._selected] = bytes(content)
        return ResponseApdu.from_sw(SW_OK)

    def _get_response(self, apdu: Apdu) -> ResponseApdu:
        if not self._response_buf:
            return ResponseApdu.from_sw(SW_CONDITIONS)
        if apdu.le is not None and apdu.le != len(self._response_buf):
            return ResponseApdu.from_sw(SW_WRONG_LENGTH)
        buf, self._response_buf = self._response_buf, b""
        return ResponseApdu(data=buf)

    def _status(self, apdu: Apdu) -> ResponseApdu:
        cur = self._cwd[-1]
        info = bytes(2) + bytes(2) + bytes.fromhex(cur) + b"\x01" + bytes(15)
        want = apdu.le or len(info)
        if want > len(info):
            return ResponseApdu.from_sw(SW_WRONG_LENGTH)
        return ResponseApdu(data=info[:want])

    def _authenticate(self, apdu: Apdu) -> ResponseApdu:
        if len(apdu.data) != 16:
            return ResponseApdu.from_sw(SW_WRONG_LENGTH)
        res, session_key = authenticate_stub(self.profile.ki, apdu.data)
        self._response_buf = res + session_key
        self._authenticated = True
        return ResponseApdu.from_sw(0x9F00 | len(self._response_buf))


class TraceReplaySim:
    """Replays a recorded (command, response) trace.

    Matching is on (cla, ins, p1, p2, lc); a mismatch yields SW 6F00
    and records a divergence without consuming the trace entry.
    """

    def __init__(self, trace: Sequence[Tuple[Apdu, ResponseApdu]], atr_bytes: Optional[bytes] = None):
        if not trace:
            raise AtlasError("replay trace must not be empty")
        self.trace = list(trace)
        self._atr = atr_bytes or default_atr(b"REPLAY")
        self._pos = 0
        self.divergences: List[Tuple[int, Apdu]] = []

    def atr(self) -> bytes:
        return self._atr

    def reset(self) -> None:
        self._pos = 0

    def exchange(self, apdu: Apdu) -> ResponseApdu:
        if self._pos >= len(self.trace):
            raise TraceExhausted(f"trace finished after {len(self.trace)} exchanges")
        expected, response = self.trace[self._pos]
        if not expected.matches_key(apdu):
            self.divergences.append((self._pos, apdu))
            logger.warning("trace divergence at %d: got %s, expected %s", self._pos, apdu, expected)
            return ResponseApdu.from_sw(SW_UNKNOWN)
        self._pos += 1
        return response


def simulated_sim(profile: SimProfile) -> SimulatedSim:
    return SimulatedSim(profile)


def trace_replay_sim(trace: Sequence[Tuple[Apdu, ResponseApdu]], atr_bytes: Optional[bytes] = None) -> TraceReplaySim:
    return TraceReplaySim(trace, atr_bytes)
