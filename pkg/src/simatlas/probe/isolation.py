"""In-process isolation boundary.

Stands in for the network-namespace split: every socket a scenario
opens must come from this boundary, each packet carries the scenario's
attribution tag, and anything crossing without the active tag is an
IsolationBreach -- always a failure, never ignored.  The capture file
records exactly what crossed.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import List, Optional

from ..clock import Clock, SystemClock
from ..errors import AtlasError
from ..pcap import build_icmp_echo, build_tcp, build_udp, write_pcap


class IsolationBreach(AtlasError):
    code = "IsolationBreach"


@dataclass(frozen=True)
class PacketRecord:
    ts_wall: float
    src_ip: str
    dst_ip: str
    protocol: str  # udp | tcp | icmp
    sport: int
    dport: int
    length: int
    tag: str

    def to_frame(self) -> bytes:
        payload = bytes(self.length)
        if self.protocol == "udp":
            return build_udp(self.src_ip, self.dst_ip, self.sport, self.dport, payload)
        if self.protocol == "icmp":
            return build_icmp_echo(self.src_ip, self.dst_ip, payload)
        return build_tcp(self.src_ip, self.dst_ip, self.sport, self.dport, payload)


class _FlowSocket:
    """Scenario-facing send handle bound to one remote endpoint."""

    def __init__(self, boundary: "IsolationBoundary", dst_ip: str, dport: int, protocol: str, sport: int):
        self._boundary = boundary
        self.dst_ip = dst_ip
        self.dport = dport
        self.protocol = protocol
        self.sport = sport
        self.bytes_sent = 0

    def send(self, length: int) -> None:
        self._boundary._emit(self, length)
        self.bytes_sent += length


class IsolationBoundary:
    """Virtual interface owned by one measurement at a time."""

    def __init__(self, local_ip: str, clock: Optional[Clock] = None):
        self.local_ip = local_ip
        self.clock = clock or SystemClock()
        self._lock = threading.Lock()
        self._records: List[PacketRecord] = []
        self._active_tag: Optional[str] = None
        self._next_sport = 40_000
        self._breaches: List[PacketRecord] = []

    def open_measurement(self, tag: str) -> None:
        with self._lock:
            if self._active_tag is not None:
                raise IsolationBreach(f"boundary already owned by {self._active_tag!r}")
            self._active_tag = tag
            self._records.clear()
            self._breaches.clear()

    def close_measurement(self, tag: str) -> None:
        with self._lock:
            if self._active_tag == tag:
                self._active_tag = None

    def socket(self, dst_ip: str, dport: int, protocol: str = "udp") -> _FlowSocket:
        with self._lock:
            sport = self._next_sport
            self._next_sport += 1
        return _FlowSocket(self, dst_ip, dport, protocol, sport)

    def _emit(self, sock: _FlowSocket, length: int) -> None:
        with self._lock:
            tag = self._active_tag
            record = PacketRecord(
                ts_wall=self.clock.wall(),
                src_ip=self.local_ip,
                dst_ip=sock.dst_ip,
                protocol=sock.protocol,
                sport=sock.sport,
                dport=sock.dport,
                length=length,
                tag=tag or "",
            )
            if tag is None:
                self._breaches.append(record)
                raise IsolationBreach("packet emitted outside any measurement")
            self._records.append(record)

    def inject_foreign_packet(self, src_ip: str, dst_ip: str, length: int, tag: str = "") -> None:
        """Test hook: background noise that must be flagged."""
        with self._lock:
            record = PacketRecord(
                ts_wall=self.clock.wall(), src_ip=src_ip, dst_ip=dst_ip,
                protocol="udp", sport=0, dport=0, length=length, tag=tag,
            )
            if tag and tag == self._active_tag:
                self._records.append(record)
            else:
                self._breaches.append(record)

    def records(self, tag: Optional[str] = None) -> List[PacketRecord]:
        with self._lock:
            if tag is None:
                return list(self._records)
            return [r for r in self._records if r.tag == tag]

    def breaches(self) -> List[PacketRecord]:
        with self._lock:
            return list(self._breaches)

    def capture_pcap(self, tag: str) -> bytes:
        return write_pcap((r.ts_wall, r.to_frame()) for r in self.records(tag))
