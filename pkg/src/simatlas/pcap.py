"""Classic PCAP writing and simple packet synthesis.

Big-endian classic format (magic A1B2C3D4, v2.4, snaplen 65535,
linktype 1/Ethernet) so identical inputs always produce identical
bytes.  Packet builders cover the Ethernet+IPv4+UDP/TCP shapes the
capture and GSMTAP exports need.
"""

from __future__ import annotations

import struct
from typing import Iterable, List, Tuple

from .errors import AtlasError

PCAP_MAGIC = 0xA1B2C3D4
PCAP_VERSION = (2, 4)
PCAP_SNAPLEN = 65535
LINKTYPE_ETHERNET = 1

GLOBAL_HEADER_LEN = 24
RECORD_HEADER_LEN = 16

ETH_HEADER = bytes(6) + bytes(6) + b"\x08\x00"  # zero MACs, IPv4

PROTO_TCP = 6
PROTO_UDP = 17
PROTO_ICMP = 1


class PcapError(AtlasError):
    code = "PcapError"


def ipv4_checksum(header: bytes) -> int:
    total = 0
    for i in range(0, len(header), 2):
        total += (header[i] << 8) | header[i + 1]
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def _ip_bytes(addr: str) -> bytes:
    parts = addr.split(".")
    if len(parts) != 4:
        raise PcapError(f"IPv4 address expected, got {addr!r}")
    return bytes(int(p) for p in parts)


def build_ipv4(src: str, dst: str, proto: int, payload: bytes) -> bytes:
    total = 20 + len(payload)
    header = struct.pack(
        ">BBHHHBBH4s4s", 0x45, 0x00, total, 0x0000, 0x0000, 64, proto, 0,
        _ip_bytes(src), _ip_bytes(dst),
    )
    header = header[:10] + struct.pack(">H", ipv4_checksum(header)) + header[12:]
    return header + payload


def build_udp(src: str, dst: str, sport: int, dport: int, payload: bytes) -> bytes:
    udp = struct.pack(">HHHH", sport, dport, 8 + len(payload), 0) + payload
    return ETH_HEADER + build_ipv4(src, dst, PROTO_UDP, udp)


def build_tcp(src: str, dst: str, sport: int, dport: int, payload: bytes) -> bytes:
    tcp = struct.pack(">HHIIBBHHH", sport, dport, 0, 0, 5 << 4, 0x18, 65535, 0, 0) + payload
    return ETH_HEADER + build_ipv4(src, dst, PROTO_TCP, tcp)


def build_icmp_echo(src: str, dst: str, payload: bytes = b"") -> bytes:
    icmp = struct.pack(">BBHHH", 8, 0, 0, 0, 1) + payload
    return ETH_HEADER + build_ipv4(src, dst, PROTO_ICMP, icmp)


def write_pcap(packets: Iterable[Tuple[float, bytes]]) -> bytes:
    """Serialize (wall timestamp, packet bytes) pairs."""
    out = bytearray()
    out += struct.pack(
        ">IHHiIII",
        PCAP_MAGIC, PCAP_VERSION[0], PCAP_VERSION[1], 0, 0, PCAP_SNAPLEN, LINKTYPE_ETHERNET,
    )
    for ts_wall, packet in packets:
        ts_sec = int(ts_wall)
        ts_usec = int(round((ts_wall - ts_sec) * 1_000_000))
        if ts_usec == 1_000_000:
            ts_sec, ts_usec = ts_sec + 1, 0
        out += struct.pack(">IIII", ts_sec, ts_usec, len(packet), len(packet))
        out += packet
    return bytes(out)


def read_pcap(data: bytes) -> List[Tuple[float, bytes]]:
    if len(data) < GLOBAL_HEADER_LEN:
        raise PcapError("file shorter than a PCAP global header")
    magic, _, _, _, _, _, linktype = struct.unpack(">IHHiIII", data[:GLOBAL_HEADER_LEN])
    if magic != PCAP_MAGIC:
        raise PcapError(f"bad magic {magic:#x}")
    if linktype != LINKTYPE_ETHERNET:
        raise PcapError(f"unsupported linktype {linktype}")
    pos = GLOBAL_HEADER_LEN
    out: List[Tuple[float, bytes]] = []
    while pos < len(data):
        if pos + RECORD_HEADER_LEN > len(data):
            raise PcapError("truncated record header")
        ts_sec, ts_usec, incl, orig = struct.unpack(">IIII", data[pos : pos + RECORD_HEADER_LEN])
        pos += RECORD_HEADER_LEN
        if pos + incl > len(data) or incl != orig:
            raise PcapError("truncated or sliced packet")
        out.append((ts_sec + ts_usec / 1_000_000, bytes(data[pos : pos + incl])))
        pos += incl
    return out
