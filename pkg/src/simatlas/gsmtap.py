"""GSMTAP PCAP export for APDU logs.

Every record becomes Ethernet + IPv4 + UDP(dst 4729) + a 16-byte GSMTAP
header (version 2, hdr_len 4 words, type 4 = SIM, remaining fields
zero) followed by the raw APDU bytes.  Output depends only on the
records, so identical logs export byte-identically.
"""

from __future__ import annotations

import struct
from typing import Iterable, List, Tuple

from .errors import AtlasError
from .pcap import (
    GLOBAL_HEADER_LEN,
    RECORD_HEADER_LEN,
    PcapError,
    build_udp,
    read_pcap,
    write_pcap,
)

GSMTAP_PORT = 4729
GSMTAP_VERSION = 0x02
GSMTAP_HDR_WORDS = 4  # 16 bytes
GSMTAP_TYPE_SIM = 0x04

_HOST_IP = "127.0.0.1"

PACKET_OVERHEAD = 14 + 20 + 8 + 16  # eth + ipv4 + udp + gsmtap

__all__ = [
    "GLOBAL_HEADER_LEN",
    "RECORD_HEADER_LEN",
    "PACKET_OVERHEAD",
    "PcapError",
    "write_gsmtap_pcap",
    "read_gsmtap_pcap",
]


def _gsmtap_header() -> bytes:
    return struct.pack(
        ">BBBBHbbIBBBB",
        GSMTAP_VERSION, GSMTAP_HDR_WORDS, GSMTAP_TYPE_SIM, 0,  # version, hdr words, type, timeslot
        0, 0, 0, 0, 0, 0, 0, 0,  # arfcn, signal, snr, frame nr, subtype, antenna, subslot, res
    )


def write_gsmtap_pcap(records: Iterable) -> bytes:
    """Serialize APDU log records to PCAP bytes.

    Records need .raw (bytes) and .ts_wall (float epoch seconds); plain
    (raw, ts_wall) tuples are accepted too.  Records must already be in
    capture order.
    """
    packets = []
    for record in records:
        if isinstance(record, tuple):
            raw, ts_wall = record
        else:
            raw, ts_wall = record.raw, record.ts_wall
        packet = build_udp(_HOST_IP, _HOST_IP, GSMTAP_PORT, GSMTAP_PORT, _gsmtap_header() + bytes(raw))
        packets.append((ts_wall, packet))
    return write_pcap(packets)


def read_gsmtap_pcap(data: bytes) -> List[Tuple[float, bytes]]:
    """Parse a PCAP produced by write_gsmtap_pcap back into
    (timestamp, raw APDU bytes) pairs."""
    out: List[Tuple[float, bytes]] = []
    for ts, packet in read_pcap(data):
        if len(packet) < PACKET_OVERHEAD:
            raise PcapError("packet shorter than protocol overhead")
        gsmtap = packet[14 + 20 + 8 : PACKET_OVERHEAD]
        if gsmtap[0] != GSMTAP_VERSION or gsmtap[2] != GSMTAP_TYPE_SIM:
            raise PcapError("not a GSMTAP SIM packet")
        out.append((ts, bytes(packet[PACKET_OVERHEAD:])))
    return out
