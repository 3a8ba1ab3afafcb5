"""Address classification for IP-configuration surveys.

The interesting buckets: the RFC 6598 carrier-grade NAT shared space
(100.64.0.0/10), the RFC 1918 private ranges, and genuinely public
addresses.  Documentation ranges are public-syntax and classify as
public; loopback/link-local/multicast and IPv6 ULA land in
OtherReserved.
"""

from __future__ import annotations

import ipaddress
from enum import Enum

from ..errors import AtlasError


class ParseError(AtlasError):
    code = "ParseError"


class IpClass(Enum):
    CGNAT_SHARED = "CgnatShared"
    PRIVATE_RFC1918 = "PrivateRfc1918"
    PUBLIC_V4 = "PublicV4"
    PUBLIC_V6 = "PublicV6"
    OTHER_RESERVED = "OtherReserved"


_CGNAT = ipaddress.ip_network("100.64.0.0/10")
_RFC1918 = (
    ipaddress.ip_network("10.0.0.0/8"),
    ipaddress.ip_network("172.16.0.0/12"),
    ipaddress.ip_network("192.168.0.0/16"),
)
_V4_RESERVED = (
    ipaddress.ip_network("0.0.0.0/8"),
    ipaddress.ip_network("127.0.0.0/8"),
    ipaddress.ip_network("169.254.0.0/16"),
    ipaddress.ip_network("224.0.0.0/4"),
    ipaddress.ip_network("240.0.0.0/4"),
)
_V6_RESERVED = (
    ipaddress.ip_network("::/128"),
    ipaddress.ip_network("::1/128"),
    ipaddress.ip_network("fc00::/7"),  # ULA
    ipaddress.ip_network("fe80::/10"),  # link-local
    ipaddress.ip_network("ff00::/8"),  # multicast
)


def classify_ip(address: str) -> IpClass:
    try:
        ip = ipaddress.ip_address(address.strip())
    except ValueError as exc:
        raise ParseError(f"not an IP address: {address!r}") from exc
    if ip.version == 4:
        if ip in _CGNAT:
            return IpClass.CGNAT_SHARED
        if any(ip in net for net in _RFC1918):
            return IpClass.PRIVATE_RFC1918
        if any(ip in net for net in _V4_RESERVED):
            return IpClass.OTHER_RESERVED
        return IpClass.PUBLIC_V4
    if any(ip in net for net in _V6_RESERVED):
        return IpClass.OTHER_RESERVED
    # v4-mapped addresses classify as their embedded v4 form
    if ip.ipv4_mapped is not None:
        return classify_ip(str(ip.ipv4_mapped))
    return IpClass.PUBLIC_V6
