"""Network-side operator simulation for the probe.

Generates authentication challenges, verifies responses against its own
key copy, and assigns addresses from the configured pools per roaming
mode -- home-routed sessions keep a home-pool address even abroad.
"""

from __future__ import annotations

import hashlib
import ipaddress
import random
from typing import Optional

from ..errors import AtlasError
from ..metering.billing import OperatorConfig, RoamingMode
from ..simcard.auth import authenticate_stub


class AuthFailure(AtlasError):
    code = "AuthFailure"


class SimulatedOperator:
    def __init__(self, config: OperatorConfig, roaming_mode: RoamingMode = RoamingMode.HOME_ROUTED):
        self.config = config
        self.roaming_mode = roaming_mode
        self._rng = random.Random(config.auth_rand_seed)

    def challenge(self) -> bytes:
        return bytes(self._rng.randrange(256) for _ in range(16))

    def verify(self, imsi: str, rand: bytes, res: bytes) -> bytes:
        """Check the SIM's response; returns the session key on success."""
        ki = self.config.ki_for(imsi)
        if ki is None:
            raise AuthFailure(f"operator has no key for IMSI {imsi}")
        expected_res, session_key = authenticate_stub(ki, rand)
        if res != expected_res:
            raise AuthFailure("authentication response mismatch")
        return session_key

    def assign_ip(self, imsi: str, roaming: bool) -> str:
        """Deterministic per-IMSI address from the applicable pool."""
        if roaming and self.roaming_mode == RoamingMode.LOCAL_BREAKOUT:
            pool = ipaddress.ip_network(self.config.visited_pool)
        elif self.config.ipv6_pool and not roaming:
            pool = ipaddress.ip_network(self.config.ipv6_pool)
        elif self.config.ipv6_pool and roaming and self.roaming_mode == RoamingMode.HOME_ROUTED:
            pool = ipaddress.ip_network(self.config.ipv6_pool)
        else:
            pool = ipaddress.ip_network(self.config.home_pool)
        span = max(1, pool.num_addresses - 2)
        offset = 1 + int.from_bytes(hashlib.sha256(imsi.encode()).digest()[:8], "big") % span
        return str(pool.network_address + offset)

    def address_in_home_pool(self, address: str) -> bool:
        ip = ipaddress.ip_address(address)
        for pool_cidr in (self.config.home_pool, self.config.ipv6_pool):
            if not pool_cidr:
                continue
            pool = ipaddress.ip_network(pool_cidr)
            if ip.version == pool.version and ip in pool:
                return True
        return False

    def incoming_reachable(self, address: str) -> bool:
        """Self-scan verdict: private/CGNAT space is implicitly
        firewalled; public space obeys the explicit firewall flag."""
        from ..metering.ipclass import IpClass, classify_ip

        klass = classify_ip(address)
        if klass in (IpClass.PUBLIC_V4, IpClass.PUBLIC_V6):
            return not self.config.firewall_blocks_incoming
        return False
