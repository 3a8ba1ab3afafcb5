"""Simulated operator billing.

Flows are classified against the scenario's zero-rating rule (name- or
address-based), non-exempt bytes are rounded up per posting batch, and
the quota changes only after the CDR delay elapses -- mirroring the
settle-then-read pattern real operators force on measurements.
"""

from __future__ import annotations

import ipaddress
import json
import threading
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from ..clock import Clock, ManualClock, SystemClock
from ..errors import AtlasError
from .encoding import round_up


class Classifier(Enum):
    BY_HOST_HEADER = "ByHostHeader"  # client-supplied names: Host or SNI
    BY_SNI = "BySni"  # TLS SNI only
    BY_IP_ALLOWLIST = "ByIpAllowlist"  # destination address ranges


class RoamingMode(Enum):
    HOME_ROUTED = "HomeRouted"
    LOCAL_BREAKOUT = "LocalBreakout"


class ScenarioError(AtlasError):
    code = "ScenarioError"


@dataclass(frozen=True)
class BillingScenario:
    name: str
    classifier: Classifier = Classifier.BY_SNI
    zero_rated_names: frozenset = frozenset()
    zero_rated_ips: tuple = ()
    internal_dns_billed_domestic: bool = False
    internal_dns_billed_roaming: bool = False
    rounding_bytes: int = 1
    cdr_delay_s: float = 0.0
    roaming_mode: RoamingMode = RoamingMode.HOME_ROUTED
    quota_bytes: int = 1024 * 1024 * 1024
    # zero-rating contracts sometimes stop applying abroad
    zero_rating_in_roaming: bool = True

    def __post_init__(self):
        object.__setattr__(self, "zero_rated_names", frozenset(self.zero_rated_names))
        object.__setattr__(self, "zero_rated_ips", tuple(self.zero_rated_ips))
        if self.rounding_bytes < 1:
            raise ScenarioError("rounding_bytes must be >= 1")
        if self.quota_bytes < 0:
            raise ScenarioError("quota_bytes must be >= 0")
        if self.classifier == Classifier.BY_IP_ALLOWLIST:
            if self.zero_rated_names and not self.zero_rated_ips:
                raise ScenarioError("IP classifier configured with names but no CIDRs")
        for cidr in self.zero_rated_ips:
            ipaddress.ip_network(cidr)  # validate


@dataclass(frozen=True)
class OperatorConfig:
    """Network-side simulation knobs that ride along with a scenario."""

    name: str = "sim-op"
    credentials: Dict[str, str] = field(default_factory=dict)  # imsi -> ki hex
    home_pool: str = "10.0.0.0/8"
    visited_pool: str = "100.64.0.0/10"
    ipv6_pool: Optional[str] = None
    firewall_blocks_incoming: bool = True
    internal_dns_ip: str = "10.11.12.53"
    auth_rand_seed: int = 0

    def ki_for(self, imsi: str) -> Optional[bytes]:
        ki_hex = self.credentials.get(imsi)
        return bytes.fromhex(ki_hex) if ki_hex else None


@dataclass(frozen=True)
class Flow:
    src_ip: str
    dst_ip: str
    bytes_up: int = 0
    bytes_down: int = 0
    protocol: str = "tcp"  # http | https | dns | tcp | udp | icmp
    host: Optional[str] = None  # HTTP Host header, when seen
    sni: Optional[str] = None  # TLS SNI, when seen
    is_internal_dns: bool = False
    tag: str = ""

    @property
    def total_bytes(self) -> int:
        return self.bytes_up + self.bytes_down

    def name_for(self, classifier: Classifier) -> Optional[str]:
        if classifier == Classifier.BY_SNI:
            return self.sni
        if classifier == Classifier.BY_HOST_HEADER:
            return self.host if self.protocol == "http" else self.sni
        return None

    def as_dict(self) -> dict:
        return {
            "src_ip": self.src_ip,
            "dst_ip": self.dst_ip,
            "bytes_up": self.bytes_up,
            "bytes_down": self.bytes_down,
            "protocol": self.protocol,
            "host": self.host,
            "sni": self.sni,
            "is_internal_dns": self.is_internal_dns,
            "tag": self.tag,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Flow":
        return cls(
            src_ip=d["src_ip"],
            dst_ip=d["dst_ip"],
            bytes_up=int(d.get("bytes_up", 0)),
            bytes_down=int(d.get("bytes_down", 0)),
            protocol=d.get("protocol", "tcp"),
            host=d.get("host"),
            sni=d.get("sni"),
            is_internal_dns=bool(d.get("is_internal_dns", False)),
            tag=d.get("tag", ""),
        )


@dataclass(frozen=True)
class Cdr:
    src_ip: str
    dst_ip: str
    name: Optional[str]
    bytes_up: int
    bytes_down: int
    zero_rated: bool
    billed: bool
    batch_id: int
    posted_at: float

    def as_dict(self) -> dict:
        return {
            "src_ip": self.src_ip,
            "dst_ip": self.dst_ip,
            "name": self.name,
            "bytes_up": self.bytes_up,
            "bytes_down": self.bytes_down,
            "zero_rated": self.zero_rated,
            "billed": self.billed,
            "batch_id": self.batch_id,
            "posted_at": self.posted_at,
        }


def classify_flow(scenario: BillingScenario, flow: Flow, roaming: bool) -> Tuple[bool, bool]:
    """(zero_rated, billed) for one flow under the scenario rules."""
    if flow.is_internal_dns:
        billed = scenario.internal_dns_billed_roaming if roaming else scenario.internal_dns_billed_domestic
        return False, billed
    zero_rated = False
    if scenario.zero_rating_in_roaming or not roaming:
        if scenario.classifier == Classifier.BY_IP_ALLOWLIST:
            dst = ipaddress.ip_address(flow.dst_ip)
            zero_rated = any(dst in ipaddress.ip_network(c) for c in scenario.zero_rated_ips)
        else:
            name = flow.name_for(scenario.classifier)
            zero_rated = name is not None and name in scenario.zero_rated_names
    return zero_rated, not zero_rated


@dataclass
class _Batch:
    batch_id: int
    post_at: float
    billed_bytes: int
    cdrs: List[Cdr]


class BillingSimulator:
    """Single-owner billing state machine with a posting clock.

    Quota and CDR queries settle lazily against the clock, so a
    ManualClock drives CDR-delay tests deterministically.
    """

    def __init__(self, scenario: BillingScenario, clock: Optional[Clock] = None):
        self.scenario = scenario
        self.clock = clock or SystemClock()
        self._lock = threading.Lock()
        self._quota = scenario.quota_bytes
        self._pending: List[_Batch] = []
        self._posted: List[Cdr] = []
        self._next_batch = 1

    def post_flows(self, flows: List[Flow], roaming: bool = False) -> int:
        """Account one batch of finished flows; returns the batch id.

        The whole batch is one CDR window: billable bytes are summed
        and rounded up once.
        """
        now = self.clock.now()
        with self._lock:
            batch_id = self._next_batch
            self._next_batch += 1
            billable = 0
            cdrs = []
            post_at = now + self.scenario.cdr_delay_s
            for flow in flows:
                zero_rated, billed = classify_flow(self.scenario, flow, roaming)
                if billed:
                    billable += flow.total_bytes
                cdrs.append(
                    Cdr(
                        src_ip=flow.src_ip,
                        dst_ip=flow.dst_ip,
                        name=flow.sni or flow.host,
                        bytes_up=flow.bytes_up,
                        bytes_down=flow.bytes_down,
                        zero_rated=zero_rated,
                        billed=billed,
                        batch_id=batch_id,
                        posted_at=post_at,
                    )
                )
            billed_total = round_up(billable, self.scenario.rounding_bytes) if billable else 0
            self._pending.append(_Batch(batch_id, post_at, billed_total, cdrs))
            return batch_id

    def _settle(self) -> None:
        now = self.clock.now()
        with self._lock:
            due = [b for b in self._pending if b.post_at <= now]
            self._pending = [b for b in self._pending if b.post_at > now]
            for batch in sorted(due, key=lambda b: (b.post_at, b.batch_id)):
                self._quota = max(0, self._quota - batch.billed_bytes)
                self._posted.extend(batch.cdrs)

    def quota_bytes(self) -> int:
        self._settle()
        with self._lock:
            return self._quota

    def pending_batches(self) -> int:
        self._settle()
        with self._lock:
            return len(self._pending)

    def cdrs(self) -> List[Cdr]:
        self._settle()
        with self._lock:
            return list(self._posted)


def billing_simulate(scenario: BillingScenario, flows: List[Flow], roaming: bool = False) -> dict:
    """One-shot billing of a flow batch, CDR delay already elapsed."""
    clock = ManualClock()
    sim = BillingSimulator(scenario, clock)
    sim.post_flows(flows, roaming=roaming)
    clock.advance(scenario.cdr_delay_s + 1)
    return {"quota_after": sim.quota_bytes(), "cdrs": sim.cdrs()}


# -- scenario config files ------------------------------------------------


def scenario_config_to_dict(scenario: BillingScenario, operator: OperatorConfig) -> dict:
    doc = {
        "name": scenario.name,
        "classifier": scenario.classifier.value,
        "zero_rated_names": sorted(scenario.zero_rated_names),
        "zero_rated_ips": list(scenario.zero_rated_ips),
        "internal_dns_billed_domestic": scenario.internal_dns_billed_domestic,
        "internal_dns_billed_roaming": scenario.internal_dns_billed_roaming,
        "rounding_bytes": scenario.rounding_bytes,
        "cdr_delay_s": scenario.cdr_delay_s,
        "roaming_mode": scenario.roaming_mode.value,
        "quota_bytes": scenario.quota_bytes,
        "zero_rating_in_roaming": scenario.zero_rating_in_roaming,
        "operator": {
            "name": operator.name,
            "credentials": dict(operator.credentials),
            "home_pool": operator.home_pool,
            "visited_pool": operator.visited_pool,
            "ipv6_pool": operator.ipv6_pool,
            "firewall_blocks_incoming": operator.firewall_blocks_incoming,
            "internal_dns_ip": operator.internal_dns_ip,
            "auth_rand_seed": operator.auth_rand_seed,
        },
    }
    return doc


def scenario_config_from_dict(doc: dict) -> Tuple[BillingScenario, OperatorConfig]:
    scenario = BillingScenario(
        name=doc["name"],
        classifier=Classifier(doc.get("classifier", "BySni")),
        zero_rated_names=frozenset(doc.get("zero_rated_names", [])),
        zero_rated_ips=tuple(doc.get("zero_rated_ips", [])),
        internal_dns_billed_domestic=bool(doc.get("internal_dns_billed_domestic", False)),
        internal_dns_billed_roaming=bool(doc.get("internal_dns_billed_roaming", False)),
        rounding_bytes=int(doc.get("rounding_bytes", 1)),
        cdr_delay_s=float(doc.get("cdr_delay_s", 0.0)),
        roaming_mode=RoamingMode(doc.get("roaming_mode", "HomeRouted")),
        quota_bytes=int(doc.get("quota_bytes", 1024 * 1024 * 1024)),
        zero_rating_in_roaming=bool(doc.get("zero_rating_in_roaming", True)),
    )
    op = doc.get("operator", {})
    operator = OperatorConfig(
        name=op.get("name", "sim-op"),
        credentials=dict(op.get("credentials", {})),
        home_pool=op.get("home_pool", "10.0.0.0/8"),
        visited_pool=op.get("visited_pool", "100.64.0.0/10"),
        ipv6_pool=op.get("ipv6_pool"),
        firewall_blocks_incoming=bool(op.get("firewall_blocks_incoming", True)),
        internal_dns_ip=op.get("internal_dns_ip", "10.11.12.53"),
        auth_rand_seed=int(op.get("auth_rand_seed", 0)),
    )
    return scenario, operator


def load_scenario_config(path) -> Tuple[BillingScenario, OperatorConfig]:
    try:
        return scenario_config_from_dict(json.loads(Path(path).read_text()))
    except (KeyError, ValueError) as exc:
        raise ScenarioError(f"cannot load scenario config {path}: {exc}") from exc
