"""Runnable measurement scenarios.

Each driver pushes real bytes through the probe's isolation boundary to
a local sink, reports the flows to the billing simulator, settles the
quota, and decodes the billed traffic classes back into a verdict.
The binary-power encoding lets one quota diff answer several questions
per run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, List, Optional

from ..clock import Clock, SystemClock
from ..errors import AtlasError
from .billing import BillingScenario, Flow, OperatorConfig
from .encoding import TrafficClassPlan, decode_billed, encode_classes
from .httpapi import BillingClient
from .ipclass import classify_ip

if TYPE_CHECKING:  # typing only, avoids an import cycle with probe
    from ..probe.isolation import IsolationBoundary
    from ..probe.operator_sim import SimulatedOperator

EXTERNAL_DNS_IP = "198.51.100.53"
LEGIT_APP_IP = "203.0.113.10"
ATTACKER_IP = "198.51.100.7"

DNS_CHUNK = 512
HTTP_CHUNK = 4096


class ScenarioFailure(AtlasError):
    code = "ScenarioFailure"


@dataclass
class ScenarioContext:
    boundary: "IsolationBoundary"
    billing: BillingClient
    scenario: BillingScenario
    operator: "SimulatedOperator"
    local_ip: str
    roaming: bool = False
    tag: str = "measurement"
    clock: Clock = field(default_factory=SystemClock)
    unit_bytes: int = 256 * 1024
    settle_timeout_s: float = 120.0
    params: Dict[str, str] = field(default_factory=dict)

    @property
    def context_name(self) -> str:
        return "roaming" if self.roaming else "domestic"


def _settled_quota(ctx: ScenarioContext) -> int:
    deadline = ctx.clock.now() + ctx.settle_timeout_s
    last: Optional[int] = None
    while True:
        doc = ctx.billing.quota()
        if doc.get("pending_batches", 0) == 0 and last == doc["remaining_bytes"]:
            return int(doc["remaining_bytes"])
        if ctx.clock.now() >= deadline:
            raise ScenarioFailure(f"quota did not settle within {ctx.settle_timeout_s}s")
        last = int(doc["remaining_bytes"])
        ctx.clock.sleep(0.02)


def _pump(ctx: ScenarioContext, dst_ip: str, dport: int, protocol: str, volume: int, chunk: int) -> None:
    wire_proto = {"dns": "udp", "http": "tcp", "https": "tcp"}.get(protocol, protocol)
    sock = ctx.boundary.socket(dst_ip, dport, wire_proto)
    remaining = volume
    while remaining > 0:
        step = min(chunk, remaining)
        sock.send(step)
        remaining -= step


def run_scenario_dns_metering(ctx: ScenarioContext) -> dict:
    """Internal vs external resolver metering, one class each."""
    plan = TrafficClassPlan(classes={0, 1}, unit_bytes=ctx.unit_bytes)
    internal_ip = ctx.operator.config.internal_dns_ip
    q0 = _settled_quota(ctx)

    targets = {
        0: (internal_ip, True),
        1: (EXTERNAL_DNS_IP, False),
    }
    flows: List[Flow] = []
    for step in encode_classes(plan):
        dst, internal = targets[step.class_nr]
        _pump(ctx, dst, 53, "dns", step.volume_bytes, DNS_CHUNK)
        flows.append(
            Flow(
                src_ip=ctx.local_ip,
                dst_ip=dst,
                bytes_up=step.volume_bytes,
                protocol="dns",
                is_internal_dns=internal,
                tag=ctx.tag,
            )
        )
    ctx.billing.post_flows(flows, roaming=ctx.roaming)
    q1 = _settled_quota(ctx)

    billed_classes = decode_billed(q0 - q1, plan, ctx.scenario.rounding_bytes)
    internal_billed = 0 in billed_classes
    external_billed = 1 in billed_classes
    if internal_billed and external_billed:
        verdict = "all-billed"
    elif external_billed:
        verdict = "external-only-billed"
    elif internal_billed:
        verdict = "internal-only-billed"
    else:
        verdict = "none-billed"
    return {
        "scenario": "dns_metering",
        "context": ctx.context_name,
        "verdict": verdict,
        "internal_billed": internal_billed,
        "external_billed": external_billed,
        "billed_classes": sorted(billed_classes),
        "quota_before": q0,
        "quota_after": q1,
        "dns_ip": internal_ip,
        "dns_ip_class": classify_ip(internal_ip).value,
    }


def run_scenario_zero_rating(ctx: ScenarioContext) -> dict:
    """Legit zero-rated endpoint vs spoofed Host / spoofed SNI."""
    plan = TrafficClassPlan(classes={0, 1, 2}, unit_bytes=ctx.unit_bytes)
    names = sorted(ctx.scenario.zero_rated_names)
    target_name = ctx.params.get("target") or (names[0] if names else "app.snapchat.com")

    shapes = {
        0: dict(dst_ip=LEGIT_APP_IP, protocol="https", sni=target_name, host=None),
        1: dict(dst_ip=ATTACKER_IP, protocol="http", sni=None, host=target_name),
        2: dict(dst_ip=ATTACKER_IP, protocol="https", sni=target_name, host=None),
    }
    q0 = _settled_quota(ctx)
    flows: List[Flow] = []
    for step in encode_classes(plan):
        shape = shapes[step.class_nr]
        _pump(ctx, shape["dst_ip"], 443 if shape["protocol"] == "https" else 80,
              shape["protocol"], step.volume_bytes, HTTP_CHUNK)
        flows.append(
            Flow(
                src_ip=ctx.local_ip,
                dst_ip=shape["dst_ip"],
                bytes_up=step.volume_bytes,
                protocol=shape["protocol"],
                host=shape["host"],
                sni=shape["sni"],
                tag=ctx.tag,
            )
        )
    ctx.billing.post_flows(flows, roaming=ctx.roaming)
    q1 = _settled_quota(ctx)

    billed = decode_billed(q0 - q1, plan, ctx.scenario.rounding_bytes)
    return {
        "scenario": "zero_rating_freeride",
        "context": ctx.context_name,
        "target": target_name,
        "zero_rated": "yes" if 0 not in billed else "no",
        "spoof_http": "free" if 1 not in billed else "billed",
        "spoof_sni": "free" if 2 not in billed else "billed",
        "billed_classes": sorted(billed),
        "quota_before": q0,
        "quota_after": q1,
    }


def run_scenario_ip_config(ctx: ScenarioContext) -> dict:
    """Address class, roaming-path inference, and self-reachability."""
    address = ctx.local_ip
    klass = classify_ip(address)
    # ping + low-volume scan against self, through the boundary
    if ":" not in address:
        sock = ctx.boundary.socket(address, 0, "icmp")
        sock.send(64)
        for port in (22, 80, 443, 5555, 9080):
            scan = ctx.boundary.socket(address, port, "tcp")
            scan.send(60)
    mode = "HomeRouted" if ctx.operator.address_in_home_pool(address) else "LocalBreakout"
    reachable = ctx.operator.incoming_reachable(address)
    return {
        "scenario": "ip_config",
        "context": ctx.context_name,
        "address": address,
        "address_class": klass.value,
        "mode_inferred": mode,
        "incoming": "open" if reachable else "blocked",
    }
