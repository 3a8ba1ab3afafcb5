"""Quota checking against the billing endpoint.

Billing is not real time: with settle=True the checker polls until the
CDR backlog is empty and two consecutive reads agree, which is the
desk-scale version of "wait for the operator app to catch up".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..clock import Clock, SystemClock
from ..errors import AtlasError
from ..metering.httpapi import BillingClient


class SettleTimeout(AtlasError):
    code = "SettleTimeout"


@dataclass(frozen=True)
class QuotaSnapshot:
    remaining_bytes: int
    plan: str
    as_of: float


def check_quota(
    endpoint_url: str,
    clock: Optional[Clock] = None,
    settle: bool = False,
    poll_interval_s: float = 0.05,
    settle_timeout_s: float = 120.0,
) -> QuotaSnapshot:
    clock = clock or SystemClock()
    client = BillingClient(endpoint_url, clock=clock)
    doc = client.quota()
    if settle:
        deadline = clock.now() + settle_timeout_s
        last = None
        while True:
            settled = doc.get("pending_batches", 0) == 0 and last == doc["remaining_bytes"]
            if settled:
                break
            if clock.now() >= deadline:
                raise SettleTimeout(f"quota did not settle within {settle_timeout_s}s")
            last = doc["remaining_bytes"]
            clock.sleep(poll_interval_s)
            doc = client.quota()
    return QuotaSnapshot(
        remaining_bytes=int(doc["remaining_bytes"]),
        plan=doc.get("plan", ""),
        as_of=float(doc.get("as_of", 0.0)),
    )
