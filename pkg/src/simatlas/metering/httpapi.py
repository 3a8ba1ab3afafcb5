"""Billing simulator HTTP surface and its client.

GET /quota       -> {"ok", "remaining_bytes", "plan", "as_of", "pending_batches"}
POST /flows      -> {"ok", "batch_id"}   body: {"roaming": bool, "flows": [...]}
GET /cdrs        -> {"ok", "cdrs": [...]}

The probe's quota checker only sees this API, keeping the seam where
real per-operator adapters would plug in.
"""

from __future__ import annotations

from typing import List, Optional

import requests

from ..clock import Clock, SystemClock
from ..errors import AtlasError
from ..httpd import JsonHttpService
from .billing import BillingSimulator, Flow

DEFAULT_BILLING_PORT = 7900


class BillingHttp:
    def __init__(self, simulator: BillingSimulator, host: str = "127.0.0.1", port: int = 0):
        self.simulator = simulator
        self.http = JsonHttpService("billing", host=host, port=port)
        self.http.route("GET", r"/quota", self._get_quota)
        self.http.route("POST", r"/flows", self._post_flows)
        self.http.route("GET", r"/cdrs", self._get_cdrs)

    def start(self) -> None:
        self.http.start()

    def stop(self) -> None:
        self.http.stop()

    @property
    def url(self) -> str:
        return self.http.url

    def _get_quota(self, match, body, query):
        return 200, {
            "ok": True,
            "remaining_bytes": self.simulator.quota_bytes(),
            "plan": self.simulator.scenario.name,
            "as_of": self.simulator.clock.wall(),
            "pending_batches": self.simulator.pending_batches(),
        }

    def _post_flows(self, match, body, query):
        flows = [Flow.from_dict(d) for d in body.get("flows", [])]
        batch_id = self.simulator.post_flows(flows, roaming=bool(body.get("roaming", False)))
        return 200, {"ok": True, "batch_id": batch_id}

    def _get_cdrs(self, match, body, query):
        return 200, {"ok": True, "cdrs": [c.as_dict() for c in self.simulator.cdrs()]}


class EndpointUnreachable(AtlasError):
    code = "EndpointUnreachable"


class BillingClient:
    """HTTP client for the simulator (or a real operator adapter with
    the same surface)."""

    def __init__(self, base_url: str, clock: Optional[Clock] = None, timeout_s: float = 10.0):
        self.base_url = base_url.rstrip("/")
        self.clock = clock or SystemClock()
        self.timeout_s = timeout_s

    def _get(self, path: str) -> dict:
        try:
            resp = requests.get(self.base_url + path, timeout=self.timeout_s)
            resp.raise_for_status()
            return resp.json()
        except requests.RequestException as exc:
            raise EndpointUnreachable(f"billing endpoint failed: {exc}") from exc

    def quota(self) -> dict:
        return self._get("/quota")

    def cdrs(self) -> List[dict]:
        return self._get("/cdrs")["cdrs"]

    def post_flows(self, flows: List[Flow], roaming: bool = False) -> int:
        try:
            resp = requests.post(
                self.base_url + "/flows",
                json={"roaming": roaming, "flows": [f.as_dict() for f in flows]},
                timeout=self.timeout_s,
            )
            resp.raise_for_status()
            return resp.json()["batch_id"]
        except requests.RequestException as exc:
            raise EndpointUnreachable(f"billing endpoint failed: {exc}") from exc
