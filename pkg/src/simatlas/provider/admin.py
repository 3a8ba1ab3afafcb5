"""Provider admin HTTP API.

GET /sims, POST /sims, DELETE /sims/{imsi}, GET /circuits,
GET /circuits/{id}/log?format=jsonl|gsmtap, POST /tokens (broker token
push), POST /reload (re-read the profile directory).
"""

from __future__ import annotations

import logging
from typing import Optional

from ..errors import AtlasError
from ..httpd import JsonHttpService, error_doc
from ..simcard import SimProfile
from .service import ProviderService

logger = logging.getLogger(__name__)

DEFAULT_ADMIN_PORT = 7817


class ProviderAdmin:
    def __init__(self, service: ProviderService, host: str = "127.0.0.1", port: int = 0,
                 profile_dir: Optional[str] = None):
        self.service = service
        self.profile_dir = profile_dir
        self.http = JsonHttpService("provider-admin", host=host, port=port)
        self.http.route("GET", r"/sims", self._get_sims)
        self.http.route("POST", r"/sims", self._post_sims)
        self.http.route("DELETE", r"/sims/(?P<imsi>\d+)", self._delete_sim)
        self.http.route("GET", r"/circuits", self._get_circuits)
        self.http.route("GET", r"/circuits/(?P<cid>[0-9a-fA-F-]+)/log", self._get_log)
        self.http.route("POST", r"/tokens", self._post_token)
        self.http.route("POST", r"/reload", self._post_reload)

    def start(self) -> None:
        self.http.start()

    def stop(self) -> None:
        self.http.stop()

    @property
    def url(self) -> str:
        return self.http.url

    def _get_sims(self, match, body, query):
        return 200, {"ok": True, "sims": [e.as_dict() for e in self.service.registry.entries()]}

    def _post_sims(self, match, body, query):
        try:
            profile = SimProfile.from_dict(body)
            imsi = self.service.register_sim(profile)
        except (AtlasError, KeyError, ValueError) as exc:
            code = getattr(exc, "code", "BadProfile")
            return 400, error_doc(code, str(exc))
        return 200, {"ok": True, "imsi": imsi}

    def _delete_sim(self, match, body, query):
        try:
            self.service.unregister_sim(match.group("imsi"))
        except AtlasError as exc:
            return 409, error_doc(exc.code, exc.message)
        return 200, {"ok": True}

    def _get_circuits(self, match, body, query):
        circuits = [
            {
                "circuit_id": c.circuit_id,
                "imsi": c.imsi,
                "opened_wall": c.opened_wall,
                "closed_wall": c.closed_wall,
                "close_reason": c.close_reason,
                "log_records": len(c.log),
            }
            for c in self.service.circuits()
        ]
        return 200, {"ok": True, "circuits": circuits}

    def _get_log(self, match, body, query):
        fmt = query.get("format", "jsonl")
        try:
            payload = self.service.export_apdu_log(match.group("cid"), fmt)
        except AtlasError as exc:
            status = 404 if exc.code == "UnknownCircuit" else 400
            return status, error_doc(exc.code, exc.message)
        content_type = "application/octet-stream" if fmt.startswith("gsmtap") else "application/x-ndjson"
        return 200, payload, content_type

    def _post_token(self, match, body, query):
        try:
            self.service.push_token(
                imsi=body["imsi"],
                token=bytes.fromhex(body["token"]),
                circuit_id=body.get("circuit_id"),
            )
        except (KeyError, ValueError) as exc:
            return 400, error_doc("BadRequest", str(exc))
        return 200, {"ok": True}

    def _post_reload(self, match, body, query):
        if not self.profile_dir:
            return 400, error_doc("NoProfileDir", "service started without a profile directory")
        added = self.service.registry.load_directory(self.profile_dir)
        self.service._notify_registry_change()
        return 200, {"ok": True, "added": added}
