"""Minimal JSON-over-HTTP service plumbing shared by the provider
admin API, the billing simulator, and the management broker.

Routes are (method, compiled regex) -> fn(match, body) returning either
(status, dict) for JSON, (status, bytes, content_type) for raw bodies,
or a generator of SSE strings for event streams.
"""

from __future__ import annotations

import json
import logging
import re
import socket
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable, Iterable, List, Optional, Tuple
from urllib.parse import parse_qs, urlparse

logger = logging.getLogger(__name__)


class SseStream:
    """Marker wrapper: route handlers return this for event streams."""

    def __init__(self, events: Iterable[str]):
        self.events = events


class JsonHttpService:
    def __init__(self, name: str, host: str = "127.0.0.1", port: int = 0):
        self.name = name
        self._routes: List[Tuple[str, re.Pattern, Callable]] = []
        self._host = host
        self._requested_port = port
        self._server: Optional[ThreadingHTTPServer] = None
        self._thread: Optional[threading.Thread] = None

    def route(self, method: str, pattern: str, fn: Callable) -> None:
        self._routes.append((method.upper(), re.compile(pattern + r"$"), fn))

    @property
    def port(self) -> int:
        assert self._server is not None, "service not started"
        return self._server.server_address[1]

    @property
    def url(self) -> str:
        return f"http://{self._host}:{self.port}"

    def start(self) -> None:
        service = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, fmt, *args):
                logger.debug("%s %s", service.name, fmt % args)

            def _dispatch(self, method):
                parsed = urlparse(self.path)
                query = {k: v[-1] for k, v in parse_qs(parsed.query).items()}
                body = {}
                length = int(self.headers.get("Content-Length") or 0)
                if length:
                    try:
                        body = json.loads(self.rfile.read(length) or b"{}")
                    except ValueError:
                        self._send_json(400, {"ok": False, "error": {"code": "BadRequest", "message": "invalid JSON body"}})
                        return
                for route_method, pattern, fn in service._routes:
                    if route_method != method:
                        continue
                    match = pattern.match(parsed.path)
                    if not match:
                        continue
                    try:
                        result = fn(match, body, query)
                    except Exception:
                        logger.exception("%s handler failed for %s", service.name, self.path)
                        self._send_json(500, {"ok": False, "error": {"code": "InternalError", "message": "handler failed"}})
                        return
                    self._send_result(result)
                    return
                self._send_json(404, {"ok": False, "error": {"code": "NotFound", "message": parsed.path}})

            def _send_result(self, result):
                if isinstance(result, SseStream):
                    self.send_response(200)
                    self.send_header("Content-Type", "text/event-stream")
                    self.send_header("Cache-Control", "no-cache")
                    self.send_header("Connection", "close")
                    self.end_headers()
                    try:
                        for chunk in result.events:
                            self.wfile.write(chunk.encode())
                            self.wfile.flush()
                    except (BrokenPipeError, ConnectionResetError):
                        pass
                    finally:
                        closer = getattr(result.events, "close", None)
                        if closer:
                            closer()
                    return
                if len(result) == 3:
                    status, payload, content_type = result
                    self.send_response(status)
                    self.send_header("Content-Type", content_type)
                    self.send_header("Content-Length", str(len(payload)))
                    self.end_headers()
                    self.wfile.write(payload)
                    return
                status, doc = result
                self._send_json(status, doc)

            def _send_json(self, status, doc):
                payload = json.dumps(doc).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def do_GET(self):
                self._dispatch("GET")

            def do_POST(self):
                self._dispatch("POST")

            def do_DELETE(self):
                self._dispatch("DELETE")

        self._server = ThreadingHTTPServer((self._host, self._requested_port), Handler)
        self._server.daemon_threads = True
        self._thread = threading.Thread(target=self._server.serve_forever, name=f"http-{self.name}", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        if self._server:
            self._server.shutdown()
            self._server.server_close()
            self._server = None


def error_doc(code: str, message: str, retry_after: Optional[float] = None) -> dict:
    err = {"code": code, "message": message}
    if retry_after is not None:
        err["retry_after"] = retry_after
    return {"ok": False, "error": err}
