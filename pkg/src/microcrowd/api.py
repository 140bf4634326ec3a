"""HTTP boundary over the orchestrator.

Thin by design: authenticate, parse, dispatch, serialize. Domain meaning
lives behind Orchestrator methods; this module maps wire shapes and status
codes, nothing else. Every response body is canonical JSON, so clients can
re-serialize what they received and get the transmitted bytes back.
"""

from __future__ import annotations

import re
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .errors import AuthError, BadRequest, ServiceError
from .service import Orchestrator
from .values import canonicalize, parse_value

__all__ = ["ApiHandler", "make_server"]

# method, pattern, handler attribute, auth role
_ROUTES = [
    ("POST", re.compile(r"^/projects$"), "_create_project", "client"),
    ("GET", re.compile(r"^/projects/([^/]+)/status$"), "_status", "client"),
    ("GET", re.compile(r"^/projects/([^/]+)/bundle$"), "_bundle", "client"),
    ("GET", re.compile(r"^/metrics/([^/]+)$"), "_metrics", "client"),
    ("POST", re.compile(r"^/workers$"), "_register", "enroll"),
    ("POST", re.compile(r"^/workers/([^/]+)/fetch$"), "_fetch", "worker"),
    ("POST", re.compile(r"^/microtasks/([^/]+)/submit$"), "_submit", "worker"),
    ("POST", re.compile(r"^/microtasks/([^/]+)/skip$"), "_skip", "worker"),
]


class ApiHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    disable_nagle_algorithm = True  # headers and body flush as separate writes

    @property
    def orch(self) -> Orchestrator:
        return self.server.orch  # type: ignore[attr-defined]

    # --- plumbing ---------------------------------------------------------------

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        pass

    def _send(self, status: int, doc) -> None:
        payload = canonicalize(doc)
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self._cors()
        self.end_headers()
        self.wfile.write(payload)

    def _cors(self) -> None:
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Authorization, Content-Type")

    def _read_body(self):
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return {}
        try:
            return parse_value(raw)
        except ValueError as exc:
            raise BadRequest(f"request body is not valid JSON: {exc}") from None

    def _bearer(self) -> str | None:
        header = self.headers.get("Authorization", "")
        if header.startswith("Bearer "):
            return header[len("Bearer "):]
        return None

    def _authenticate(self, role: str):
        token = self._bearer()
        if role in ("client", "enroll"):
            allowed = (
                self.orch.config.client_tokens
                if role == "client"
                else self.orch.config.worker_tokens
            )
            # an empty token list leaves that role open (local/dev mode)
            if allowed and token not in allowed:
                raise AuthError("missing or invalid bearer token")
            return None
        for worker in self.orch.workers.values():
            if worker.token == token:
                return worker
        raise AuthError("worker operations require the token issued at registration")

    # --- dispatch ----------------------------------------------------------------

    def _handle(self, method: str) -> None:
        path = self.path.split("?", 1)[0]
        try:
            body = self._read_body() if method == "POST" else None
            for verb, pattern, name, role in _ROUTES:
                if verb != method:
                    continue
                match = pattern.match(path)
                if match is None:
                    continue
                actor = self._authenticate(role)
                status, doc = getattr(self, name)(match, body, actor)
                self._send(status, doc)
                return
            self._send(404, {"error": "UnknownRoute", "message": f"no route {method} {path}"})
        except ServiceError as err:
            self._send(err.http_status, {"error": err.code, "message": err.message})
        except Exception:  # noqa: BLE001 - last-resort boundary
            self._send(500, {"error": "Internal", "message": "unexpected server error"})

    def do_GET(self):  # noqa: N802 - stdlib naming
        self._handle("GET")

    def do_POST(self):  # noqa: N802
        self._handle("POST")

    def do_OPTIONS(self):  # noqa: N802
        self.send_response(204)
        self.send_header("Content-Length", "0")
        self._cors()
        self.end_headers()

    # --- routes ---------------------------------------------------------------------

    def _create_project(self, match, body, actor):
        return 201, self.orch.create_project(body)

    def _status(self, match, body, actor):
        return 200, self.orch.status_report(match.group(1))

    def _bundle(self, match, body, actor):
        return 200, self.orch.bundle_doc(match.group(1))

    def _metrics(self, match, body, actor):
        return 200, self.orch.metrics(match.group(1))

    def _register(self, match, body, actor):
        if not isinstance(body, dict):
            raise BadRequest("registration body must be an object")
        handle = body.get("handle", "")
        if not isinstance(handle, str):
            raise BadRequest("handle must be a string")
        return 201, self.orch.register_worker(handle)

    def _fetch(self, match, body, actor):
        if match.group(1) != actor.id:
            raise AuthError("token does not belong to the worker in the path")
        result = self.orch.fetch(actor.id)
        if result["microtask"] is None:
            return 200, {"noWork": True}
        return 200, {"noWork": False, "microtask": result["microtask"]}

    def _submit(self, match, body, actor):
        return 200, self.orch.submit(actor.id, match.group(1), body)

    def _skip(self, match, body, actor):
        return 200, self.orch.skip(actor.id, match.group(1))


def make_server(orch: Orchestrator) -> ThreadingHTTPServer:
    """Bind per config.listen_address; port 0 picks a free port."""
    host, _, port_text = orch.config.listen_address.rpartition(":")
    try:
        port = int(port_text)
    except ValueError:
        raise ValueError(f"listen address {orch.config.listen_address!r} needs host:port") from None
    server = ThreadingHTTPServer((host or "127.0.0.1", port), ApiHandler)
    server.daemon_threads = True
    server.orch = orch  # type: ignore[attr-defined]
    return server
