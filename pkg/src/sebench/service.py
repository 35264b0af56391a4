"""HTTP service exposing the prediction backends and the benchmark fixtures.

JSON over plain HTTP:

    GET  /backends            -> {"backends": [...names...]}
    POST /predict             {"backend", "sentence", "top_k"?} -> PredictionSet
    GET  /examples            -> the bundled masked-sentence benchmark
    POST /report              BenchmarkResult JSON -> rendered Markdown

All library state is immutable after startup; requests are handled
concurrently by a threading server.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

from . import mlm
from .mlm import BenchmarkError, BenchmarkResult, MlmBackend

DEFAULT_LISTEN = "127.0.0.1:8342"
LISTEN_ENV_VAR = "SEBENCH_LISTEN"


class ServiceError(Exception):
    pass


@dataclass
class ServiceConfig:
    listen: str = DEFAULT_LISTEN
    backends: dict[str, MlmBackend] = field(default_factory=dict)
    top_k: int = 5
    cors_allow: tuple[str, ...] = ("*",)
    examples_path: Optional[str] = None

    def __post_init__(self) -> None:
        if os.environ.get(LISTEN_ENV_VAR):
            self.listen = os.environ[LISTEN_ENV_VAR]
        if not self.backends:
            raise ServiceError("at least one backend must be configured")
        if self.top_k < 1:
            raise ServiceError(f"top_k must be >= 1, got {self.top_k}")

    @property
    def address(self) -> tuple[str, int]:
        host, _, port = self.listen.rpartition(":")
        if not host or not port.isdigit():
            raise ServiceError(
                f"listen address must look like host:port, got {self.listen!r}")
        return host, int(port)


def _make_handler(config: ServiceConfig):
    examples = mlm.load_examples(config.examples_path)
    examples_payload = [e.as_dict() for e in examples]

    class Handler(BaseHTTPRequestHandler):
        server_version = "sebench"

        def log_message(self, fmt, *args):  # keep test output quiet
            pass

        # -- plumbing ----------------------------------------------------
        def _cors_origin(self) -> Optional[str]:
            origin = self.headers.get("Origin")
            if "*" in config.cors_allow:
                return "*"
            if origin and origin in config.cors_allow:
                return origin
            return None

        def _send(self, status: int, payload, content_type="application/json"):
            if isinstance(payload, (dict, list)):
                body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
            else:
                body = str(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", f"{content_type}; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            origin = self._cors_origin()
            if origin:
                self.send_header("Access-Control-Allow-Origin", origin)
            self.end_headers()
            self.wfile.write(body)

        def _error(self, status: int, message: str):
            self._send(status, {"error": message})

        def _read_json(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length) if length else b""
            try:
                return json.loads(raw.decode("utf-8")) if raw else {}
            except ValueError as exc:
                raise ServiceError(f"request body is not valid JSON: {exc}")

        # -- routes ------------------------------------------------------
        def do_OPTIONS(self):
            self.send_response(204)
            origin = self._cors_origin()
            if origin:
                self.send_header("Access-Control-Allow-Origin", origin)
                self.send_header("Access-Control-Allow-Methods",
                                 "GET, POST, OPTIONS")
                self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_GET(self):
            if self.path == "/backends":
                self._send(200, {"backends": sorted(config.backends)})
            elif self.path == "/examples":
                self._send(200, examples_payload)
            else:
                self._error(404, f"no such endpoint: {self.path}")

        def do_POST(self):
            try:
                body = self._read_json()
            except ServiceError as exc:
                self._error(400, str(exc))
                return
            if self.path == "/predict":
                self._predict(body)
            elif self.path == "/report":
                self._report(body)
            else:
                self._error(404, f"no such endpoint: {self.path}")

        def _predict(self, body: dict):
            name = body.get("backend")
            if name not in config.backends:
                self._error(404, f"unknown backend: {name!r}; "
                                 f"available: {sorted(config.backends)}")
                return
            sentence = body.get("sentence")
            if not isinstance(sentence, str):
                self._error(400, "field 'sentence' (string) is required")
                return
            try:
                mlm.validate_mask_sentence(sentence)
            except BenchmarkError as exc:
                self._error(400, str(exc))
                return
            top_k = body.get("top_k", config.top_k)
            if not isinstance(top_k, int) or top_k < 1:
                self._error(400, "field 'top_k' must be a positive integer")
                return
            try:
                ps = config.backends[name].predict(sentence, top_k)
            except Exception as exc:
                self._error(502, f"backend {name} failed: {exc}")
                return
            self._send(200, ps.as_dict())

        def _report(self, body: dict):
            try:
                result = BenchmarkResult.from_dict(body)
                rendered = mlm.render_report(result, fmt="markdown")
            except (BenchmarkError, KeyError, TypeError, ValueError) as exc:
                self._error(400, f"cannot render report: {exc}")
                return
            self._send(200, rendered, content_type="text/markdown")

    return Handler


def make_server(config: ServiceConfig) -> ThreadingHTTPServer:
    """Bind the service; callers drive serve_forever/shutdown themselves."""
    return ThreadingHTTPServer(config.address, _make_handler(config))


def serve(config: ServiceConfig) -> None:
    """Run the service until interrupted."""
    server = make_server(config)
    host, port = server.server_address[0], server.server_address[1]
    print(f"sebench service listening on http://{host}:{port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        server.server_close()


class BackgroundService:
    """Context manager running the service on a thread (used by tests/CLI)."""

    def __init__(self, config: ServiceConfig):
        self.server = make_server(config)
        self.thread = threading.Thread(
            target=self.server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self) -> "BackgroundService":
        self.thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self.server.shutdown()
        self.server.server_close()
        self.thread.join(timeout=5)
