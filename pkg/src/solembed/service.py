"""HTTP JSON API over a loaded store.

Endpoints:
    POST /api/validate       {"source": "...", "top_k"?: int} -> ValidationReport
    GET  /api/stats          corpus counts, version, dim, thresholds
    GET  /api/bugs           bug catalog (ids, categories, descriptions)
    POST /api/corpus/ingest  {"dir": "..."}; requires the admin token header

Validation requests are read-only snapshot consumers and serve fine while
an ingest batch is running. Every non-2xx body is an ApiError object:
{"code": ..., "message": ..., "details"?: ...}.
"""

from __future__ import annotations

import json
import os
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .detectors import validate_contract
from .ingestion import DirectorySource, update_model
from .similarity import MatrixCache, Thresholds
from .store import Store

MAX_SOURCE_BYTES = 1 << 20  # request bodies above this are rejected with 413
ADMIN_TOKEN_ENV = "SOLEMBED_ADMIN_TOKEN"
ADMIN_TOKEN_HEADER = "X-Admin-Token"


class _ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, details=None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.details = details


def _make_handler(store: Store, thresholds: Thresholds, admin_token: str | None,
                  cache: MatrixCache, max_source_bytes: int, quiet: bool):

    ingest_lock = threading.Lock()  # one admin ingest at a time

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
            if not quiet:
                super().log_message(fmt, *args)

        # --- plumbing ---------------------------------------------------

        def _send_json(self, status: int, payload: dict) -> None:
            body = json.dumps(payload, sort_keys=True).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Headers",
                             f"Content-Type, {ADMIN_TOKEN_HEADER}")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.end_headers()
            self.wfile.write(body)

        def _send_error(self, err: _ApiError) -> None:
            payload = {"code": err.code, "message": err.message}
            if err.details is not None:
                payload["details"] = err.details
            self._send_json(err.status, payload)

        def _read_json_body(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            if length > max_source_bytes:
                # drain (bounded) so the client can finish writing and
                # actually see the 413 instead of a broken pipe
                remaining = min(length, 8 * max_source_bytes)
                while remaining > 0:
                    chunk = self.rfile.read(min(remaining, 65536))
                    if not chunk:
                        break
                    remaining -= len(chunk)
                self.close_connection = True
                raise _ApiError(413, "too_large",
                                f"request body exceeds {max_source_bytes} bytes")
            raw = self.rfile.read(length) if length else b""
            try:
                payload = json.loads(raw.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError):
                raise _ApiError(400, "bad_request", "body is not valid JSON")
            if not isinstance(payload, dict):
                raise _ApiError(400, "bad_request", "body must be a JSON object")
            return payload

        # --- endpoints -----------------------------------------------------

        def do_OPTIONS(self):  # CORS preflight for the web UI
            self._send_json(204, {})

        def do_GET(self):
            try:
                if self.path == "/api/stats":
                    stats = store.stats()
                    stats["clone_threshold"] = thresholds.clone_threshold
                    stats["bug_threshold"] = thresholds.bug_threshold
                    self._send_json(200, stats)
                elif self.path == "/api/bugs":
                    catalog = [{"bug_id": b.bug_id, "category": b.category,
                                "description": b.description,
                                "provenance": b.provenance,
                                "statement_count": len(b.statement_streams)}
                               for b in store.bug_records]
                    self._send_json(200, {"bugs": catalog})
                else:
                    raise _ApiError(404, "not_found", f"no route {self.path}")
            except _ApiError as err:
                self._send_error(err)

        def do_POST(self):
            try:
                if self.path == "/api/validate":
                    self._validate()
                elif self.path == "/api/corpus/ingest":
                    self._ingest()
                else:
                    raise _ApiError(404, "not_found", f"no route {self.path}")
            except _ApiError as err:
                self._send_error(err)
            except Exception as err:  # keep the worker thread alive
                self._send_error(_ApiError(500, "internal_error", str(err)))

        def _validate(self) -> None:
            payload = self._read_json_body()
            source = payload.get("source")
            if not isinstance(source, str):
                raise _ApiError(400, "bad_request",
                                'field "source" must be a string')
            if len(source.encode("utf-8")) > max_source_bytes:
                raise _ApiError(413, "too_large",
                                f"source exceeds {max_source_bytes} bytes")
            top_k = payload.get("top_k", 5)
            if not isinstance(top_k, int) or top_k < 1:
                raise _ApiError(400, "bad_request",
                                'field "top_k" must be a positive integer')
            report = validate_contract(source, store, thresholds,
                                       top_k=top_k, cache=cache)
            self._send_json(200, report.to_dict())

        def _ingest(self) -> None:
            if admin_token is None:
                raise _ApiError(401, "unauthorized",
                                "admin endpoint disabled: no admin token "
                                f"configured (set {ADMIN_TOKEN_ENV})")
            if self.headers.get(ADMIN_TOKEN_HEADER) != admin_token:
                raise _ApiError(401, "unauthorized",
                                f"missing or wrong {ADMIN_TOKEN_HEADER} header")
            payload = self._read_json_body()
            directory = payload.get("dir")
            if not isinstance(directory, str) or not directory:
                raise _ApiError(400, "bad_request",
                                'field "dir" must be a directory path')
            if not os.path.isdir(directory):
                raise _ApiError(400, "bad_request",
                                f"{directory} is not a directory")
            with ingest_lock:
                delta = update_model(DirectorySource(directory), store)
            self._send_json(200, delta.to_dict())

    return Handler


class Service:
    """Threaded HTTP server bound to a store. start() returns immediately;
    serve_forever() blocks (CLI use)."""

    def __init__(self, store: Store, thresholds: Thresholds = Thresholds(),
                 host: str = "127.0.0.1", port: int = 8080,
                 admin_token: str | None = None,
                 max_source_bytes: int = MAX_SOURCE_BYTES,
                 quiet: bool = True):
        if admin_token is None:
            admin_token = os.environ.get(ADMIN_TOKEN_ENV)
        self.store = store
        self.cache = MatrixCache()
        handler = _make_handler(store, thresholds, admin_token, self.cache,
                                max_source_bytes, quiet)
        self.server = ThreadingHTTPServer((host, port), handler)
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self.server.server_address[1]

    def start(self) -> None:
        self._thread = threading.Thread(target=self.server.serve_forever,
                                        daemon=True)
        self._thread.start()

    def serve_forever(self) -> None:
        self.server.serve_forever()

    def stop(self) -> None:
        self.server.shutdown()
        self.server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None
