"""JSON-RPC 2.0 over HTTP POST: a client backend and a reference server.

Methods are ``moose.check_input``, ``moose.mesh_only`` and ``moose.run_input``.
Params::

    {"input_name": "current.i", "input_b64": "...", "time_limit": 60.0,
     "extra_args": []}

Result::

    {"exit_code": 0, "timed_out": false, "stdout_b64": "...", "stderr_b64": "...",
     "truncated": false, "artifacts": [{"kind": "log", "path": "..."}],
     "duration": 0.1}

Artifact paths in a result are opaque references on the server side.
"""

from __future__ import annotations

import base64
import itertools
import json
import shutil
import tempfile
import threading
import urllib.error
import urllib.request
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .core import (
    GRACE_SECONDS,
    Artifact,
    BackendUnavailableError,
    ConfigurationError,
    ExecutionError,
    ExecutionRequest,
    ExecutionResult,
)

METHOD_FOR_MODE = {
    "check_input": "moose.check_input",
    "mesh_only": "moose.mesh_only",
    "run": "moose.run_input",
}
MODE_FOR_METHOD = {v: k for k, v in METHOD_FOR_MODE.items()}

PARSE_ERROR = -32700
INVALID_REQUEST = -32600
METHOD_NOT_FOUND = -32601
INVALID_PARAMS = -32602
INTERNAL_ERROR = -32603


class RemoteError(ExecutionError):
    def __init__(self, code: int, message: str):
        super().__init__(f"remote error {code}: {message}")
        self.code = code


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def encode_result(result: ExecutionResult) -> dict:
    return {
        "exit_code": result.exit_code,
        "timed_out": result.timed_out,
        "stdout_b64": _b64(result.stdout.encode("utf-8")),
        "stderr_b64": _b64(result.stderr.encode("utf-8")),
        "truncated": result.truncated,
        "artifacts": [a.to_dict() for a in result.artifacts],
        "duration": result.duration,
    }


def decode_result(payload: dict, backend: str = "remote") -> ExecutionResult:
    return ExecutionResult(
        exit_code=int(payload["exit_code"]),
        timed_out=bool(payload["timed_out"]),
        stdout=base64.b64decode(payload["stdout_b64"]).decode("utf-8", errors="replace"),
        stderr=base64.b64decode(payload["stderr_b64"]).decode("utf-8", errors="replace"),
        artifacts=tuple(Artifact(a["kind"], a["path"]) for a in payload.get("artifacts", ())),
        duration=float(payload.get("duration", 0.0)),
        backend=backend,
        truncated=bool(payload.get("truncated", False)),
    )


class RemoteBackend:
    """Client side: one blocking request per call."""

    name = "remote"

    def __init__(self, url: str):
        if not url:
            raise ConfigurationError("remote_url is not configured")
        self.url = url
        self._ids = itertools.count(1)

    def call(self, method: str, params: dict, timeout: float) -> dict:
        body = json.dumps(
            {"jsonrpc": "2.0", "id": next(self._ids), "method": method, "params": params}
        ).encode("utf-8")
        req = urllib.request.Request(
            self.url, data=body, headers={"Content-Type": "application/json"}, method="POST"
        )
        try:
            with urllib.request.urlopen(req, timeout=timeout) as resp:
                reply = json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, OSError) as exc:
            raise BackendUnavailableError(f"cannot reach {self.url}: {exc}") from exc
        if "error" in reply:
            raise RemoteError(reply["error"].get("code", INTERNAL_ERROR), reply["error"].get("message", ""))
        return reply["result"]

    def execute(self, request: ExecutionRequest) -> ExecutionResult:
        params = {
            "input_name": request.input_path.name,
            "input_b64": _b64(request.input_path.read_bytes()),
            "time_limit": request.time_limit,
            "extra_args": list(request.extra_args),
        }
        payload = self.call(
            METHOD_FOR_MODE[request.mode], params, timeout=request.time_limit + GRACE_SECONDS
        )
        return decode_result(payload, self.name)


class ReferenceServer:
    """Serve any backend over JSON-RPC; each request runs in its own scratch directory.

    Usable as a context manager; ``url`` is valid once started.
    """

    def __init__(self, backend, host: str = "127.0.0.1", port: int = 0):
        self.backend = backend
        self.root = Path(tempfile.mkdtemp(prefix="hitcheck-server-"))
        self._counter = itertools.count(1)
        self._lock = threading.Lock()
        handler = self._make_handler()
        self.httpd = ThreadingHTTPServer((host, port), handler)
        self.httpd.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}/"

    def start(self) -> "ReferenceServer":
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def close(self) -> None:
        if self._thread is not None:
            self.httpd.shutdown()
            self._thread.join()
            self._thread = None
        self.httpd.server_close()
        shutil.rmtree(self.root, ignore_errors=True)

    def __enter__(self) -> "ReferenceServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.close()

    def handle(self, message) -> dict | None:
        """Process one decoded JSON-RPC message; ``None`` for notifications."""
        if not isinstance(message, dict) or message.get("jsonrpc") != "2.0" or "method" not in message:
            return _error(None, INVALID_REQUEST, "invalid request")
        msg_id = message.get("id")
        method = message["method"]
        if method not in MODE_FOR_METHOD:
            return _error(msg_id, METHOD_NOT_FOUND, f"method not found: {method}")
        params = message.get("params") or {}
        try:
            name = Path(str(params.get("input_name", "input.i"))).name or "input.i"
            content = base64.b64decode(params["input_b64"], validate=True)
            time_limit = float(params.get("time_limit", 60.0))
            extra = [str(a) for a in params.get("extra_args", [])]
        except (KeyError, ValueError, TypeError) as exc:
            return _error(msg_id, INVALID_PARAMS, f"invalid params: {exc}")
        with self._lock:
            workdir = self.root / f"job-{next(self._counter):05d}"
        workdir.mkdir()
        input_path = workdir / name
        input_path.write_bytes(content)
        try:
            request = ExecutionRequest(
                input_path, MODE_FOR_METHOD[method], time_limit, workdir, tuple(extra)
            )
            result = self.backend.execute(request)
        except ValueError as exc:
            return _error(msg_id, INVALID_PARAMS, str(exc))
        except Exception as exc:  # surfaced to the client as a JSON-RPC error
            return _error(msg_id, INTERNAL_ERROR, f"{type(exc).__name__}: {exc}")
        if msg_id is None:
            return None
        return {"jsonrpc": "2.0", "id": msg_id, "result": encode_result(result)}

    def _make_handler(self):
        server = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                raw = self.rfile.read(length)
                try:
                    message = json.loads(raw.decode("utf-8"))
                except (UnicodeDecodeError, json.JSONDecodeError):
                    reply = _error(None, PARSE_ERROR, "parse error")
                else:
                    if isinstance(message, list):
                        replies = [r for r in map(server.handle, message) if r is not None]
                        reply = replies if message else _error(None, INVALID_REQUEST, "empty batch")
                    else:
                        reply = server.handle(message)
                if reply is None or reply == []:
                    self.send_response(204)
                    self.end_headers()
                    return
                body = json.dumps(reply).encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, format, *args):
                pass

        return Handler


def _error(msg_id, code: int, message: str) -> dict:
    return {"jsonrpc": "2.0", "id": msg_id, "error": {"code": code, "message": message}}
