from __future__ import annotations

import os
import signal
import subprocess
import threading
import time
from pathlib import Path
from typing import Sequence

from .core import (
    DEFAULT_STREAM_CAP,
    GRACE_SECONDS,
    MODE_FLAGS,
    TIMEOUT_EXIT_CODE,
    ConfigurationError,
    ExecutionRequest,
    ExecutionResult,
    new_artifacts,
    snapshot,
)


class _Drain(threading.Thread):
    """Read a pipe to EOF, keeping the first ``cap + 1`` bytes."""

    def __init__(self, pipe, cap: int):
        super().__init__(daemon=True)
        self.pipe = pipe
        self.cap = cap
        self.chunks: list[bytes] = []
        self.kept = 0

    def run(self):
        while True:
            chunk = self.pipe.read1(65536) if hasattr(self.pipe, "read1") else self.pipe.read(65536)
            if not chunk:
                break
            room = self.cap + 1 - self.kept
            if room > 0:
                self.chunks.append(chunk[:room])
                self.kept += min(len(chunk), room)
        self.pipe.close()

    @property
    def data(self) -> bytes:
        return b"".join(self.chunks)


class LocalBackend:
    """Runs a configured executable as ``exe -i FILE [mode flag] [extra args]``."""

    name = "local"

    def __init__(self, moose_exe: str | Sequence[str] | None, stream_cap: int = DEFAULT_STREAM_CAP):
        if not moose_exe:
            raise ConfigurationError("moose_exe is not configured")
        self.argv = [moose_exe] if isinstance(moose_exe, (str, os.PathLike)) else list(moose_exe)
        self.argv = [str(a) for a in self.argv]
        exe = Path(self.argv[0])
        if not (exe.is_file() and os.access(exe, os.X_OK)):
            raise ConfigurationError(f"executable not found: {self.argv[0]}")
        self.stream_cap = stream_cap

    def command(self, request: ExecutionRequest) -> list[str]:
        return [
            *self.argv,
            "-i",
            str(request.input_path.resolve()),
            *MODE_FLAGS[request.mode],
            *request.extra_args,
        ]

    def execute(self, request: ExecutionRequest) -> ExecutionResult:
        cwd = request.cwd
        before = snapshot(cwd)
        start = time.monotonic()
        proc = subprocess.Popen(
            self.command(request),
            cwd=cwd,
            stdin=subprocess.DEVNULL,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            start_new_session=True,
        )
        readers = [_Drain(proc.stdout, self.stream_cap), _Drain(proc.stderr, self.stream_cap)]
        for r in readers:
            r.start()
        timed_out = False
        try:
            exit_code = proc.wait(timeout=request.time_limit)
        except subprocess.TimeoutExpired:
            timed_out = True
            try:
                os.killpg(proc.pid, signal.SIGKILL)
            except ProcessLookupError:
                pass
            proc.wait()
            exit_code = TIMEOUT_EXIT_CODE
        for r in readers:
            r.join(GRACE_SECONDS)
        duration = time.monotonic() - start
        out, err = readers[0].data, readers[1].data
        cap = self.stream_cap
        truncated = len(out) > cap or len(err) > cap
        return ExecutionResult(
            exit_code=exit_code,
            timed_out=timed_out,
            stdout=out[:cap].decode("utf-8", errors="replace"),
            stderr=err[:cap].decode("utf-8", errors="replace"),
            artifacts=new_artifacts(before, cwd, request.mode, request.input_path),
            duration=duration,
            backend=self.name,
            truncated=truncated,
        )
