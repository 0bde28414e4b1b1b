from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

MODES = ("check_input", "mesh_only", "run")
MODE_FLAGS = {"check_input": ["--check-input"], "mesh_only": ["--mesh-only"], "run": []}
ARTIFACT_KINDS = ("log", "output_file", "mesh")

TIMEOUT_EXIT_CODE = 124
DEFAULT_STREAM_CAP = 1 << 20
DEFAULT_TIME_LIMIT = 60.0
# Extra wall-clock allowance past time_limit for killing and draining a process.
GRACE_SECONDS = 5.0


class ExecutionError(Exception):
    """Base class for failures that prevent a backend call from producing a result."""


class ConfigurationError(ExecutionError):
    pass


class InputNotFoundError(ExecutionError, FileNotFoundError):
    pass


class BackendUnavailableError(ExecutionError):
    pass


@dataclass(frozen=True)
class ExecutionRequest:
    input_path: Path
    mode: str = "check_input"
    time_limit: float = DEFAULT_TIME_LIMIT
    working_dir: Path | None = None
    extra_args: tuple[str, ...] = ()

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.time_limit > 0:
            raise ValueError("time_limit must be positive")
        object.__setattr__(self, "input_path", Path(self.input_path))
        object.__setattr__(self, "extra_args", tuple(self.extra_args))
        if self.working_dir is not None:
            object.__setattr__(self, "working_dir", Path(self.working_dir))

    @property
    def cwd(self) -> Path:
        return self.working_dir if self.working_dir is not None else self.input_path.parent


@dataclass(frozen=True)
class Artifact:
    kind: str
    path: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "path": self.path}


@dataclass(frozen=True)
class ExecutionResult:
    exit_code: int
    timed_out: bool
    stdout: str
    stderr: str
    artifacts: tuple[Artifact, ...] = ()
    duration: float = 0.0
    backend: str = "local"
    truncated: bool = False

    @property
    def passed(self) -> bool:
        return self.exit_code == 0 and not self.timed_out

    def contract(self) -> dict:
        """Fields that must agree across backends for the same scripted behaviour."""
        return {
            "exit_code": self.exit_code,
            "timed_out": self.timed_out,
            "stdout": self.stdout,
            "stderr": self.stderr,
            "truncated": self.truncated,
        }

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["artifacts"] = [a.to_dict() for a in self.artifacts]
        return d


class Backend(Protocol):
    name: str

    def execute(self, request: ExecutionRequest) -> ExecutionResult: ...


def cap_stream(data: bytes, cap: int) -> tuple[str, bool]:
    truncated = len(data) > cap
    return data[:cap].decode("utf-8", errors="replace"), truncated


def classify_artifact(path: Path, mode: str) -> str:
    suffix = path.suffix.lower()
    if suffix in (".log", ".txt"):
        return "log"
    if mode == "mesh_only" and suffix in (".e", ".exo", ".msh", ".cpr", ".cpa", ".xda", ".xdr", ".inp"):
        return "mesh"
    if "_mesh" in path.stem.lower() or path.stem.lower().endswith("_in"):
        return "mesh"
    return "output_file"


def snapshot(directory: Path) -> dict[str, tuple[int, int]]:
    state = {}
    if not directory.is_dir():
        return state
    for root, _, files in os.walk(directory):
        for name in files:
            p = os.path.join(root, name)
            try:
                st = os.stat(p)
            except OSError:
                continue
            state[p] = (st.st_mtime_ns, st.st_size)
    return state


def new_artifacts(before: dict, directory: Path, mode: str, exclude: Path) -> tuple[Artifact, ...]:
    after = snapshot(directory)
    skip = str(exclude.resolve()) if exclude.exists() else None
    found = []
    for p, stamp in sorted(after.items()):
        if before.get(p) == stamp or str(Path(p).resolve()) == skip:
            continue
        found.append(Artifact(classify_artifact(Path(p), mode), p))
    return tuple(found)


def _require_input(request: ExecutionRequest) -> None:
    if not request.input_path.is_file():
        raise InputNotFoundError(f"input file not found: {request.input_path}")


def _dispatch(backend: Backend, request: ExecutionRequest, mode: str) -> ExecutionResult:
    if request.mode != mode:
        request = dataclasses.replace(request, mode=mode)
    _require_input(request)
    return backend.execute(request)


def check_input(backend: Backend, request: ExecutionRequest) -> ExecutionResult:
    """Validate setup only (``--check-input``); success is ``exit_code == 0``."""
    return _dispatch(backend, request, "check_input")


def mesh_only(backend: Backend, request: ExecutionRequest) -> ExecutionResult:
    return _dispatch(backend, request, "mesh_only")


def run_input(backend: Backend, request: ExecutionRequest) -> ExecutionResult:
    """Full run. Downstream pass/fail is exactly ``exit_code == 0``."""
    return _dispatch(backend, request, "run")
