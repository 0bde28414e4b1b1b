"""Execution backends with identical check-input / mesh-only / run semantics."""

from .config import ExecutorConfig, load_config, make_backend
from .core import (
    GRACE_SECONDS,
    TIMEOUT_EXIT_CODE,
    Artifact,
    BackendUnavailableError,
    ConfigurationError,
    ExecutionError,
    ExecutionRequest,
    ExecutionResult,
    InputNotFoundError,
    check_input,
    mesh_only,
    run_input,
)
from .local import LocalBackend
from .mock import MockBackend, MockScript
from .remote import ReferenceServer, RemoteBackend, RemoteError

__all__ = [
    "Artifact",
    "BackendUnavailableError",
    "ConfigurationError",
    "ExecutionError",
    "ExecutionRequest",
    "ExecutionResult",
    "ExecutorConfig",
    "GRACE_SECONDS",
    "InputNotFoundError",
    "LocalBackend",
    "MockBackend",
    "MockScript",
    "ReferenceServer",
    "RemoteBackend",
    "RemoteError",
    "TIMEOUT_EXIT_CODE",
    "check_input",
    "load_config",
    "make_backend",
    "mesh_only",
    "mock_executable",
    "run_input",
]


def mock_executable(script_path) -> list[str]:
    """argv prefix that runs the mock as a real subprocess, for :class:`LocalBackend`."""
    import sys

    return [sys.executable, "-m", "hitcheck.executor", "--script", str(script_path)]
