"""Executor configuration, read from a JSON file.

Keys (all optional)::

    {"backend": "mock",            # "local" | "remote" | "mock"
     "moose_exe": "/path/to/app-opt",   # string, or argv prefix list
     "remote_url": "http://host:port/",
     "time_limit": 60.0,
     "stream_cap": 1048576,
     "mock_script": "mock.json"}   # path or inline table, for backend "mock"

Relative ``moose_exe`` and ``mock_script`` paths resolve against the config
file's directory. The executable is never searched for on ``PATH``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

from .core import DEFAULT_STREAM_CAP, DEFAULT_TIME_LIMIT, ConfigurationError
from .local import LocalBackend
from .mock import MockBackend
from .remote import RemoteBackend

BACKENDS = ("local", "remote", "mock")


@dataclass(frozen=True)
class ExecutorConfig:
    backend: str = "mock"
    moose_exe: Any = None
    remote_url: str | None = None
    time_limit: float = DEFAULT_TIME_LIMIT
    stream_cap: int = DEFAULT_STREAM_CAP
    mock_script: Any = None

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ConfigurationError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if not self.time_limit > 0:
            raise ConfigurationError("time_limit must be positive")
        if not self.stream_cap > 0:
            raise ConfigurationError("stream_cap must be positive")


def load_config(path) -> ExecutorConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read executor config {path}: {exc}") from exc
    known = {f.name for f in fields(ExecutorConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(f"unknown executor config keys: {sorted(unknown)}")
    for key in ("moose_exe", "mock_script"):
        value = data.get(key)
        if isinstance(value, str) and not Path(value).is_absolute():
            data[key] = str(path.parent / value)
    return ExecutorConfig(**data)


def make_backend(config: ExecutorConfig):
    if config.backend == "local":
        return LocalBackend(config.moose_exe, config.stream_cap)
    if config.backend == "remote":
        return RemoteBackend(config.remote_url)
    if config.mock_script is None:
        raise ConfigurationError("backend 'mock' needs a mock_script")
    try:
        return MockBackend(config.mock_script, config.stream_cap)
    except (OSError, ValueError) as exc:
        raise ConfigurationError(f"cannot load mock script: {exc}") from exc
