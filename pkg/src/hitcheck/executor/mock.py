"""Scriptable stand-in for a MOOSE executable.

A script is a JSON table of rules matched against the input file content::

    {"rules": [
        {"pattern": "Diffusionn",            # re.search, multiline
         "modes": ["check_input"],           # optional mode filter
         "exit_code": 1,
         "stderr": "A 'Diffusionn' is not a registered object.\\n"},
        {"equals_ignoring_whitespace": "...",  # exact content, whitespace ignored
         "exit_code": 0,
         "stdout": "ok\\n", "stdout_repeat": 1,
         "artifacts": [{"kind": "mesh", "path": "out.e"}],
         "sleep": 0.0}],
     "default": {"exit_code": 0}}

The first matching rule wins. A behaviour writes stdout then stderr, creates its
artifacts, then sleeps. The same table drives :class:`MockBackend` in-process
and ``python -m hitcheck.executor --script FILE -i INPUT [--check-input |
--mesh-only]`` as a real subprocess.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .core import (
    DEFAULT_STREAM_CAP,
    TIMEOUT_EXIT_CODE,
    Artifact,
    ExecutionRequest,
    ExecutionResult,
)

_WS_RE = re.compile(r"\s+")


def strip_whitespace(text: str) -> str:
    return _WS_RE.sub("", text)


@dataclass(frozen=True)
class Behavior:
    exit_code: int = 0
    stdout: str = ""
    stderr: str = ""
    stdout_repeat: int = 1
    stderr_repeat: int = 1
    artifacts: tuple[Mapping, ...] = ()
    sleep: float = 0.0

    @classmethod
    def from_dict(cls, d: Mapping) -> "Behavior":
        return cls(
            exit_code=int(d.get("exit_code", 0)),
            stdout=d.get("stdout", ""),
            stderr=d.get("stderr", ""),
            stdout_repeat=int(d.get("stdout_repeat", 1)),
            stderr_repeat=int(d.get("stderr_repeat", 1)),
            artifacts=tuple(d.get("artifacts", ())),
            sleep=float(d.get("sleep", 0.0)),
        )

    @property
    def stdout_bytes(self) -> bytes:
        return self.stdout.encode("utf-8") * self.stdout_repeat

    @property
    def stderr_bytes(self) -> bytes:
        return self.stderr.encode("utf-8") * self.stderr_repeat


@dataclass(frozen=True)
class _Rule:
    behavior: Behavior
    pattern: re.Pattern | None = None
    equals: str | None = None
    modes: tuple[str, ...] = ()

    def matches(self, content: str, mode: str) -> bool:
        if self.modes and mode not in self.modes:
            return False
        if self.pattern is not None and not self.pattern.search(content):
            return False
        if self.equals is not None and strip_whitespace(content) != self.equals:
            return False
        return True


@dataclass(frozen=True)
class MockScript:
    rules: tuple[_Rule, ...] = ()
    default: Behavior = field(default_factory=Behavior)
    source: Mapping = field(default_factory=dict, compare=False)

    @classmethod
    def from_dict(cls, data: Mapping) -> "MockScript":
        rules = []
        for r in data.get("rules", ()):
            equals = r.get("equals_ignoring_whitespace")
            rules.append(
                _Rule(
                    behavior=Behavior.from_dict(r),
                    pattern=re.compile(r["pattern"], re.MULTILINE) if "pattern" in r else None,
                    equals=strip_whitespace(equals) if equals is not None else None,
                    modes=tuple(r.get("modes", ())),
                )
            )
        return cls(tuple(rules), Behavior.from_dict(data.get("default", {})), dict(data))

    @classmethod
    def load(cls, source) -> "MockScript":
        if isinstance(source, MockScript):
            return source
        if isinstance(source, Mapping):
            return cls.from_dict(source)
        with open(source, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def select(self, content: str, mode: str) -> Behavior:
        for rule in self.rules:
            if rule.matches(content, mode):
                return rule.behavior
        return self.default


def _write_artifacts(behavior: Behavior, cwd: Path) -> list[Path]:
    paths = []
    for spec in behavior.artifacts:
        p = cwd / spec["path"]
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(spec.get("content", ""), encoding="utf-8")
        paths.append(p)
    return paths


class MockBackend:
    """In-process execution of a :class:`MockScript`."""

    name = "mock"

    def __init__(self, script, stream_cap: int = DEFAULT_STREAM_CAP):
        self.script = MockScript.load(script)
        self.stream_cap = stream_cap
        self.calls: list[ExecutionRequest] = []

    def execute(self, request: ExecutionRequest) -> ExecutionResult:
        self.calls.append(request)
        start = time.monotonic()
        content = request.input_path.read_text(encoding="utf-8", errors="replace")
        behavior = self.script.select(content, request.mode)
        cwd = request.cwd
        paths = _write_artifacts(behavior, cwd)
        timed_out = behavior.sleep > request.time_limit
        time.sleep(min(behavior.sleep, request.time_limit))
        out, err = behavior.stdout_bytes, behavior.stderr_bytes
        cap = self.stream_cap
        kinds = {str(cwd / a["path"]): a.get("kind", "output_file") for a in behavior.artifacts}
        return ExecutionResult(
            exit_code=TIMEOUT_EXIT_CODE if timed_out else behavior.exit_code,
            timed_out=timed_out,
            stdout=out[:cap].decode("utf-8", errors="replace"),
            stderr=err[:cap].decode("utf-8", errors="replace"),
            artifacts=tuple(Artifact(kinds[str(p)], str(p)) for p in paths),
            duration=time.monotonic() - start,
            backend=self.name,
            truncated=len(out) > cap or len(err) > cap,
        )


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="mock-moose", description=__doc__.splitlines()[0])
    parser.add_argument("--script", required=True)
    parser.add_argument("-i", dest="input", required=True)
    parser.add_argument("--check-input", action="store_true")
    parser.add_argument("--mesh-only", action="store_true")
    args, _extra = parser.parse_known_args(argv)
    mode = "check_input" if args.check_input else "mesh_only" if args.mesh_only else "run"
    script = MockScript.load(args.script)
    content = Path(args.input).read_text(encoding="utf-8", errors="replace")
    behavior = script.select(content, mode)
    sys.stdout.buffer.write(behavior.stdout_bytes)
    sys.stdout.buffer.flush()
    sys.stderr.buffer.write(behavior.stderr_bytes)
    sys.stderr.buffer.flush()
    _write_artifacts(behavior, Path.cwd())
    if behavior.sleep:
        time.sleep(behavior.sleep)
    return behavior.exit_code


if __name__ == "__main__":
    sys.exit(main())
