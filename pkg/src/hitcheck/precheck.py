"""The bounded precheck loop: sanitize, repair, type check, param check, backend check, smoke run.

Within an iteration the stages run in that fixed order and each receives exactly
the text the previous one produced. Type substitutions re-run the type check on
the new text before moving on. One iteration ends with at most one backend
check (plus one smoke run when enabled), so iterations are counted at
backend-invocation granularity.

A failed backend check is matched against the stderr rule table (first match
wins). ``rerun_type_check`` feeds the type named in the message into the next
iteration's type check, ``rerun_repair`` simply runs the next iteration, and
``give_up`` ends the loop. Unmatched failures retry until the budget is spent.
Failures that no further iteration can change (repair exhausted, unresolved
type or parameter issues, configuration errors) end the loop at once.
"""

from __future__ import annotations

import hashlib
import json
import re
import shutil
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

from .executor import (
    ExecutionError,
    ExecutionRequest,
    ExecutionResult,
    ExecutorConfig,
    check_input,
    make_backend,
    run_input,
)
from .executor.core import DEFAULT_TIME_LIMIT
from .hit import ParseFailure, extract_types, parse, render
from .registry import (
    RegistryError,
    SyntaxRegistry,
    TypeIssue,
    apply_substitution,
    is_confident,
    load_registry,
    suggest_types,
    validate_params,
    validate_types,
)
from .repair import DEFAULT_BUDGET, repair
from .sanitize import SanitationReport, sanitize

__all__ = [
    "ACTIONS",
    "CandidateNotFoundError",
    "PrecheckConfig",
    "PrecheckReport",
    "STAGES",
    "StageOutcome",
    "StderrRule",
    "Substitution",
    "extract_final_input",
    "load_stderr_rules",
    "precheck",
]

STAGES = ("sanitize", "repair", "type_check", "param_check", "backend_check", "smoke_run")
STATUSES = ("ok", "fixed", "failed", "skipped")
ACTIONS = ("rerun_repair", "rerun_type_check", "give_up")
MUTATING_STAGES = frozenset({"sanitize", "repair", "type_check"})
WORKSPACE_INPUT = "current.i"


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class StderrRule:
    pattern: re.Pattern
    action: str
    description: str = ""

    def match(self, stderr: str) -> re.Match | None:
        return self.pattern.search(stderr)


def load_stderr_rules(source=None) -> tuple[StderrRule, ...]:
    """Read a rule table; ``None`` loads the packaged default."""
    if source is None:
        data = json.loads(resources.files("hitcheck").joinpath("data/stderr_rules.json").read_text("utf-8"))
    elif isinstance(source, Mapping):
        data = source
    else:
        data = json.loads(Path(source).read_text(encoding="utf-8"))
    rules = []
    for i, r in enumerate(data.get("rules", ())):
        if r.get("action") not in ACTIONS:
            raise ValueError(f"rule {i}: action must be one of {ACTIONS}")
        rules.append(StderrRule(re.compile(r["pattern"], re.MULTILINE), r["action"], r.get("description", "")))
    return tuple(rules)


@dataclass(frozen=True)
class PrecheckConfig:
    max_iterations: int = 5
    repair_budget: int = DEFAULT_BUDGET
    auto_substitute: bool = True
    run_smoke: bool = False
    check_types: bool = True
    registry_path: str | None = None
    executor: ExecutorConfig | None = None
    time_limit: float = DEFAULT_TIME_LIMIT
    smoke_args: tuple[str, ...] = ()
    working_dir: str | None = None
    stderr_rules: object = None  # path, mapping or None for the packaged table

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.repair_budget < 1:
            raise ValueError("repair_budget must be at least 1")
        if not self.time_limit > 0:
            raise ValueError("time_limit must be positive")


@dataclass(frozen=True)
class StageOutcome:
    stage: str
    status: str
    diagnostics: dict = field(default_factory=dict)
    input_sha256: str = ""
    output_sha256: str = ""

    def __post_init__(self):
        if self.stage not in STAGES or self.status not in STATUSES:
            raise ValueError(f"bad stage outcome {self.stage}/{self.status}")
        if self.status == "fixed" and self.stage not in MUTATING_STAGES:
            raise ValueError(f"stage {self.stage} cannot report 'fixed'")

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "status": self.status,
            "diagnostics": self.diagnostics,
            "input_sha256": self.input_sha256,
            "output_sha256": self.output_sha256,
        }


@dataclass(frozen=True)
class Substitution:
    iteration: int
    block_path: str
    family: str
    old: str
    new: str
    score: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class PrecheckReport:
    iterations_used: int = 0
    final_text: str = ""
    passed: bool = False
    stage_log: list[list[StageOutcome]] = field(default_factory=list)
    substitutions: list[Substitution] = field(default_factory=list)
    sanitation_summary: SanitationReport = field(default_factory=SanitationReport)
    check_report: ExecutionResult | None = None
    run_report: ExecutionResult | None = None
    stop_reason: str = ""

    @property
    def mutating_actions(self) -> int:
        return sum(1 for it in self.stage_log for s in it if s.status == "fixed")

    @property
    def backend_invocations(self) -> int:
        return sum(
            1 for it in self.stage_log for s in it
            if s.stage in ("backend_check", "smoke_run") and "exit_code" in s.diagnostics
        )

    def to_dict(self) -> dict:
        return {
            "iterations_used": self.iterations_used,
            "final_text": self.final_text,
            "passed": self.passed,
            "stop_reason": self.stop_reason,
            "stage_log": [[s.to_dict() for s in it] for it in self.stage_log],
            "substitutions": [s.to_dict() for s in self.substitutions],
            "sanitation_summary": self.sanitation_summary.to_dict(),
            "check_report": self.check_report.to_dict() if self.check_report else None,
            "run_report": self.run_report.to_dict() if self.run_report else None,
        }


class _Stop(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class _Run:
    """State of one precheck call."""

    def __init__(self, config: PrecheckConfig, registry, backend, workdir: Path):
        self.config = config
        self.registry = registry
        self.backend = backend
        self.workdir = workdir
        self.report = PrecheckReport()
        self.log: list[StageOutcome] = []
        self.san_edits: list = []
        self.newlines = 0
        self.flagged: set[str] = set()
        self.iteration = 0
        self.current = ""

    def record(self, stage, status, before, after, **diagnostics) -> None:
        self.log.append(StageOutcome(stage, status, diagnostics, _sha(before), _sha(after)))

    def stage_sanitize(self, text: str) -> str:
        clean, rep = sanitize(text)
        self.san_edits.extend(rep.edits)
        self.newlines += rep.newline_normalizations
        status = "fixed" if clean != text else "ok"
        self.record("sanitize", status, text, clean, **rep.to_dict())
        return clean

    def stage_repair(self, text: str) -> str:
        if not isinstance(parse(text), ParseFailure):
            self.record("repair", "ok", text, text, actions=[])
            return text
        outcome = repair(text, self.config.repair_budget)
        if not outcome.success:
            self.record("repair", "failed", text, outcome.text, **outcome.to_dict())
            raise _Stop("repair_failed")
        self.record("repair", "fixed", text, outcome.text, **outcome.to_dict())
        return outcome.text

    def _issues(self, tree) -> list[TypeIssue]:
        issues = validate_types(tree, self.registry)
        seen = {id(i.usage) for i in issues}
        if self.flagged:
            for usage in extract_types(tree):
                if usage.type_name in self.flagged and id(usage) not in seen:
                    issues.append(TypeIssue(usage, "backend_reported"))
        return issues

    def stage_types(self, text: str) -> str:
        if not self.config.check_types:
            self.record("type_check", "skipped", text, text)
            return text
        if self.registry is None:
            self.record("type_check", "failed", text, text, error="no registry configured")
            raise _Stop("configuration_error")
        before = text
        tree = parse(text)
        applied = []
        unresolved = []
        # Each substitution shifts offsets, so re-validate on the new tree every time.
        while True:
            given_up = {(u.usage.block_path, u.usage.type_name) for u in unresolved}
            pending = [i for i in self._issues(tree) if (i.usage.block_path, i.usage.type_name) not in given_up]
            if not pending:
                break
            issue = pending[0]
            exclude = {issue.usage.type_name} if issue.kind == "backend_reported" else set()
            ranked = suggest_types(issue, self.registry, k=5, exclude=exclude)
            issue = TypeIssue(issue.usage, issue.kind, tuple(ranked))
            if self.config.auto_substitute and ranked and is_confident(ranked[0], ranked):
                tree = apply_substitution(tree, issue, ranked[0])
                sub = Substitution(self.iteration, issue.usage.block_path, issue.usage.family,
                                   issue.usage.type_name, ranked[0].name, ranked[0].score)
                applied.append(sub)
                self.report.substitutions.append(sub)
                self.flagged.discard(issue.usage.type_name)
            else:
                unresolved.append(issue)
        text = render(tree)
        diagnostics = {
            "substitutions": [s.to_dict() for s in applied],
            "issues": [i.to_dict() for i in unresolved],
        }
        if unresolved:
            self.record("type_check", "failed", before, text, **diagnostics)
            raise _Stop("unresolved_types")
        self.record("type_check", "fixed" if text != before else "ok", before, text, **diagnostics)
        return text

    def stage_params(self, text: str) -> str:
        if not self.config.check_types or self.registry is None:
            self.record("param_check", "skipped", text, text)
            return text
        issues = validate_params(parse(text), self.registry)
        if issues:
            self.record("param_check", "failed", text, text, issues=[i.to_dict() for i in issues])
            raise _Stop("param_issues")
        self.record("param_check", "ok", text, text, issues=[])
        return text

    def _execute(self, stage: str, op, text: str, extra=()) -> ExecutionResult:
        if self.backend is None:
            self.record(stage, "failed", text, text, error="no backend configured")
            raise _Stop("configuration_error")
        path = self.workdir / WORKSPACE_INPUT
        path.write_text(text, encoding="utf-8")
        try:
            request = ExecutionRequest(path, time_limit=self.config.time_limit, working_dir=self.workdir,
                                       extra_args=tuple(extra))
            result = op(self.backend, request)
        except (ExecutionError, OSError) as exc:
            self.record(stage, "failed", text, text, error=f"{type(exc).__name__}: {exc}")
            raise _Stop("backend_unavailable") from exc
        status = "ok" if result.passed else "failed"
        self.record(stage, status, text, text, **result.to_dict())
        return result

    def stage_backend(self, text: str) -> bool:
        result = self._execute("backend_check", check_input, text)
        self.report.check_report = result
        if result.passed:
            return True
        for rule in load_stderr_rules(self.config.stderr_rules):
            m = rule.match(result.stderr)
            if m is None:
                continue
            if rule.action == "give_up":
                raise _Stop("give_up")
            name = m.groupdict().get("name")
            if rule.action == "rerun_type_check" and name:
                self.flagged.add(name)
            break
        return False

    def stage_smoke(self, text: str) -> bool:
        if not self.config.run_smoke:
            self.record("smoke_run", "skipped", text, text)
            return True
        result = self._execute("smoke_run", run_input, text, self.config.smoke_args)
        self.report.run_report = result
        return result.passed

    def iterate(self, text: str) -> bool:
        """One pass over the stages; ``self.current`` tracks the latest stage output."""
        self.current = text
        for stage in (self.stage_sanitize, self.stage_repair, self.stage_types, self.stage_params):
            self.current = stage(self.current)
        if not self.stage_backend(self.current):
            return False
        return self.stage_smoke(self.current)


def precheck(
    source,
    config: PrecheckConfig | None = None,
    *,
    registry: SyntaxRegistry | None = None,
    backend=None,
) -> PrecheckReport:
    """Run the bounded pipeline on *source* (inline text, or a ``Path`` to read).

    *registry* and *backend* override what *config* would load or build.
    Configuration problems show up as a failed stage in the report.
    """
    config = config or PrecheckConfig()
    text = Path(source).read_text(encoding="utf-8") if isinstance(source, Path) else source
    if not text:
        raise ValueError("precheck needs non-empty input")

    setup_errors = []
    if registry is None and config.check_types and config.registry_path:
        try:
            registry = load_registry(config.registry_path)
        except (RegistryError, OSError, ValueError) as exc:
            setup_errors.append(f"registry: {exc}")
    if backend is None and config.executor is not None:
        try:
            backend = make_backend(config.executor)
        except (ExecutionError, OSError) as exc:
            setup_errors.append(f"backend: {exc}")

    owned = config.working_dir is None
    workdir = Path(tempfile.mkdtemp(prefix="hitcheck-")) if owned else Path(config.working_dir)
    workdir.mkdir(parents=True, exist_ok=True)
    run = _Run(config, registry, backend, workdir)
    report = run.report
    try:
        for iteration in range(1, config.max_iterations + 1):
            run.iteration = iteration
            run.log = []
            report.stage_log.append(run.log)
            report.iterations_used = iteration
            run.current = text
            try:
                if setup_errors:
                    stage = "type_check" if setup_errors[0].startswith("registry") else "backend_check"
                    run.record(stage, "failed", text, text, error="; ".join(setup_errors))
                    raise _Stop("configuration_error")
                ok = run.iterate(text)
            except _Stop as stop:
                report.stop_reason = stop.reason
                text = run.current
                break
            text = run.current
            if ok:
                report.passed = True
                report.stop_reason = "passed"
                break
        else:
            report.stop_reason = "budget_exhausted"
    finally:
        if owned:
            shutil.rmtree(workdir, ignore_errors=True)
    report.final_text = text
    report.sanitation_summary = SanitationReport(tuple(run.san_edits), run.newlines)
    return report


_FENCE_RE = re.compile(r"^[ ]{0,3}(?P<fence>`{3,}|~{3,})[ \t]*(?P<info>[^\n]*?)[ \t]*$")


class CandidateNotFoundError(FileNotFoundError):
    pass


def _moose_fences(transcript: str) -> list[str]:
    bodies = []
    lines = transcript.splitlines(keepends=True)
    i = 0
    while i < len(lines):
        m = _FENCE_RE.match(lines[i].rstrip("\r\n"))
        i += 1
        if not m:
            continue
        fence = m.group("fence")
        info = m.group("info").split()
        body = []
        while i < len(lines):
            m_close = _FENCE_RE.match(lines[i].rstrip("\r\n"))
            i += 1
            if m_close and not m_close.group("info") and m_close.group("fence")[0] == fence[0] \
                    and len(m_close.group("fence")) >= len(fence):
                break
            body.append(lines[i - 1])
        if info and info[0].lower() == "moose":
            bodies.append("".join(body))
    return bodies


def extract_final_input(transcript: str, workspace_fallback=None) -> str:
    """Content of the last fenced block tagged ``moose`` (case-insensitive).

    Falls back to the workspace input: *workspace_fallback* may be the file
    itself or a directory holding ``current.i``. An unclosed fence runs to
    the end of the transcript.
    """
    bodies = _moose_fences(transcript or "")
    if bodies:
        return bodies[-1]
    if workspace_fallback is not None:
        path = Path(workspace_fallback)
        if path.is_dir():
            path = path / WORKSPACE_INPUT
        if path.is_file():
            return path.read_text(encoding="utf-8")
    raise CandidateNotFoundError("no moose code fence in the transcript and no workspace input")
