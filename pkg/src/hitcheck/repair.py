"""Bounded, rule-based repair of near-valid HIT text.

Each iteration parses the candidate, picks the single rule keyed by the failure's
expected token class, applies it within two lines of the failure and parses
again. The loop stops on success, when no rule applies, or when the budget is
spent.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .hit import ParseFailure, SourceSpan, parse
from .sanitize import sanitize

__all__ = [
    "DEFAULT_BUDGET",
    "RULES",
    "RULE_FOR_CLASS",
    "RepairAction",
    "RepairOutcome",
    "repair",
]

DEFAULT_BUDGET = 8
LOCALITY_LINES = 2

RULES = (
    "balance_delimiters",
    "insert_equals",
    "normalize_quote",
    "fix_list_separator",
    "close_quote",
    "drop_stray_token",
)

RULE_FOR_CLASS = {
    "block_close": "balance_delimiters",
    "equals": "insert_equals",
    "end_of_quote": "close_quote",
    "value": "fix_list_separator",
    "identifier": "drop_stray_token",
}


@dataclass(frozen=True)
class RepairAction:
    iteration: int
    rule: str
    location: SourceSpan
    before: str
    after: str

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "rule": self.rule,
            "location": self.location.to_dict(),
            "before": self.before,
            "after": self.after,
        }


@dataclass(frozen=True)
class RepairOutcome:
    text: str
    success: bool
    actions: tuple[RepairAction, ...] = ()
    iterations_used: int = 0
    final_failure: ParseFailure | None = None
    failures: tuple[ParseFailure, ...] = field(default=(), compare=False)
    error: str | None = None  # "budget_exhausted" | "no_applicable_rule"

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "iterations_used": self.iterations_used,
            "actions": [a.to_dict() for a in self.actions],
            "final_failure": self.final_failure.to_dict() if self.final_failure else None,
            "error": self.error,
        }


@dataclass(frozen=True)
class _Edit:
    start: int
    end: int
    replacement: str
    rule: str


def _line_bounds(text: str, offset: int) -> tuple[int, int]:
    start = text.rfind("\n", 0, offset) + 1
    end = text.find("\n", offset)
    return start, len(text) if end < 0 else end


def _balance_delimiters(text: str, failure: ParseFailure) -> _Edit | None:
    at = failure.location.offset
    closer = failure.hint.get("closer", "[]")
    indent = failure.hint.get("indent", "")
    if at >= len(text) and text and not text.endswith("\n"):
        return _Edit(at, at, "\n" + indent + closer + "\n", "balance_delimiters")
    return _Edit(at, at, indent + closer + "\n", "balance_delimiters")


def _insert_equals(text: str, failure: ParseFailure) -> _Edit | None:
    at = failure.location.offset
    if at < len(text) and text[at] in " \t":
        return _Edit(at, at, " =", "insert_equals")
    return _Edit(at, at, " = ", "insert_equals")


def _close_quote(text: str, failure: ParseFailure) -> _Edit | None:
    at = failure.location.offset
    quote = failure.hint.get("quote", "'")
    other = '"' if quote == "'" else "'"
    line_start, _ = _line_bounds(text, at)
    opening = text.find(quote, line_start)
    # A closing quote of the wrong kind right at the insertion point: swap it.
    if at - 1 > opening and text[at - 1] in (other, "\u2019", "\u201d"):
        return _Edit(at - 1, at, quote, "normalize_quote")
    return _Edit(at, at, quote, "close_quote")


_COMMA_LIST_RE = re.compile(r"\s*,\s*")
_SQ_VALUE_RE = re.compile(r"=[ \t]*'")
_DQ_VALUE_RE = re.compile(r'=[ \t]*"')


def _fix_list_separator(text: str, failure: ParseFailure) -> _Edit | None:
    start = failure.location.offset
    _, eol = _line_bounds(text, start)
    segment = text[start:eol]
    comment = re.search(r"[ \t]+#", segment)
    if comment:
        segment = segment[:comment.start()]
    raw = segment.rstrip(" \t\r")
    if not raw:
        return None
    inner = raw
    if inner.startswith("[") and inner.endswith("]") and len(inner) >= 2:
        inner = inner[1:-1].strip()
    if "," in inner:
        inner = " ".join(t for t in _COMMA_LIST_RE.split(inner) if t)
    # Follow the file's prevailing quote style; single quotes on a tie.
    preferred = '"' if len(_DQ_VALUE_RE.findall(text)) > len(_SQ_VALUE_RE.findall(text)) else "'"
    quote = preferred if preferred not in inner else ("'" if preferred == '"' else '"')
    if quote in inner:
        return None
    return _Edit(start, start + len(raw), quote + inner + quote, "fix_list_separator")


def _drop_stray_token(text: str, failure: ParseFailure) -> _Edit | None:
    start = failure.location.offset
    m = re.compile(r"[^\s]+").match(text, start)
    if not m:
        return None
    return _Edit(start, m.end(), "", "drop_stray_token")


_HANDLERS = {
    "balance_delimiters": _balance_delimiters,
    "insert_equals": _insert_equals,
    "close_quote": _close_quote,
    "fix_list_separator": _fix_list_separator,
    "drop_stray_token": _drop_stray_token,
}


def _touches_comment_line(text: str, edit: _Edit) -> bool:
    line_start, line_end = _line_bounds(text, edit.start)
    line = text[line_start:line_end]
    if edit.start == line_start and edit.start == edit.end:
        return False  # inserting a new line before this one leaves it untouched
    return line.lstrip().startswith("#")


def _point(text: str, offset: int) -> SourceSpan:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return SourceSpan(line, col, line, col, offset, offset)


def repair(text: str, budget: int = DEFAULT_BUDGET) -> RepairOutcome:
    """Repair *text* with at most *budget* single-rule edits."""
    if budget < 1:
        raise ValueError("repair budget must be at least 1")
    clean, report = sanitize(text)
    if report.edits or report.newline_normalizations:
        text = clean

    actions: list[RepairAction] = []
    failures: list[ParseFailure] = []
    for iteration in range(1, budget + 1):
        result = parse(text)
        if not isinstance(result, ParseFailure):
            return RepairOutcome(text, True, tuple(actions), len(actions), None, tuple(failures))
        failures.append(result)
        rule = RULE_FOR_CLASS.get(result.expected)
        edit = _HANDLERS[rule](text, result) if rule else None
        if edit is None or _touches_comment_line(text, edit):
            return RepairOutcome(
                text, False, tuple(actions), len(actions), result, tuple(failures),
                "no_applicable_rule",
            )
        location = _point(text, edit.start)
        if abs(location.start_line - result.location.start_line) > LOCALITY_LINES:
            return RepairOutcome(
                text, False, tuple(actions), len(actions), result, tuple(failures),
                "no_applicable_rule",
            )
        actions.append(
            RepairAction(iteration, edit.rule, location, text[edit.start:edit.end], edit.replacement)
        )
        text = text[:edit.start] + edit.replacement + text[edit.end:]

    result = parse(text)
    if not isinstance(result, ParseFailure):
        return RepairOutcome(text, True, tuple(actions), len(actions), None, tuple(failures))
    failures.append(result)
    return RepairOutcome(
        text, False, tuple(actions), len(actions), result, tuple(failures), "budget_exhausted"
    )
