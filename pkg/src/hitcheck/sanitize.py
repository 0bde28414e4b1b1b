"""Character-level cleanup of candidate input text with an auditable report.

Stages, in order: newline normalization to ``\\n``; NFKC; smart punctuation and
no-break space to ASCII; removal of zero-width and control characters (tab and
newline are kept). Every edit is reported at its line/column in the original
text. Because ``\\r\\n`` and lone ``\\r`` both count as line breaks there, those
coordinates coincide with positions in the newline-normalized text, which is
what :func:`apply_edits` replays against.

Zero-width and control characters are fixed points of NFKC, so removing them
first changes nothing except which neighbours may compose; letting them
compose is what makes ``sanitize`` idempotent.
"""

from __future__ import annotations

import bisect
import unicodedata
from dataclasses import dataclass, field

__all__ = ["SanitationEdit", "SanitationReport", "apply_edits", "sanitize", "is_forbidden"]

ZERO_WIDTH = frozenset("\u200b\u200c\u200d\ufeff")

PUNCTUATION = {
    "\u2018": "'",
    "\u2019": "'",
    "\u201a": "'",
    "\u201b": "'",
    "\u201c": '"',
    "\u201d": '"',
    "\u201e": '"',
    "\u201f": '"',
    "\u00a0": " ",
    "\u202f": " ",
    "\u2007": " ",
}
# figure dash, en dash, em dash, horizontal bar, minus sign
DASHES = frozenset("\u2012\u2013\u2014\u2015\u2212")


def is_forbidden(ch: str) -> bool:
    """True for characters that never survive sanitation."""
    if ch in ZERO_WIDTH:
        return True
    return ch not in "\t\n" and unicodedata.category(ch) == "Cc"


def _name(ch: str) -> str:
    name = unicodedata.name(ch, "")
    if name:
        return name
    if unicodedata.category(ch) == "Cc":
        return f"<control-{ord(ch):04X}>"
    return f"<unnamed-{ord(ch):04X}>"


@dataclass(frozen=True)
class SanitationEdit:
    line: int
    col: int
    codepoint: str  # "U+00A0"; several space-separated when a sequence was normalized together
    unicode_name: str
    action: str  # "replaced" | "removed"
    replacement: str = ""

    @property
    def length(self) -> int:
        return len(self.codepoint.split())

    def to_dict(self) -> dict:
        return {
            "line": self.line,
            "col": self.col,
            "codepoint": self.codepoint,
            "name": self.unicode_name,
            "action": self.action,
            "replacement": self.replacement,
        }


@dataclass(frozen=True)
class SanitationReport:
    edits: tuple[SanitationEdit, ...] = ()
    newline_normalizations: int = 0
    counts: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.counts:
            counts = {"replaced": 0, "removed": 0}
            for edit in self.edits:
                counts[edit.action] += 1
            object.__setattr__(self, "counts", counts)

    def to_dict(self) -> dict:
        return {
            "edits": [e.to_dict() for e in self.edits],
            "counts": dict(self.counts),
            "newline_normalizations": self.newline_normalizations,
        }


def normalize_newlines(text: str) -> tuple[str, int]:
    count = text.count("\r\n")
    text = text.replace("\r\n", "\n")
    count += text.count("\r")
    return text.replace("\r", "\n"), count


def _segments(chars: list[tuple[int, str]]) -> list[list[tuple[int, str]]]:
    """Group characters so that NFKC of each group is independent of the others.

    Start a group at every character with combining class 0, then merge
    neighbours whose normalization interacts (Hangul jamo, composing vowel
    signs and the like).
    """
    groups: list[list[tuple[int, str]]] = []
    for item in chars:
        ch = item[1]
        if groups and (unicodedata.combining(ch) or ord(ch) >= 0x80 and _interacts(groups[-1], ch)):
            groups[-1].append(item)
        else:
            groups.append([item])
    return groups


def _interacts(group: list[tuple[int, str]], ch: str) -> bool:
    prev = "".join(c for _, c in group)
    return unicodedata.normalize("NFKC", prev + ch) != (
        unicodedata.normalize("NFKC", prev) + unicodedata.normalize("NFKC", ch)
    )


def _dash_replaced(prev: str | None, nxt: str | None) -> bool:
    if (prev is not None and prev.isdigit()) or (nxt is not None and nxt.isdigit()):
        return True
    before = prev is None or prev.isspace()
    after = nxt is None or nxt.isspace()
    return before and after


def sanitize(raw: str) -> tuple[str, SanitationReport]:
    """Return ``(clean, report)`` for *raw*."""
    text, newline_count = normalize_newlines(raw)

    kept: list[tuple[int, str]] = []
    removed: list[int] = []
    for i, ch in enumerate(text):
        if is_forbidden(ch):
            removed.append(i)
        else:
            kept.append((i, ch))

    groups = _segments(kept)
    # Expand each group to the contiguous source range it covers; removed
    # characters inside that range are absorbed into the group's edit.
    spans = [(g[0][0], g[-1][0] + 1) for g in groups]
    normalized = [unicodedata.normalize("NFKC", "".join(c for _, c in g)) for g in groups]

    # Flatten to an output stream tagged by group, map punctuation, then decide dashes
    # from their final neighbours.
    stream: list[list] = []
    for gi, out in enumerate(normalized):
        for ch in out:
            stream.append([gi, PUNCTUATION.get(ch, ch)])
    for k, (gi, ch) in enumerate(stream):
        if ch in DASHES:
            prev = stream[k - 1][1] if k > 0 else None
            nxt = stream[k + 1][1] if k + 1 < len(stream) else None
            if _dash_replaced(prev, nxt):
                stream[k][1] = "-"
    finals = [""] * len(groups)
    for gi, ch in stream:
        finals[gi] += ch

    line_starts = [0]
    for i, ch in enumerate(text):
        if ch == "\n":
            line_starts.append(i + 1)

    def coords(offset: int) -> tuple[int, int]:
        line = bisect.bisect_right(line_starts, offset) - 1
        return line + 1, offset - line_starts[line] + 1

    edits: list[tuple[int, SanitationEdit]] = []
    absorbed: set[int] = set()
    for (start, end), final in zip(spans, finals):
        source = text[start:end]
        if source == final:
            continue
        absorbed.update(range(start, end))
        line, col = coords(start)
        edits.append(
            (
                start,
                SanitationEdit(
                    line,
                    col,
                    " ".join(f"U+{ord(c):04X}" for c in source),
                    " + ".join(_name(c) for c in source),
                    "replaced",
                    final,
                ),
            )
        )
    for i in removed:
        if i in absorbed:
            continue
        line, col = coords(i)
        ch = text[i]
        edits.append((i, SanitationEdit(line, col, f"U+{ord(ch):04X}", _name(ch), "removed", "")))
    edits.sort(key=lambda pair: pair[0])

    clean = apply_edits(text, [e for _, e in edits])
    return clean, SanitationReport(tuple(e for _, e in edits), newline_count)


def apply_edits(text: str, edits) -> str:
    """Replay report edits against newline-normalized *text*."""
    line_starts = [0]
    for i, ch in enumerate(text):
        if ch == "\n":
            line_starts.append(i + 1)
    out = []
    pos = 0
    for edit in sorted(edits, key=lambda e: (e.line, e.col)):
        start = line_starts[edit.line - 1] + edit.col - 1
        if start < pos:
            raise ValueError(f"overlapping edit at {edit.line}:{edit.col}")
        out.append(text[pos:start])
        expected = "".join(chr(int(cp[2:], 16)) for cp in edit.codepoint.split())
        if text[start:start + len(expected)] != expected:
            raise ValueError(f"edit at {edit.line}:{edit.col} does not match the text")
        out.append(edit.replacement)
        pos = start + len(expected)
    out.append(text[pos:])
    return "".join(out)
