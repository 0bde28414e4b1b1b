"""Lossless parser and renderer for HIT, the block-structured MOOSE input format.

The parser keeps every byte of the source: whitespace and comments preceding a
parameter, block header or block closer are stored as *leading trivia* on that
node, so ``render(parse(text)) == text`` for every parsable text.

Supported forms::

    [Mesh]                  # block opener
      [./gen]               # legacy nested opener
        type = GeneratedMeshGenerator
        dims = '1 2 3'      # single-quoted values may span lines
      [../]                 # legacy closer
    []

Brace expressions (``${...}``) and ``!include`` lines are kept as opaque value
text and never evaluated.
"""

from __future__ import annotations

import bisect
import dataclasses
import fnmatch
import re
from dataclasses import dataclass, field
from typing import Iterator, Union

__all__ = [
    "BlockNode",
    "Diagnostic",
    "HitSyntaxError",
    "Param",
    "ParseFailure",
    "SourceSpan",
    "SyntaxTree",
    "TOKEN_CLASSES",
    "TypeUsage",
    "extract_types",
    "find_blocks",
    "iter_blocks",
    "parse",
    "parse_or_raise",
    "render",
    "replace_param_value",
]

TOKEN_CLASSES = frozenset(
    {"block_open", "block_close", "identifier", "equals", "value", "end_of_quote"}
)

IDENT_CHARS = frozenset("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_:-")
IDENT_RE = re.compile(r"[A-Za-z0-9_:\-]+")
_HSPACE = " \t\r"
_BARE_STOP = frozenset(" \t\r\n#[]'\"")
# A continuation line of a multi-line single-quoted string that looks like
# this is taken as evidence that the quote was never closed.
_STATEMENT_LINE_RE = re.compile(r"[ \t]*(?:\[|[A-Za-z0-9_:\-]+[ \t]*=)")


@dataclass(frozen=True)
class SourceSpan:
    """Inclusive line/column range, plus the equivalent half-open offsets."""

    start_line: int
    start_col: int
    end_line: int
    end_col: int
    offset: int = 0
    end_offset: int = 0

    def to_dict(self) -> dict:
        return {
            "start_line": self.start_line,
            "start_col": self.start_col,
            "end_line": self.end_line,
            "end_col": self.end_col,
        }


@dataclass(frozen=True)
class Param:
    key: str
    value: str
    value_kind: str  # "bare" | "single_quoted" | "double_quoted"
    span: SourceSpan
    leading: str = ""
    separator: str = " = "
    value_span: SourceSpan | None = None

    @property
    def text_value(self) -> str:
        """The value with surrounding quotes removed."""
        if self.value_kind == "bare":
            return self.value
        return self.value[1:-1]

    def render(self) -> str:
        return self.leading + self.key + self.separator + self.value


@dataclass(frozen=True)
class BlockNode:
    name: str
    path: str
    items: tuple["Param | BlockNode", ...]
    span: SourceSpan
    leading: str = ""
    header: str = ""
    closer: str = ""
    closer_leading: str = ""

    @property
    def params(self) -> list[Param]:
        """Parameters in source order; for a repeated key only the last is kept."""
        last = {}
        for item in self.items:
            if isinstance(item, Param):
                last[item.key] = item
        return [p for p in self.items if isinstance(p, Param) and last[p.key] is p]

    @property
    def children(self) -> list["BlockNode"]:
        return [item for item in self.items if isinstance(item, BlockNode)]

    @property
    def leading_comments(self) -> list[str]:
        return [line.strip() for line in self.leading.splitlines() if line.strip().startswith("#")]

    @property
    def is_legacy(self) -> bool:
        return self.header.startswith("[./")

    def get(self, key: str) -> Param | None:
        for param in reversed(self.items):
            if isinstance(param, Param) and param.key == key:
                return param
        return None

    def render(self) -> str:
        body = "".join(item.render() for item in self.items)
        return self.leading + self.header + body + self.closer_leading + self.closer


Node = Union[Param, BlockNode]


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "warning" | "error"
    message: str
    span: SourceSpan


@dataclass(frozen=True)
class SyntaxTree:
    root: BlockNode
    diagnostics: tuple[Diagnostic, ...] = ()

    @property
    def blocks(self) -> list[BlockNode]:
        return list(iter_blocks(self))


@dataclass(frozen=True)
class ParseFailure:
    """First parse failure in document order.

    ``hint`` carries rule-specific context for the repair loop (for an unclosed
    block: the closer matching its opener form and the opener's indentation).
    ``completed`` lists the offset ranges of blocks that closed before the
    failure point.
    """

    location: SourceSpan
    expected: str
    found: str
    message: str
    hint: dict = field(default_factory=dict, compare=False)
    completed: tuple[tuple[int, int], ...] = ()

    def to_dict(self) -> dict:
        return {
            "location": self.location.to_dict(),
            "expected": self.expected,
            "found": self.found,
            "message": self.message,
        }


class HitSyntaxError(ValueError):
    def __init__(self, failure: ParseFailure):
        loc = failure.location
        super().__init__(f"line {loc.start_line}, column {loc.start_col}: {failure.message}")
        self.failure = failure


@dataclass(frozen=True)
class TypeUsage:
    block_path: str
    family: str
    type_name: str
    span: SourceSpan

    def to_dict(self) -> dict:
        return {
            "block_path": self.block_path,
            "family": self.family,
            "type_name": self.type_name,
            "span": self.span.to_dict(),
        }


class _Failed(Exception):
    def __init__(self, failure: ParseFailure):
        self.failure = failure


@dataclass
class _Frame:
    name: str
    path: str
    header: str
    leading: str
    start: int
    header_col: int
    indent: str
    items: list = field(default_factory=list)
    item_cols: list = field(default_factory=list)
    item_ends: list = field(default_factory=list)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.n = len(text)
        self.pos = 0
        self.line_starts = [0] + [m.end() for m in re.finditer("\n", text)]
        self.diagnostics: list[Diagnostic] = []
        self.completed: list[tuple[int, int]] = []

    # -- coordinates -------------------------------------------------------

    def lc(self, offset: int) -> tuple[int, int]:
        line = bisect.bisect_right(self.line_starts, offset) - 1
        return line + 1, offset - self.line_starts[line] + 1

    def span(self, start: int, end: int) -> SourceSpan:
        sl, sc = self.lc(start)
        if end <= start:
            return SourceSpan(sl, sc, sl, sc, start, start)
        el, ec = self.lc(end - 1)
        return SourceSpan(sl, sc, el, ec, start, end)

    def point(self, offset: int) -> SourceSpan:
        line, col = self.lc(offset)
        return SourceSpan(line, col, line, col, offset, offset)

    def line_end(self, offset: int) -> int:
        nl = self.text.find("\n", offset)
        return self.n if nl < 0 else nl

    def excerpt(self, offset: int) -> str:
        return self.text[offset:self.line_end(offset)][:20]

    def fail(self, offset: int, expected: str, message: str, **hint) -> _Failed:
        return _Failed(
            ParseFailure(
                self.point(offset),
                expected,
                self.excerpt(offset),
                message,
                dict(hint),
                tuple(self.completed),
            )
        )

    # -- scanning ----------------------------------------------------------

    def skip_trivia(self) -> int:
        """Skip whitespace, newlines and comments; return the start of the skipped run."""
        start = self.pos
        text, n = self.text, self.n
        while self.pos < n:
            ch = text[self.pos]
            if ch in " \t\n":
                self.pos += 1
            elif ch == "\r":
                if not any(d.message.startswith("non-LF") for d in self.diagnostics):
                    self.diagnostics.append(
                        Diagnostic("warning", "non-LF newline character", self.point(self.pos))
                    )
                self.pos += 1
            elif ch == "#":
                self.pos = self.line_end(self.pos)
            else:
                break
        return start

    def parse(self) -> SyntaxTree:
        root = _Frame("", "/", "", "", 0, 0, "")
        stack = [root]
        while True:
            trivia_start = self.skip_trivia()
            leading = self.text[trivia_start:self.pos]
            if self.pos >= self.n:
                if len(stack) > 1:
                    raise self.unclosed_failure(stack[-1])
                tree_span = self.span(0, self.n) if self.n else SourceSpan(1, 1, 1, 1, 0, 0)
                node = BlockNode("", "/", tuple(root.items), tree_span, closer_leading=leading)
                return SyntaxTree(node, tuple(self.diagnostics))
            ch = self.text[self.pos]
            start = self.pos
            if ch == "[":
                self.parse_bracket(stack, leading)
            elif ch in IDENT_CHARS or self.text.startswith("!include", start):
                param = self.parse_param(leading)
                frame = stack[-1]
                if any(isinstance(p, Param) and p.key == param.key for p in frame.items):
                    self.diagnostics.append(
                        Diagnostic(
                            "warning",
                            f"duplicate parameter '{param.key}' in {frame.path}; last occurrence wins",
                            param.span,
                        )
                    )
                frame.items.append(param)
                frame.item_cols.append(self.lc(start)[1])
                frame.item_ends.append(self.pos)
            else:
                raise self.fail(start, "identifier", f"unexpected character {ch!r}")

    def parse_bracket(self, stack: list[_Frame], leading: str) -> None:
        text = self.text
        start = self.pos
        if text.startswith("[]", start) or text.startswith("[../]", start):
            closer = "[]" if text.startswith("[]", start) else "[../]"
            if len(stack) == 1:
                raise self.fail(start, "block_open", "block closer without an open block")
            frame = stack.pop()
            self.pos = start + len(closer)
            node = BlockNode(
                frame.name,
                frame.path,
                tuple(frame.items),
                self.span(frame.start, self.pos),
                frame.leading,
                frame.header,
                closer,
                leading,
            )
            self.completed.append((frame.start, self.pos))
            parent = stack[-1]
            parent.items.append(node)
            parent.item_cols.append(frame.header_col)
            parent.item_ends.append(self.pos)
            return
        name_start = start + 3 if text.startswith("[./", start) else start + 1
        m = IDENT_RE.match(text, name_start)
        if not m:
            raise self.fail(name_start, "identifier", "expected a block name")
        if m.end() >= self.n or text[m.end()] != "]":
            raise self.fail(m.end(), "block_open", "expected ']' to end the block header")
        self.pos = m.end() + 1
        parent = stack[-1]
        name = m.group()
        line_start = self.line_starts[self.lc(start)[0] - 1]
        indent_m = re.match(r"[ \t]*", text[line_start:start])
        stack.append(
            _Frame(
                name=name,
                path=("/" if parent.path == "/" else parent.path + "/") + name,
                header=text[start:self.pos],
                leading=leading,
                start=start,
                header_col=self.lc(start)[1],
                indent=indent_m.group() if indent_m and indent_m.end() == start - line_start else "",
            )
        )

    def parse_param(self, leading: str) -> Param:
        text = self.text
        key_start = self.pos
        if text.startswith("!include", key_start):
            return self.parse_include(leading)
        m = IDENT_RE.match(text, key_start)
        key_end = m.end()
        p = key_end
        while p < self.n and text[p] in _HSPACE:
            p += 1
        if p >= self.n or text[p] != "=":
            raise self.fail(key_end, "equals", f"expected '=' after '{m.group()}'")
        p += 1
        while p < self.n and text[p] in _HSPACE:
            p += 1
        value_start = p
        if p >= self.n or text[p] in "\n#":
            raise self.fail(p, "value", f"missing value for '{m.group()}'")
        ch = text[p]
        if ch == "[":
            raise self.fail(p, "value", "bracketed list is not a valid value")
        if ch == "'" or ch == '"':
            value_end = self.scan_quoted(p)
            kind = "single_quoted" if ch == "'" else "double_quoted"
        else:
            value_end = self.scan_bare(p)
            kind = "bare"
        self.pos = value_end
        self.check_after_value(value_start, kind)
        return Param(
            key=m.group(),
            value=text[value_start:value_end],
            value_kind=kind,
            span=self.span(key_start, value_end),
            leading=leading,
            separator=text[key_end:value_start],
            value_span=self.span(value_start, value_end),
        )

    def parse_include(self, leading: str) -> Param:
        """``!include path`` is kept verbatim as an opaque pseudo-parameter."""
        text, start = self.text, self.pos
        p = start + len("!include")
        q = p
        while q < self.n and text[q] in _HSPACE:
            q += 1
        if q == p or q >= self.n or text[q] in "\n#":
            raise self.fail(q, "value", "missing path after !include")
        end = self.scan_bare(q)
        self.pos = end
        return Param(
            key="!include",
            value=text[q:end],
            value_kind="bare",
            span=self.span(start, end),
            leading=leading,
            separator=text[p:q],
            value_span=self.span(q, end),
        )

    def scan_bare(self, p: int) -> int:
        text, n = self.text, self.n
        while p < n:
            if text.startswith("${", p):
                depth, q = 0, p
                while q < n:
                    if text[q] == "{":
                        depth += 1
                    elif text[q] == "}":
                        depth -= 1
                        if depth == 0:
                            break
                    q += 1
                if q >= n:
                    raise self.fail(p, "value", "unterminated brace expression")
                p = q + 1
            elif text[p] in _BARE_STOP:
                break
            else:
                p += 1
        return p

    def scan_quoted(self, p: int) -> int:
        text = self.text
        quote = text[p]
        eol = self.line_end(p)
        close = text.find(quote, p + 1)
        if quote == '"' and (close < 0 or close > eol):
            raise self.fail(
                self.quote_insert_point(p + 1, eol), "end_of_quote", "unterminated quoted value",
                quote=quote,
            )
        if close < 0 or close > eol:
            limit = self.n if close < 0 else close
            # A statement-looking line inside the quoted span means the quote was never closed.
            evidence = next(
                (ls for ls in self.line_starts
                 if eol < ls <= limit and _STATEMENT_LINE_RE.match(text, ls)),
                None,
            )
            if close < 0 or evidence is not None:
                raise self.fail(
                    self.quote_insert_point(p + 1, eol, evidence), "end_of_quote",
                    "unterminated quoted value", quote=quote,
                )
        return close + 1

    def quote_insert_point(self, start: int, eol: int, stop: int | None = None) -> int:
        """Where a missing closing quote most plausibly belongs.

        That is the end of the last content line before *stop* (the first
        statement line after the opening one), or of the opening line.
        """
        line_start = start
        line_end = eol
        if stop is not None:
            for ls in self.line_starts:
                if eol < ls < stop:
                    le = self.line_end(ls)
                    body = self.text[ls:le].strip(" \t\r")
                    if body and not body.startswith("#"):
                        line_start, line_end = ls, le
        segment = self.text[line_start:line_end]
        m = re.search(r"[ \t]+#", segment)
        if m:
            return line_start + m.start()
        return line_start + len(segment.rstrip(" \t\r"))

    def check_after_value(self, value_start: int, kind: str) -> None:
        text, p = self.text, self.pos
        if p >= self.n:
            return
        if text[p] not in " \t\r\n#[":
            raise self.fail(p, "value", "unexpected text directly after value")
        while p < self.n and text[p] in _HSPACE:
            p += 1
        if p >= self.n or text[p] in "\n#[":
            return
        if kind == "bare" and not re.match(r"[A-Za-z0-9_:\-]+[ \t]*=", text[p:]):
            raise self.fail(value_start, "value", "unquoted list value")

    def unclosed_failure(self, frame: _Frame) -> _Failed:
        """Locate the point where the innermost open block should have closed.

        In an indented file a direct child that starts at or left of the
        opener's column belongs outside the block; the closer goes right after
        the previous item. Otherwise the block runs to its last item.
        """
        cut = _dedent_cut(frame.item_cols, frame.header_col)
        site = _misplaced_close(frame.items[:cut] if cut is not None else frame.items)
        if site is not None:
            # A sibling lost its closer and swallowed the next sibling; that is
            # earlier in the file than the open frame's own dedent point.
            block, j = site
            anchor = block.items[j - 1].span.end_offset if j else block.span.offset + len(block.header)
            header, path = block.header, block.path
            line_start = self.line_starts[block.span.start_line - 1]
            indent = self.text[line_start:block.span.offset]
            indent = indent if not indent.strip(" \t") else ""
        else:
            if cut is None:
                cut = len(frame.items)
            anchor = frame.item_ends[cut - 1] if cut else frame.start + len(frame.header)
            header, path, indent = frame.header, frame.path, frame.indent
        eol = self.line_end(anchor)
        where = self.n if eol >= self.n else eol + 1
        closer = "[../]" if header.startswith("[./") else "[]"
        return self.fail(
            where,
            "block_close",
            f"block {path} is never closed",
            closer=closer,
            indent=indent,
            block=path,
        )


def _dedent_cut(cols: list[int], header_col: int) -> int | None:
    """Index of the first item at or left of the header column, in an indented block.

    Indentation is evidenced by an indented first item or an indented header.
    """
    if cols and (cols[0] > header_col or header_col > 1):
        for i, col in enumerate(cols):
            if col <= header_col:
                return i
    return None


def _misplaced_close(items) -> tuple[BlockNode, int] | None:
    """First closed block (document order) that holds a dedented child or closer."""
    for item in items:
        if not isinstance(item, BlockNode):
            continue
        cut = _dedent_cut([x.span.start_col for x in item.items], item.span.start_col)
        inner = _misplaced_close(item.items[:cut] if cut is not None else item.items)
        if inner is not None:
            return inner
        if cut is not None:
            return item, cut
        closer_col = item.span.end_col - len(item.closer) + 1
        if "\n" in item.closer_leading and closer_col < item.span.start_col:
            return item, len(item.items)
    return None


def parse(text: str) -> SyntaxTree | ParseFailure:
    """Parse *text*; return a tree, or the first failure in document order."""
    try:
        return _Parser(text).parse()
    except _Failed as exc:
        return exc.failure


def parse_or_raise(text: str) -> SyntaxTree:
    result = parse(text)
    if isinstance(result, ParseFailure):
        raise HitSyntaxError(result)
    return result


def render(tree: SyntaxTree) -> str:
    return tree.root.render()


def iter_blocks(tree: SyntaxTree | BlockNode) -> Iterator[BlockNode]:
    """Yield every non-root block in document order."""
    root = tree.root if isinstance(tree, SyntaxTree) else tree
    stack = list(reversed(root.children))
    while stack:
        block = stack.pop()
        yield block
        stack.extend(reversed(block.children))


def _compile_pattern(pattern: str) -> list[str]:
    if not pattern.startswith("/"):
        raise ValueError(f"block path pattern must start with '/': {pattern!r}")
    segments = pattern[1:].split("/")
    for seg in segments:
        if not seg:
            raise ValueError(f"empty segment in block path pattern {pattern!r}")
        if "**" in seg and seg != "**":
            raise ValueError(f"'**' must be a whole segment in {pattern!r}")
    return segments


def _match(segments: list[str], parts: list[str]) -> bool:
    if not segments:
        return not parts
    head, rest = segments[0], segments[1:]
    if head == "**":
        return any(_match(rest, parts[i:]) for i in range(len(parts) + 1))
    return bool(parts) and fnmatch.fnmatchcase(parts[0], head) and _match(rest, parts[1:])


def find_blocks(tree: SyntaxTree, path_pattern: str) -> list[BlockNode]:
    """Blocks whose path matches a glob; ``*`` spans one segment, ``**`` any number."""
    segments = _compile_pattern(path_pattern)
    return [b for b in iter_blocks(tree) if _match(segments, b.path[1:].split("/"))]


def extract_types(tree: SyntaxTree) -> list[TypeUsage]:
    usages = []
    for block in iter_blocks(tree):
        param = block.get("type")
        if param is None:
            continue
        usages.append(
            TypeUsage(
                block_path=block.path,
                family=block.path.split("/")[1],
                type_name=param.text_value,
                span=param.value_span,
            )
        )
    return usages


def replace_param_value(tree: SyntaxTree, block_path: str, key: str, value: str) -> SyntaxTree:
    """Return a tree whose *key* in the block at *block_path* holds *value* (raw text).

    Only the last occurrence of the key is edited. Spans of the returned tree are
    stale; callers needing positions should re-parse ``render(result)``.
    """

    def edit(block: BlockNode) -> BlockNode:
        if block.path == block_path:
            target = block.get(key)
            if target is None:
                raise KeyError(f"{block_path} has no parameter {key!r}")
            items = tuple(
                dataclasses.replace(item, value=value) if item is target else item
                for item in block.items
            )
            return dataclasses.replace(block, items=items)
        if block_path.startswith(block.path.rstrip("/") + "/"):
            items = tuple(edit(i) if isinstance(i, BlockNode) else i for i in block.items)
            return dataclasses.replace(block, items=items)
        return block

    return dataclasses.replace(tree, root=edit(tree.root))
