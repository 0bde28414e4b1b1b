"""Block-aligned chunking of HIT inputs into parent/child retrieval documents.

One parent document holds the whole file; every block node, top-level or
nested, becomes one child whose text is the verbatim block source (so an
enclosing block's child also contains its descendants).

JSON lines emitted by :func:`emit_jsonl`, parent first::

    {"id": "<sha256 hex>", "parent_id": null, "kind": "parent", "text": "...",
     "metadata": {"source_path": "...", "summary_slot": "", "systems": [...],
                  "types_used": [{"block_path", "family", "type_name", "line"}]}}
    {"id": "...", "parent_id": "<parent id>", "kind": "child", "text": "[Mesh]...[]",
     "metadata": {"block_path": "/Mesh", "block_name": "Mesh", "params": ["type"],
                  "types": ["GeneratedMesh"], "span": {"start_line": 1, "end_line": 3}}}

``object_docs`` (type name to markdown snippet) is added to both kinds of
metadata when a docs directory is supplied.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path, PurePath
from typing import IO, Iterable

from .hit import BlockNode, ParseFailure, SyntaxTree, extract_types, iter_blocks, parse

__all__ = [
    "ChildDoc",
    "ChunkingError",
    "EmitError",
    "ParentDoc",
    "chunk_input",
    "emit_jsonl",
    "read_jsonl",
    "tree_to_dict",
]

DOC_SNIPPET_CHARS = 800


class ChunkingError(ValueError):
    def __init__(self, failure: ParseFailure):
        loc = failure.location
        super().__init__(f"cannot chunk unparsable input ({loc.start_line}:{loc.start_col}: {failure.message})")
        self.failure = failure


class EmitError(OSError):
    def __init__(self, doc_id: str, cause: Exception):
        super().__init__(f"failed writing document {doc_id}: {cause}")
        self.doc_id = doc_id


@dataclass(frozen=True)
class ParentDoc:
    document_id: str
    source_path: str
    text: str
    metadata: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ChildDoc:
    document_id: str
    parent_id: str
    text: str
    metadata: dict = field(default_factory=dict)


def _digest(*parts: str) -> str:
    h = hashlib.sha256()
    for i, part in enumerate(parts):
        if i:
            h.update(b"\0")
        h.update(part.encode("utf-8"))
    return h.hexdigest()


def _normalize_path(path) -> str:
    return PurePath(str(path)).as_posix() if str(path) else ""


def _subtree_types(block: BlockNode) -> list[str]:
    names = []
    for b in [block, *iter_blocks(block)]:
        p = b.get("type")
        if p is not None:
            names.append(p.text_value)
    return names


def _object_docs(type_names: Iterable[str], docs_dir) -> dict:
    if docs_dir is None:
        return {}
    docs = {}
    for name in dict.fromkeys(type_names):
        path = Path(docs_dir) / f"{name}.md"
        if path.is_file():
            docs[name] = path.read_text(encoding="utf-8")[:DOC_SNIPPET_CHARS]
    return docs


def chunk_input(
    text: str,
    path="",
    *,
    summary: str = "",
    docs_dir=None,
) -> tuple[ParentDoc, list[ChildDoc]]:
    """Chunk a parsable input. Raises :class:`ChunkingError` otherwise."""
    tree = parse(text)
    if isinstance(tree, ParseFailure):
        raise ChunkingError(tree)
    source_path = _normalize_path(path)
    parent_id = _digest(source_path, text)
    usages = extract_types(tree)
    parent_meta = {
        "source_path": source_path,
        "summary_slot": summary,
        "systems": [b.name for b in tree.root.children],
        "types_used": [
            {
                "block_path": u.block_path,
                "family": u.family,
                "type_name": u.type_name,
                "line": u.span.start_line,
            }
            for u in usages
        ],
    }
    docs = _object_docs((u.type_name for u in usages), docs_dir)
    if docs:
        parent_meta["object_docs"] = docs
    parent = ParentDoc(parent_id, source_path, text, parent_meta)

    children = []
    for ordinal, block in enumerate(iter_blocks(tree)):
        span = block.span
        types = _subtree_types(block)
        meta = {
            "block_path": block.path,
            "block_name": block.name,
            "params": [p.key for p in block.params],
            "types": types,
            "span": {"start_line": span.start_line, "end_line": span.end_line},
        }
        child_docs = {k: v for k, v in docs.items() if k in types}
        if child_docs:
            meta["object_docs"] = child_docs
        children.append(
            ChildDoc(
                _digest(parent_id, block.path, str(ordinal)),
                parent_id,
                text[span.offset:span.end_offset],
                meta,
            )
        )
    return parent, children


def _record(doc) -> dict:
    if isinstance(doc, ParentDoc):
        return {"id": doc.document_id, "parent_id": None, "kind": "parent", "text": doc.text,
                "metadata": doc.metadata}
    return {"id": doc.document_id, "parent_id": doc.parent_id, "kind": "child", "text": doc.text,
            "metadata": doc.metadata}


def emit_jsonl(docs: Iterable, fp: IO[str] | None = None) -> str:
    """Serialize documents as JSON lines; also write them to *fp* when given.

    *docs* may be a flat iterable of documents or ``(parent, children)`` pairs as
    returned by :func:`chunk_input`.
    """
    flat = []
    for item in docs:
        if isinstance(item, tuple):
            parent, children = item
            flat.append(parent)
            flat.extend(children)
        else:
            flat.append(item)
    lines = []
    for doc in flat:
        line = json.dumps(_record(doc), ensure_ascii=False, sort_keys=True) + "\n"
        if fp is not None:
            try:
                fp.write(line)
            except (OSError, ValueError) as exc:
                raise EmitError(doc.document_id, exc) from exc
        lines.append(line)
    return "".join(lines)


def read_jsonl(stream: str | IO[str]) -> list:
    text = stream if isinstance(stream, str) else stream.read()
    docs = []
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        if rec["kind"] == "parent":
            meta = rec["metadata"]
            docs.append(ParentDoc(rec["id"], meta.get("source_path", ""), rec["text"], meta))
        else:
            docs.append(ChildDoc(rec["id"], rec["parent_id"], rec["text"], rec["metadata"]))
    return docs


def tree_to_dict(tree: SyntaxTree) -> dict:
    """JSON form of a syntax tree, as printed by ``hitcheck parse``."""

    def block(node: BlockNode) -> dict:
        return {
            "name": node.name,
            "path": node.path,
            "span": node.span.to_dict(),
            "leading_comments": node.leading_comments,
            "params": [
                {"key": p.key, "value": p.value, "value_kind": p.value_kind, "span": p.span.to_dict()}
                for p in node.params
            ],
            "children": [block(c) for c in node.children],
        }

    return {
        "root": block(tree.root),
        "diagnostics": [
            {"severity": d.severity, "message": d.message, "span": d.span.to_dict()}
            for d in tree.diagnostics
        ],
    }
