"""
Chunking inputs for retrieval
=============================

Every file becomes one parent document plus one child per block. Children
carry their block path and the object types inside, so a search hit on a
kernel can be traced back to the whole input.
"""

import io
from pathlib import Path

from hitcheck import chunk_input, emit_jsonl, read_jsonl

CORPUS = Path(__file__).resolve().parent.parent / "tests" / "data" / "corpus"

docs = []
for path in sorted(CORPUS.glob("*.i"))[:3]:
    parent, children = chunk_input(path.read_text(encoding="utf-8"), path.relative_to(CORPUS.parent))
    docs.append((parent, children))
    print(parent.source_path, "->", len(children), "children")
    for child in children[:4]:
        print("   ", child.metadata["block_path"], child.metadata["types"])

stream = io.StringIO()
emit_jsonl(docs, stream)
back = read_jsonl(stream.getvalue())
print(len(back), "documents written and read back; first is a", type(back[0]).__name__)
