"""
A seeded corpus of broken inputs
================================

Each mutation is reproducible from (input, class, seed). Here we break every
corpus file a few times per structure kind and count how often repair gets a
parsable input back.
"""

from collections import Counter
from pathlib import Path

from hitcheck import mutate, repair
from hitcheck.mutation import KINDS, MutationError, manifest_entry

CORPUS = Path(__file__).resolve().parent.parent / "tests" / "data" / "corpus"
files = sorted(CORPUS.glob("*.i"))

tally = Counter()
manifest = []
for kind in KINDS["structure"]:
    for seed in range(5):
        for path in files:
            text = path.read_text(encoding="utf-8")
            try:
                broken, mutation = mutate(text, "structure", seed, kind=kind)
            except MutationError:
                continue
            manifest.append(manifest_entry(path.name, mutation))
            tally[kind, repair(broken).success] += 1

for kind in KINDS["structure"]:
    ok, bad = tally[kind, True], tally[kind, False]
    print(f"{kind:22} repaired {ok}/{ok + bad}")
print("first manifest entry:", manifest[0])
