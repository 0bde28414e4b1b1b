"""
Ranking corrections for a misspelled object name
================================================

Suggestions come only from the family the block lives in, and the score mixes
edit distance with overlap of camel-case tokens. A correction is applied
automatically only when it is both strong and clearly ahead of the runner-up.
"""

from pathlib import Path

from hitcheck import load_registry, parse, validate_types, suggest_types
from hitcheck.registry import is_confident

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"
registry = load_registry(DATA / "registry.json")

queries = [
    ("Kernels", "Difusion"),
    ("Kernels", "TimeDerivitive"),
    ("BCs", "DirichletBc"),
    ("Materials", "GenericConstantMaterail"),
    ("Preconditioning", "SPM"),
    ("Kernels", "GeneratedMeshGenerator"),  # right name, wrong family
]

for family, name in queries:
    text = f"[{family}]\n  [obj]\n    type = {name}\n  []\n[]\n"
    (issue,) = validate_types(parse(text), registry)
    ranked = suggest_types(issue, registry, k=3)
    verdict = "auto" if is_confident(ranked[0], ranked) else "ask"
    shown = ", ".join(f"{c.name} {c.score:.2f}" for c in ranked)
    print(f"{family:16} {name:24} [{issue.kind}] {verdict:4} {shown}")
