"""
Fixing a broken input, one stage at a time
==========================================

A hand-edited input picked up three faults: a no-break space pasted from a
web page, a missing closing ``[]`` and a misspelled kernel name. We walk it
through each stage by hand, then let ``precheck`` do the same in one call.
"""

from pathlib import Path

from hitcheck import (
    PrecheckConfig,
    load_registry,
    parse,
    precheck,
    repair,
    sanitize,
    suggest_types,
    validate_types,
)
from hitcheck.executor import MockBackend

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"
registry = load_registry(DATA / "registry.json")

good = """[Mesh]
  type = GeneratedMesh
  dim = 1
[]
[Variables]
  [u]
  []
[]
[Kernels]
  [diff]
    type = Diffusion
    variable = u
  []
[]
"""
broken = good.replace("dim = 1", "dim\u00a0= 1").replace("Diffusion", "Diffusionn")
broken = broken[: broken.rindex("[]")]

# The raw text does not even parse: the no-break space is not whitespace to HIT.
failure = parse(broken)
print("raw parse:", failure.expected, "at line", failure.location.start_line)

# Stage 1: character cleanup, with an audit trail.
clean, report = sanitize(broken)
for edit in report.edits:
    print(f"sanitize: {edit.unicode_name} at {edit.line}:{edit.col} -> {edit.replacement!r}")

# Stage 2: grammar repair. One rule per iteration, each edit recorded.
outcome = repair(clean)
for action in outcome.actions:
    print(f"repair: {action.rule} at line {action.location.start_line}, inserted {action.after!r}")

# Stage 3: the type name is checked against the kernels the application knows.
(issue,) = validate_types(parse(outcome.text), registry)
ranked = suggest_types(issue, registry, k=3)
print("type:", issue.usage.type_name, "->", [(c.name, round(c.score, 3)) for c in ranked])

# All of the above, plus a backend check. The mock accepts only the good input.
backend = MockBackend(
    {
        "rules": [{"equals_ignoring_whitespace": good, "exit_code": 0}],
        "default": {"exit_code": 1, "stderr": "*** ERROR\nsomething is still wrong\n"},
    }
)
result = precheck(broken, PrecheckConfig(max_iterations=3), registry=registry, backend=backend)
print("precheck passed:", result.passed, "in", result.iterations_used, "iteration(s)")
print("substitutions:", [(s.old, s.new) for s in result.substitutions])
assert result.final_text == good
