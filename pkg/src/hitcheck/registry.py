"""Application syntax registry and checks of object ``type`` names and parameters.

Registry file format (JSON)::

    {"app": "moose",
     "families": {
        "Kernels": [{"name": "Diffusion", "description": "...",
                     "parameters": {"variable": {"required": true, "value_hint": "NonlinearVariableName"}}}],
        "BCs": [...]}}

``app``, ``description`` and ``parameters`` are optional.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import jsonschema

from .hit import IDENT_RE, ParseFailure, SyntaxTree, TypeUsage, extract_types, iter_blocks, parse, render
from .similarity import lexical_similarity

__all__ = [
    "AUTO_MARGIN",
    "AUTO_THRESHOLD",
    "BUILTIN_PARAMS",
    "ObjectEntry",
    "ParamIssue",
    "ParamSpec",
    "RegistryError",
    "SubstitutionRefused",
    "SyntaxRegistry",
    "TypeCandidate",
    "TypeIssue",
    "apply_substitution",
    "load_registry",
    "registry_from_moose_json",
    "suggest_types",
    "validate_params",
    "validate_types",
]

AUTO_THRESHOLD = 0.85
AUTO_MARGIN = 0.05
BUILTIN_PARAMS = frozenset({"type", "active", "inactive"})

REGISTRY_SCHEMA = {
    "type": "object",
    "required": ["families"],
    "properties": {
        "app": {"type": "string"},
        "families": {
            "type": "object",
            "minProperties": 1,
            "propertyNames": {"pattern": r"^[A-Za-z0-9_:\-]+$"},
            "additionalProperties": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["name"],
                    "properties": {
                        "name": {"type": "string", "pattern": r"^[A-Za-z0-9_:\-]+$"},
                        "description": {"type": "string"},
                        "parameters": {
                            "type": "object",
                            "additionalProperties": {
                                "type": "object",
                                "properties": {
                                    "required": {"type": "boolean"},
                                    "value_hint": {"type": "string"},
                                },
                            },
                        },
                    },
                },
            },
        },
    },
}


class RegistryError(ValueError):
    """The registry file is malformed; ``path`` locates the offending field."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass(frozen=True)
class ParamSpec:
    key: str
    required: bool = False
    value_hint: str = ""


@dataclass(frozen=True)
class ObjectEntry:
    name: str
    description: str = ""
    parameters: Mapping[str, ParamSpec] = field(default_factory=dict)


@dataclass(frozen=True)
class SyntaxRegistry:
    app_name: str
    families: Mapping[str, tuple[ObjectEntry, ...]]

    def names(self, family: str) -> list[str]:
        return [e.name for e in self.families.get(family, ())]

    def lookup(self, family: str, name: str) -> ObjectEntry | None:
        for entry in self.families.get(family, ()):
            if entry.name == name:
                return entry
        return None

    def families_of(self, name: str) -> list[str]:
        return [f for f, entries in self.families.items() if any(e.name == name for e in entries)]

    def to_dict(self) -> dict:
        return {
            "app": self.app_name,
            "families": {
                family: [
                    {
                        "name": e.name,
                        "description": e.description,
                        "parameters": {
                            k: {"required": s.required, "value_hint": s.value_hint}
                            for k, s in e.parameters.items()
                        },
                    }
                    for e in entries
                ]
                for family, entries in self.families.items()
            },
        }


def _build(data: Mapping) -> SyntaxRegistry:
    try:
        jsonschema.validate(data, REGISTRY_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/" + "/".join(str(p) for p in exc.absolute_path)
        raise RegistryError(exc.message, path) from None
    families = {}
    for family, objects in data["families"].items():
        seen = set()
        entries = []
        for i, obj in enumerate(objects):
            if obj["name"] in seen:
                raise RegistryError(
                    f"duplicate object {obj['name']!r} in family {family!r}",
                    f"/families/{family}/{i}/name",
                )
            seen.add(obj["name"])
            params = {
                key: ParamSpec(key, spec.get("required", False), spec.get("value_hint", ""))
                for key, spec in obj.get("parameters", {}).items()
            }
            entries.append(ObjectEntry(obj["name"], obj.get("description", ""), params))
        families[family] = tuple(entries)
    return SyntaxRegistry(data.get("app", ""), families)


def load_registry(source) -> SyntaxRegistry:
    """Load a registry from a path, an open file, or an already-decoded mapping."""
    if isinstance(source, Mapping):
        return _build(source)
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            data = json.load(fh)
    else:
        data = json.load(source)
    if not isinstance(data, Mapping):
        raise RegistryError("registry must be a JSON object", "/")
    return _build(data)


def registry_from_moose_json(dump: Mapping, app: str = "moose") -> SyntaxRegistry:
    """Convert a MOOSE ``--json`` syntax dump into a registry.

    Objects are taken from each top-level system's ``star/subblock_types``
    (``[Kernels/*]`` style) and ``types`` (``[Mesh]`` style) tables; systems
    with neither are skipped.
    """
    families: dict[str, list[dict]] = {}
    for system, block in dump.get("blocks", {}).items():
        tables = [
            (block.get("star") or {}).get("subblock_types") or {},
            block.get("types") or {},
        ]
        objects: dict[str, dict] = {}
        for table in tables:
            for name, obj in table.items():
                if name in objects or not IDENT_RE.fullmatch(name):
                    continue
                params = {}
                for key, spec in (obj.get("parameters") or {}).items():
                    params[key] = {
                        "required": bool(spec.get("required", False)),
                        "value_hint": str(spec.get("cpp_type", "")),
                    }
                objects[name] = {
                    "name": name,
                    "description": str(obj.get("description", "")).strip(),
                    "parameters": params,
                }
        if objects:
            families[system] = list(objects.values())
    return _build({"app": app, "families": families})


@dataclass(frozen=True)
class TypeCandidate:
    name: str
    family: str
    score: float
    lexical: float
    semantic: float = 0.0

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class TypeIssue:
    usage: TypeUsage
    kind: str  # "unknown_type" | "wrong_family"
    candidates: tuple[TypeCandidate, ...] = ()

    def to_dict(self) -> dict:
        return {
            "usage": self.usage.to_dict(),
            "kind": self.kind,
            "candidates": [c.to_dict() for c in self.candidates],
        }


@dataclass(frozen=True)
class ParamIssue:
    block_path: str
    kind: str  # "missing_required" | "unknown_param"
    key: str
    object: str

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def validate_types(tree: SyntaxTree, registry: SyntaxRegistry) -> list[TypeIssue]:
    """One issue per ``type`` value that is not an exact name in its block's family.

    Usages in families the registry does not describe are not judged.
    """
    issues = []
    for usage in extract_types(tree):
        if usage.family not in registry.families:
            continue
        if usage.type_name in registry.names(usage.family):
            continue
        kind = "wrong_family" if registry.families_of(usage.type_name) else "unknown_type"
        issues.append(TypeIssue(usage, kind))
    return issues


SemanticScorer = Callable[[str, ObjectEntry], float]


def suggest_types(
    issue: TypeIssue,
    registry: SyntaxRegistry,
    k: int = 5,
    *,
    semantic: SemanticScorer | None = None,
    semantic_weight: float = 0.0,
    exclude: Iterable[str] = (),
) -> list[TypeCandidate]:
    """Rank replacement names from the issue's own family.

    ``score = (1 - w) * lexical + w * semantic``; with no semantic scorer the
    weight is folded into the lexical part.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if semantic is None:
        semantic_weight = 0.0
    if not 0.0 <= semantic_weight <= 1.0:
        raise ValueError("semantic_weight must lie in [0, 1]")
    skip = set(exclude)
    query = issue.usage.type_name
    family = issue.usage.family
    candidates = []
    for entry in registry.families.get(family, ()):
        if entry.name in skip:
            continue
        lex = lexical_similarity(query, entry.name)
        sem = min(1.0, max(0.0, float(semantic(query, entry)))) if semantic else 0.0
        score = (1.0 - semantic_weight) * lex + semantic_weight * sem
        candidates.append(TypeCandidate(entry.name, family, score, lex, sem))
    candidates.sort(key=lambda c: (-c.score, c.name))
    return candidates[:k]


class SubstitutionRefused(Exception):
    """Confidence too low for an automatic substitution; carries the ranked list."""

    def __init__(self, issue: TypeIssue, candidates: list[TypeCandidate], reason: str):
        super().__init__(reason)
        self.issue = issue
        self.candidates = candidates


def is_confident(
    candidate: TypeCandidate,
    ranked: list[TypeCandidate],
    threshold: float = AUTO_THRESHOLD,
    margin: float = AUTO_MARGIN,
) -> bool:
    runner_up = max((c.score for c in ranked if c.name != candidate.name), default=0.0)
    return candidate.score >= threshold and candidate.score - runner_up >= margin


def apply_substitution(
    tree: SyntaxTree,
    issue: TypeIssue,
    candidate: TypeCandidate,
    *,
    force: bool = False,
    threshold: float = AUTO_THRESHOLD,
    margin: float = AUTO_MARGIN,
) -> SyntaxTree:
    """Replace the ``type`` value flagged by *issue* with *candidate*'s name.

    Only the bytes of the value change; quoting is kept. Raises
    :class:`SubstitutionRefused` when the candidate is not confident enough and
    *force* is false.
    """
    ranked = list(issue.candidates) or [candidate]
    if not force and not is_confident(candidate, ranked, threshold, margin):
        raise SubstitutionRefused(
            issue,
            ranked,
            f"{candidate.name!r} (score {candidate.score:.2f}) is not a confident "
            f"replacement for {issue.usage.type_name!r}",
        )
    text = render(tree)
    span = issue.usage.span
    raw = text[span.offset:span.end_offset]
    quote = raw[0] if raw[:1] in ("'", '"') else ""
    new_text = text[:span.offset] + quote + candidate.name + quote + text[span.end_offset:]
    result = parse(new_text)
    if isinstance(result, ParseFailure):
        raise ValueError(f"substitution produced unparsable text: {result.message}")
    return result


def validate_params(tree: SyntaxTree, registry: SyntaxRegistry) -> list[ParamIssue]:
    """Check parameter keys of blocks whose type is an exact registry name.

    Objects with no recorded parameters are not checked for unknown keys.
    Keys set in a top-level ``[GlobalParams]`` block count as supplied.
    """
    global_keys = {p.key for b in tree.root.children if b.name == "GlobalParams" for p in b.params}
    issues = []
    for block in iter_blocks(tree):
        type_param = block.get("type")
        if type_param is None:
            continue
        family = block.path.split("/")[1]
        entry = registry.lookup(family, type_param.text_value)
        if entry is None or not entry.parameters:
            continue
        present = [p.key for p in block.params]
        for key, spec in entry.parameters.items():
            if spec.required and key not in present and key not in global_keys:
                issues.append(ParamIssue(block.path, "missing_required", key, entry.name))
        for key in present:
            if key in BUILTIN_PARAMS or key.startswith("!") or key in entry.parameters:
                continue
            issues.append(ParamIssue(block.path, "unknown_param", key, entry.name))
    return issues
