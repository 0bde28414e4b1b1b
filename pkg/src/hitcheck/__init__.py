"""Validation and repair toolkit for MOOSE HIT input files."""

from .hit import (
    BlockNode,
    Diagnostic,
    HitSyntaxError,
    Param,
    ParseFailure,
    SourceSpan,
    SyntaxTree,
    TypeUsage,
    extract_types,
    find_blocks,
    iter_blocks,
    parse,
    parse_or_raise,
    render,
)
from .ingest import ChildDoc, ParentDoc, chunk_input, emit_jsonl, read_jsonl
from .mutation import Mutation, compound_mutation, mutate
from .precheck import PrecheckConfig, PrecheckReport, StageOutcome, extract_final_input, precheck
from .registry import (
    RegistryError,
    SubstitutionRefused,
    SyntaxRegistry,
    TypeCandidate,
    TypeIssue,
    ParamIssue,
    apply_substitution,
    load_registry,
    suggest_types,
    validate_params,
    validate_types,
)
from .repair import RepairOutcome, repair
from .sanitize import SanitationEdit, SanitationReport, apply_edits, sanitize

__version__ = "0.1.0"

__all__ = [
    "BlockNode",
    "ChildDoc",
    "Diagnostic",
    "HitSyntaxError",
    "Mutation",
    "Param",
    "ParamIssue",
    "ParentDoc",
    "ParseFailure",
    "PrecheckConfig",
    "PrecheckReport",
    "RegistryError",
    "RepairOutcome",
    "SanitationEdit",
    "SanitationReport",
    "SourceSpan",
    "SubstitutionRefused",
    "StageOutcome",
    "SyntaxRegistry",
    "SyntaxTree",
    "TypeCandidate",
    "TypeIssue",
    "TypeUsage",
    "apply_edits",
    "apply_substitution",
    "chunk_input",
    "compound_mutation",
    "emit_jsonl",
    "extract_final_input",
    "extract_types",
    "find_blocks",
    "iter_blocks",
    "load_registry",
    "mutate",
    "parse",
    "parse_or_raise",
    "precheck",
    "read_jsonl",
    "render",
    "repair",
    "sanitize",
    "suggest_types",
    "validate_params",
    "validate_types",
]
