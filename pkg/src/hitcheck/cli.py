"""``hitcheck`` command line.

Exit codes: 0 on success, 1 when the checked condition fails (parse failure,
issues found, nonzero backend exit, precheck not passed), 2 for usage and
configuration errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import difflib
import json
import sys
from pathlib import Path

from . import __version__
from .executor import (
    ConfigurationError,
    ExecutionError,
    ExecutionRequest,
    ExecutorConfig,
    check_input,
    load_config,
    make_backend,
    mesh_only,
    run_input,
)
from .hit import ParseFailure, parse
from .ingest import ChunkingError, chunk_input, emit_jsonl, tree_to_dict
from .mutation import CLASSES, MutationError, manifest_entry, mutate
from .precheck import CandidateNotFoundError, PrecheckConfig, extract_final_input, precheck
from .registry import RegistryError, load_registry, registry_from_moose_json, suggest_types, validate_params, validate_types
from .repair import DEFAULT_BUDGET, repair
from .sanitize import sanitize

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _read(source: str) -> str:
    if source == "-":
        return sys.stdin.read()
    try:
        with open(source, encoding="utf-8", newline="") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {source}: {exc}") from exc


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _json_line(obj) -> None:
    sys.stdout.write(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")


def _failure_exit(failure: ParseFailure) -> int:
    _json_line({"parse_failure": failure.to_dict()})
    return EXIT_FAIL


def _load_registry(path: str):
    try:
        return load_registry(path)
    except (RegistryError, OSError, ValueError) as exc:
        raise UsageError(f"cannot load registry {path}: {exc}") from exc


def _executor_config(args) -> ExecutorConfig:
    base = load_config(args.config) if args.config else ExecutorConfig()
    overrides = {}
    if args.backend:
        overrides["backend"] = args.backend
    if args.moose_exe:
        overrides["moose_exe"] = args.moose_exe
    if args.remote_url:
        overrides["remote_url"] = args.remote_url
    if args.mock_script:
        overrides["mock_script"] = args.mock_script
    if args.time_limit is not None:
        overrides["time_limit"] = args.time_limit
    return dataclasses.replace(base, **overrides)


# -- subcommands ------------------------------------------------------------


def cmd_parse(args) -> int:
    result = parse(_read(args.file))
    if isinstance(result, ParseFailure):
        return _failure_exit(result)
    _json_line(tree_to_dict(result))
    return EXIT_OK


def cmd_sanitize(args) -> int:
    clean, report = sanitize(_read(args.file))
    _write(args.out, clean)
    if args.report:
        Path(args.report).write_text(json.dumps(report.to_dict(), indent=2, ensure_ascii=False), encoding="utf-8")
    return EXIT_OK


def cmd_repair(args) -> int:
    text = _read(args.file)
    outcome = repair(text, args.budget)
    if args.diff:
        sys.stdout.writelines(
            difflib.unified_diff(
                text.splitlines(keepends=True), outcome.text.splitlines(keepends=True),
                args.file, f"{args.file} (repaired)",
            )
        )
        _json_line({"actions": [a.to_dict() for a in outcome.actions], "success": outcome.success})
    else:
        _write(args.out, outcome.text)
    if args.report:
        Path(args.report).write_text(json.dumps(outcome.to_dict(), indent=2), encoding="utf-8")
    if not outcome.success:
        loc = outcome.final_failure.location
        print(f"repair failed ({outcome.error}) at {loc.start_line}:{loc.start_col}: "
              f"{outcome.final_failure.message}", file=sys.stderr)
    return EXIT_OK if outcome.success else EXIT_FAIL


def cmd_check_types(args) -> int:
    registry = _load_registry(args.registry)
    tree = parse(_read(args.file))
    if isinstance(tree, ParseFailure):
        return _failure_exit(tree)
    issues = validate_types(tree, registry)
    for issue in issues:
        record = issue.to_dict()
        if args.suggest:
            record["candidates"] = [c.to_dict() for c in suggest_types(issue, registry, args.suggest)]
        _json_line(record)
    return EXIT_FAIL if issues else EXIT_OK


def cmd_check_params(args) -> int:
    registry = _load_registry(args.registry)
    tree = parse(_read(args.file))
    if isinstance(tree, ParseFailure):
        return _failure_exit(tree)
    issues = validate_params(tree, registry)
    for issue in issues:
        _json_line(issue.to_dict())
    return EXIT_FAIL if issues else EXIT_OK


_OPS = {"check-input": ("check_input", check_input), "mesh-only": ("mesh_only", mesh_only),
        "run": ("run", run_input)}


def cmd_execute(args) -> int:
    mode, op = _OPS[args.command]
    config = _executor_config(args)
    backend = make_backend(config)
    request = ExecutionRequest(
        Path(args.file), mode, config.time_limit,
        Path(args.working_dir) if args.working_dir else None, tuple(args.extra),
    )
    result = op(backend, request)
    _json_line(result.to_dict())
    return EXIT_OK if result.exit_code == 0 else EXIT_FAIL


def cmd_precheck(args) -> int:
    text = _read(args.file)
    uses_backend = any([args.config, args.backend, args.moose_exe, args.remote_url, args.mock_script])
    executor = _executor_config(args) if uses_backend else None
    config = PrecheckConfig(
        max_iterations=args.max_iter,
        repair_budget=args.repair_budget,
        auto_substitute=not args.no_substitute,
        run_smoke=args.smoke,
        check_types=not args.no_types,
        registry_path=args.registry,
        executor=executor,
        time_limit=executor.time_limit if executor else PrecheckConfig.time_limit,
        working_dir=args.working_dir,
    )
    report = precheck(text, config)
    if args.report:
        Path(args.report).write_text(
            json.dumps(report.to_dict(), indent=2, ensure_ascii=False), encoding="utf-8"
        )
    _write(args.out, report.final_text)
    status = "passed" if report.passed else f"failed ({report.stop_reason})"
    print(f"precheck {status} after {report.iterations_used} iteration(s)", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_chunk(args) -> int:
    pairs = []
    for path in args.files:
        try:
            pairs.append(chunk_input(_read(path), path, docs_dir=args.docs_dir))
        except ChunkingError as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            return EXIT_FAIL
    if args.out and args.out != "-":
        with open(args.out, "w", encoding="utf-8") as fh:
            emit_jsonl(pairs, fh)
    else:
        emit_jsonl(pairs, sys.stdout)
    return EXIT_OK


def cmd_mutate(args) -> int:
    registry = _load_registry(args.registry) if args.registry else None
    try:
        text, mutation = mutate(_read(args.file), args.mutation_class, args.seed, kind=args.kind,
                                registry=registry)
    except MutationError as exc:
        print(f"cannot mutate: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _write(args.out, text)
    record = {**mutation.to_dict(), "manifest": manifest_entry(args.file, mutation)}
    if args.record:
        Path(args.record).write_text(json.dumps(record, indent=2, ensure_ascii=False), encoding="utf-8")
    else:
        print(json.dumps(record, ensure_ascii=False), file=sys.stderr)
    return EXIT_OK


def cmd_extract(args) -> int:
    try:
        text = extract_final_input(_read(args.transcript), args.workspace)
    except CandidateNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_FAIL
    _write(args.out, text)
    return EXIT_OK


def cmd_convert_registry(args) -> int:
    try:
        dump = json.loads(_read(args.dump))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{args.dump} is not JSON: {exc}") from exc
    registry = registry_from_moose_json(dump, args.app)
    _write(args.out, json.dumps(registry.to_dict(), indent=1) + "\n")
    return EXIT_OK


# -- argument parsing -------------------------------------------------------


def _add_backend_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("execution backend")
    g.add_argument("--config", help="executor config JSON file")
    g.add_argument("--backend", choices=("local", "remote", "mock"))
    g.add_argument("--moose-exe", help="application executable (local backend)")
    g.add_argument("--remote-url", help="JSON-RPC endpoint (remote backend)")
    g.add_argument("--mock-script", help="mock behaviour table (mock backend)")
    g.add_argument("--time-limit", type=float, help="seconds before the run is killed")
    g.add_argument("--working-dir", help="directory the run executes in")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hitcheck", description="Validate and repair MOOSE HIT input files.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a file and print its tree as JSON")
    p.add_argument("file")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("sanitize", help="normalize characters, with an audit report")
    p.add_argument("file")
    p.add_argument("--out")
    p.add_argument("--report", help="write the sanitation report JSON here")
    p.set_defaults(func=cmd_sanitize)

    p = sub.add_parser("repair", help="apply bounded grammar repairs")
    p.add_argument("file")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--diff", action="store_true", help="print a unified diff instead of the text")
    p.add_argument("--out")
    p.add_argument("--report")
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser("check-types", help="report type names missing from the registry")
    p.add_argument("file")
    p.add_argument("--registry", required=True)
    p.add_argument("--suggest", type=int, metavar="K", default=0, help="attach the top K candidates")
    p.set_defaults(func=cmd_check_types)

    p = sub.add_parser("check-params", help="report missing or unknown parameters")
    p.add_argument("file")
    p.add_argument("--registry", required=True)
    p.set_defaults(func=cmd_check_params)

    for name, help_text in (("check-input", "validate with --check-input"),
                            ("mesh-only", "build the mesh only"),
                            ("run", "run the input; exit 0 iff the run exits 0")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("file")
        p.add_argument("extra", nargs="*", help="extra arguments for the application (after --)")
        _add_backend_args(p)
        p.set_defaults(func=cmd_execute)

    p = sub.add_parser("precheck", help="run the full bounded precheck pipeline")
    p.add_argument("file", nargs="?", default="-")
    p.add_argument("--registry")
    p.add_argument("--max-iter", type=int, default=PrecheckConfig.max_iterations)
    p.add_argument("--repair-budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--smoke", action="store_true", help="also run the input after a passing check")
    p.add_argument("--no-types", action="store_true", help="skip type and parameter checks")
    p.add_argument("--no-substitute", action="store_true", help="never auto-correct type names")
    p.add_argument("--report", help="write the precheck report JSON here")
    p.add_argument("--out", help="write the final text here instead of stdout")
    _add_backend_args(p)
    p.set_defaults(func=cmd_precheck)

    p = sub.add_parser("chunk", help="emit parent/child retrieval documents as JSON lines")
    p.add_argument("files", nargs="+")
    p.add_argument("--out")
    p.add_argument("--docs-dir")
    p.set_defaults(func=cmd_chunk)

    p = sub.add_parser("mutate", help="derive a seeded malformed variant")
    p.add_argument("file")
    p.add_argument("--class", dest="mutation_class", required=True, choices=CLASSES)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--kind")
    p.add_argument("--registry", help="keep type typos off other valid names")
    p.add_argument("--out")
    p.add_argument("--record", help="write the mutation record JSON here (default: stderr)")
    p.set_defaults(func=cmd_mutate)

    p = sub.add_parser("extract", help="pull the last moose-fenced block out of a transcript")
    p.add_argument("transcript")
    p.add_argument("--workspace", help="fallback file, or directory holding current.i")
    p.add_argument("--out")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("convert-registry", help="build a registry from a MOOSE --json dump")
    p.add_argument("dump")
    p.add_argument("--app", default="moose")
    p.add_argument("--out")
    p.set_defaults(func=cmd_convert_registry)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigurationError, ValueError) as exc:
        print(f"hitcheck: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ExecutionError as exc:
        print(f"hitcheck: execution error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
