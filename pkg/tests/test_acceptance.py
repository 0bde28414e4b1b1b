"""Acceptance criteria, one test each.

Every test records a ``ACCEPTANCE <n> PASS|FAIL <detail>`` line, printed in the
terminal summary, before asserting.
"""

from __future__ import annotations

import json
import random
import time

import pytest
from rapidfuzz.distance import DamerauLevenshtein

from hitcheck import (
    ParseFailure,
    PrecheckConfig,
    chunk_input,
    compound_mutation,
    extract_final_input,
    iter_blocks,
    mutate,
    parse,
    precheck,
    render,
    repair,
    sanitize,
    suggest_types,
    validate_types,
)
from hitcheck.cli import main as cli_main
from hitcheck.executor import (
    LocalBackend,
    MockBackend,
    ReferenceServer,
    RemoteBackend,
    ExecutionRequest,
    mock_executable,
    run_input,
)
from hitcheck.mutation import KINDS, MutationError, SplitMix64
from hitcheck.precheck import CandidateNotFoundError
from hitcheck.sanitize import apply_edits, normalize_newlines
from hitcheck.similarity import token_jaccard

from checks import local, preserved_blocks, squash
from conftest import ACCEPTANCE_LINES
from oracles import last_moose_fence, scan_forbidden


def report(n: int, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {n} {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def accept_original(text: str) -> MockBackend:
    return MockBackend(
        {
            "rules": [{"equals_ignoring_whitespace": text, "exit_code": 0}],
            "default": {"exit_code": 1, "stderr": "*** ERROR\ninput differs from the reference\n"},
        }
    )


# 1 ---------------------------------------------------------------------------


def test_1_round_trip(corpus):
    legacy = sum("[./" in t and "[../]" in t for t in corpus.values())
    start = time.perf_counter()
    bad = [name for name, t in corpus.items() if isinstance(parse(t), ParseFailure) or render(parse(t)) != t]
    elapsed = time.perf_counter() - start
    ok = len(corpus) >= 20 and legacy > 0 and not bad and elapsed < 1.0
    report(1, ok, f"{len(corpus) - len(bad)}/{len(corpus)} files byte-exact, {legacy} with legacy blocks, "
                  f"{elapsed:.3f}s (limit 1s)")
    assert ok, bad


# 2 ---------------------------------------------------------------------------

_POOL = (
    list("abcxyz019 =[]'\"#._-/\t\n")
    + ["\r\n", "\r", "\u00a0", "\u202f", "\u200b", "\u200c", "\u200d", "\ufeff", "\u2018", "\u2019",
       "\u201c", "\u201d", "\u2013", "\u2014", "\u2212", "\x00", "\x07", "\x1b", "\x7f", "\x85", "\x9f",
       "\ufb01", "\u00bd", "\u2460", "\uff21", "e\u0301", "\u1100\u1161", "\u00e9", "\u03a9", "\u2126",
       "\U0001f600", "\u3000", "\u0301"]
)


def _generated_texts(n: int, seed: int = 2024):
    rng = random.Random(seed)
    for _ in range(n):
        yield "".join(rng.choice(_POOL) for _ in range(rng.randint(0, 60)))


def test_2_sanitizer_properties():
    start = time.perf_counter()
    failures = {"idempotence": 0, "alphabet": 0, "replay": 0}
    count = 0
    for raw in _generated_texts(10_000):
        count += 1
        clean, rep = sanitize(raw)
        again, rep2 = sanitize(clean)
        if again != clean or rep2.edits:
            failures["idempotence"] += 1
        if scan_forbidden(clean):
            failures["alphabet"] += 1
        if apply_edits(normalize_newlines(raw)[0], rep.edits) != clean:
            failures["replay"] += 1
    elapsed = time.perf_counter() - start
    ok = count == 10_000 and not any(failures.values()) and elapsed < 10.0
    report(2, ok, f"{count} texts, violations {failures}, {elapsed:.2f}s (limit 10s)")
    assert ok


# 3 ---------------------------------------------------------------------------


def test_3_repair_recovery(corpus):
    texts = list(corpus.items())
    per_kind = {}
    all_failures = []
    locality_ok = True
    preservation_bad = 0
    for kind in KINDS["structure"]:
        cases = ok = 0
        seed = 0
        while cases < 200:
            name, text = texts[seed % len(texts)]
            seed += 1
            try:
                broken, m = mutate(text, "structure", seed, kind=kind)
            except MutationError:
                continue
            cases += 1
            outcome = repair(broken, budget=8)
            if outcome.success and not isinstance(parse(outcome.text), ParseFailure):
                ok += 1
                locality_ok &= local(outcome)
                preservation_bad += len(preserved_blocks(broken, outcome)[1])
            else:
                all_failures.append(f"{m.id}@{name}:{outcome.error}")
        per_kind[kind] = (ok, cases)
    rates = {k: ok / n for k, (ok, n) in per_kind.items()}
    passed = all(r >= 0.95 for r in rates.values()) and locality_ok and min(n for _, n in per_kind.values()) >= 200
    detail = ", ".join(f"{k} {ok}/{n}" for k, (ok, n) in per_kind.items())
    report(3, passed, f"{detail}; locality {'100%' if locality_ok else 'VIOLATED'}; "
                      f"preservation violations {preservation_bad}; failures {all_failures or 'none'}")
    assert passed


# 4 ---------------------------------------------------------------------------


def _oracle_rank(query: str, names: list[str]) -> list[str]:
    """Brute-force score of every family member, independent edit distance."""

    def score(name):
        edit = 1.0 - DamerauLevenshtein.distance(query, name) / max(len(query), len(name))
        return 0.5 * edit + 0.5 * token_jaccard(query, name)

    return sorted(names, key=lambda n: (-score(n), n))


def _typo_cases(registry, n):
    pool = [(family, e.name) for family, entries in registry.families.items() for e in entries]
    cases = []
    for seed in range(n):
        family, name = pool[SplitMix64(seed).below(len(pool))]
        text = f"[{family}]\n  [obj]\n    type = {name}\n  []\n[]\n"
        broken, m = mutate(text, "type_typo", seed, registry=registry)
        cases.append((family, name, broken, m))
    return cases


def test_4_type_recall(registry):
    names_total = sum(len(e) for e in registry.families.values())
    cases = _typo_cases(registry, 600)
    top1 = top3 = disagreements = 0
    misses = []
    results = []
    for family, name, broken, m in cases:
        (issue,) = validate_types(parse(broken), registry)
        ranked = [c.name for c in suggest_types(issue, registry, k=3)]
        results.append(ranked)
        if ranked != _oracle_rank(m.replacement, registry.names(family))[:3]:
            disagreements += 1
        top1 += ranked[0] == name
        top3 += name in ranked
        if ranked[0] != name:
            misses.append(f"{m.replacement}->{ranked[0]} (want {name})")
    rerun = [[c.name for c in suggest_types(validate_types(parse(b), registry)[0], registry, k=3)]
             for _, _, b, _ in cases]
    n = len(cases)
    ok = (n >= 500 and names_total >= 100 and len(registry.families) >= 5 and top1 / n >= 0.90
          and top3 / n >= 0.98 and disagreements == 0 and rerun == results)
    report(4, ok, f"{n} cases over {names_total} names in {len(registry.families)} families; "
                  f"top-1 {top1 / n:.3f}, top-3 {top3 / n:.3f}; oracle disagreements {disagreements}; "
                  f"deterministic {rerun == results}; top-1 misses {misses}")
    assert ok


# 5 and 6 ---------------------------------------------------------------------


def _compound_cases(corpus, registry, n):
    texts = list(corpus.items())
    cases = []
    seed = 0
    while len(cases) < n:
        name, text = texts[seed % len(texts)]
        try:
            broken, muts = compound_mutation(text, seed, registry=registry)
        except MutationError:
            seed += 1
            continue
        cases.append((name, seed, text, broken, muts))
        seed += 1
    return cases


@pytest.fixture(scope="module")
def compound_results(corpus, registry):
    results = []
    for name, seed, text, broken, muts in _compound_cases(corpus, registry, 120):
        rep = precheck(broken, PrecheckConfig(max_iterations=5), registry=registry, backend=accept_original(text))
        results.append((name, seed, text, muts, rep))
    return results


def test_5_pipeline_idempotence(corpus, registry, compound_results):
    finals = []
    for name, text in corpus.items():
        rep = precheck(text, registry=registry, backend=accept_original(text))
        if rep.passed:
            finals.append((name, text, rep.final_text))
    corpus_passed = len(finals)
    finals += [(f"{n}#{s}", t, r.final_text) for n, s, t, _, r in compound_results if r.passed]
    bad = []
    for label, original, final in finals:
        again = precheck(final, registry=registry, backend=accept_original(original))
        if not (again.passed and again.iterations_used == 1 and again.mutating_actions == 0
                and again.final_text == final):
            bad.append(label)
    ok = not bad and corpus_passed == len(corpus)
    report(5, ok, f"{len(finals) - len(bad)}/{len(finals)} reruns pass in 1 iteration with 0 mutating actions "
                  f"({corpus_passed}/{len(corpus)} corpus inputs passed; failures {bad or 'none'})")
    assert ok


def test_6_compound_recovery(compound_results):
    n = len(compound_results)
    passed = [r for r in compound_results if r[4].passed]
    faithful = all(squash(r[4].final_text) == squash(r[2]) for r in passed)
    failures = [f"{name}#{seed}:{'/'.join(m.kind for m in muts)}:{rep.stop_reason}"
                for name, seed, _, muts, rep in compound_results if not rep.passed]
    rate = len(passed) / n
    ok = n >= 100 and rate >= 0.85 and faithful
    report(6, ok, f"{len(passed)}/{n} = {rate:.3f} (need 0.85); failures {failures}")
    assert ok


# 7 ---------------------------------------------------------------------------


def _behaviours():
    rows = []
    for code in (0, 1, 2, 3, 42, 124, 255):
        rows.append({"exit_code": code})
    rows += [
        {"exit_code": 0, "stdout": "Solve Converged!\n"},
        {"exit_code": 1, "stderr": "*** ERROR\nA 'Diffusionn' is not a registered object.\n"},
        {"exit_code": 1, "stderr": "unknown parameter 'valu'\n"},
        {"exit_code": 2, "stderr": "Solve Did NOT Converge!\n"},
        {"exit_code": 0, "stdout": "line\n", "stdout_repeat": 1000},
        {"exit_code": 0, "stderr": "warn\n", "stderr_repeat": 5000},
        {"exit_code": 0, "stdout": "o\n", "stderr": "e\n"},
        {"exit_code": 0, "stdout": "x" * 1024, "stdout_repeat": 1024},  # exactly at the cap
        {"exit_code": 0, "stdout": "x" * 1024, "stdout_repeat": 1100},
        {"exit_code": 3, "stderr": "y" * 4096, "stderr_repeat": 300},
        {"exit_code": 0, "stdout": "z" * 4096, "stdout_repeat": 300, "stderr": "w" * 4096, "stderr_repeat": 300},
        {"exit_code": 0, "stdout": "unicode \u00e9\u03a9\u2014\n"},
        {"exit_code": 0, "stdout": ""},
        {"exit_code": 1, "stdout": "partial\n", "stderr": "fail\n"},
        {"exit_code": 0, "stdout": "no newline"},
        {"exit_code": 0, "artifacts": [{"kind": "mesh", "path": "mesh_in.e"}]},
        {"exit_code": 0, "stdout": "slow start\n", "sleep": 3},
        {"exit_code": 5, "sleep": 0.2},
    ]
    return rows


def test_7_backend_equivalence(tmp_path):
    behaviours = _behaviours()
    script = {"rules": [{"pattern": f"^# case {i}$", **b} for i, b in enumerate(behaviours)]}
    script_path = tmp_path / "mock.json"
    script_path.write_text(json.dumps(script))
    local_backend = LocalBackend(mock_executable(script_path))
    mismatches = []
    seen = {"truncated": 0, "timed_out": 0}
    with ReferenceServer(MockBackend(script)) as server:
        remote = RemoteBackend(server.url)
        for i in range(len(behaviours)):
            results = []
            for label, backend in (("local", local_backend), ("remote", remote)):
                work = tmp_path / f"{label}{i}"
                work.mkdir()
                path = work / "current.i"
                path.write_text(f"# case {i}\n[Mesh]\n[]\n")
                results.append(run_input(backend, ExecutionRequest(path, "run", time_limit=1.0)).contract())
            if results[0] != results[1]:
                mismatches.append(i)
            seen["truncated"] += results[0]["truncated"]
            seen["timed_out"] += results[0]["timed_out"]
    ok = len(behaviours) == 25 and not mismatches and seen["truncated"] > 0 and seen["timed_out"] > 0
    report(7, ok, f"{len(behaviours) - len(mismatches)}/{len(behaviours)} behaviours agree "
                  f"({seen['truncated']} truncated, {seen['timed_out']} timed out); mismatches {mismatches or 'none'}")
    assert ok


# 8 ---------------------------------------------------------------------------


def test_8_chunker_tiling(corpus):
    bad = []
    total = 0
    for name, text in corpus.items():
        tree = parse(text)
        blocks = list(iter_blocks(tree))
        parent, children = chunk_input(text, name)
        total += len(children)
        if len(children) != len(blocks) or parent.text != text:
            bad.append(f"{name}:count")
            continue
        for block, child in zip(blocks, children):
            if child.text != text[block.span.offset:block.span.end_offset]:
                bad.append(f"{name}:{block.path}:span")
            standalone = parse(child.text)
            if isinstance(standalone, ParseFailure) or len(standalone.root.children) != 1:
                bad.append(f"{name}:{block.path}:reparse")
    ok = not bad
    report(8, ok, f"{len(corpus)} inputs, {total} children; violations {bad or 'none'}")
    assert ok


# 9 ---------------------------------------------------------------------------


def _transcripts(n: int, seed: int = 9):
    rng = random.Random(seed)
    tags = ["moose", "MOOSE", "Moose", "python", "bash", "", "text", "moose-ish"]
    out = []
    for k in range(n):
        parts = []
        for j in range(rng.randint(0, 4)):
            parts.append(f"Step {j}: some prose about the run.\n")
            fence = rng.choice(["```", "~~~", "````"])
            tag = rng.choice(tags)
            body = f"[Block{k}_{j}]\n  x = {j}\n[]\n" if rng.random() < 0.8 else ""
            parts.append(f"{fence}{tag}\n{body}{fence}\n")
        if k % 10 == 9:
            parts.append(f"```moose\n[Tail{k}]\n  y = 1\n")  # unclosed, runs to the end
        out.append("".join(parts) if parts else "No code at all.\n")
    return out


def test_9_evaluation_gate(tmp_path, capsys):
    transcripts = _transcripts(50)
    wrong = []
    kinds = {"with_moose": 0, "without_moose": 0}
    for i, t in enumerate(transcripts):
        expected = last_moose_fence(t)
        kinds["with_moose" if expected is not None else "without_moose"] += 1
        try:
            got = extract_final_input(t)
        except CandidateNotFoundError:
            got = None
        if got != expected:
            wrong.append(i)

    cli_bad = []
    source = tmp_path / "in.i"
    source.write_text("[Mesh]\n[]\n")
    for code in (0, 1, 2, 3, 124, 255):
        script = tmp_path / f"mock{code}.json"
        script.write_text(json.dumps({"default": {"exit_code": code}}))
        config = tmp_path / f"exec{code}.json"
        config.write_text(json.dumps({"backend": "local", "moose_exe": mock_executable(script)}))
        direct = run_input(LocalBackend(mock_executable(script)), ExecutionRequest(source, "run"))
        exit_status = cli_main(["run", str(source), "--config", str(config)])
        reported = json.loads(capsys.readouterr().out)["exit_code"]
        if reported != direct.exit_code or (exit_status == 0) != (direct.exit_code == 0):
            cli_bad.append(code)
    ok = not wrong and not cli_bad and all(kinds.values())
    report(9, ok, f"{50 - len(wrong)}/50 transcripts extract the last moose fence ({kinds}); "
                  f"CLI exit code agrees with run_input for exit codes 0,1,2,3,124,255: "
                  f"{'yes' if not cli_bad else cli_bad}")
    assert ok
