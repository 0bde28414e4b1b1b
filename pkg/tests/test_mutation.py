from __future__ import annotations

import pytest

from hitcheck import ParseFailure, compound_mutation, mutate, parse, repair, sanitize, suggest_types, validate_types
from hitcheck.mutation import KINDS, MutationError, SplitMix64, manifest_entry
from rapidfuzz.distance import DamerauLevenshtein

ONE_BLOCK = "[Kernels]\n  [diff]\n    type = Diffusion\n    variable = u\n  []\n[]\n"


def test_splitmix_reference_values():
    # published SplitMix64 outputs for seed 0
    rng = SplitMix64(0)
    assert [rng.next() for _ in range(3)] == [
        0xE220A8397B1DCDAF,
        0x6E789E6AA1B965F4,
        0x06C45D188009454F,
    ]


def test_deterministic(corpus):
    text = corpus["01_simple_diffusion.i"]
    for cls in KINDS:
        for seed in range(5):
            assert mutate(text, cls, seed) == mutate(text, cls, seed)


def test_delete_closer_on_one_block():
    text = "[Mesh]\n  type = GeneratedMesh\n[]\n"
    broken, m = mutate(text, "structure", 3, kind="delete_closer")
    assert broken == "[Mesh]\n  type = GeneratedMesh\n"
    assert isinstance(parse(broken), ParseFailure)
    assert m.kind == "delete_closer" and m.original == "[]\n"


def test_nbsp_gives_one_sanitation_edit(corpus):
    for seed in range(20):
        broken, m = mutate(corpus["01_simple_diffusion.i"], "sanitation", seed, kind="nbsp")
        _, report = sanitize(broken)
        assert len(report.edits) == 1 and report.edits[0].codepoint == "U+00A0"
        assert (report.edits[0].line, report.edits[0].col) == (m.location.start_line, m.location.start_col)


def test_typo_seed_7(registry):
    broken, m = mutate(ONE_BLOCK, "type_typo", 7, registry=registry)
    assert m.original == "Diffusion"
    assert DamerauLevenshtein.distance(m.replacement, "Diffusion") == 1
    (issue,) = validate_types(parse(broken), registry)
    assert suggest_types(issue, registry)[0].name == "Diffusion"


@pytest.mark.parametrize("kind", KINDS["structure"])
def test_structure_kinds_break_parsing(corpus, kind):
    hits = 0
    for text in corpus.values():
        try:
            broken, _ = mutate(text, "structure", 11, kind=kind)
        except MutationError:
            continue
        hits += 1
        assert isinstance(parse(broken), ParseFailure), (kind, broken)
    assert hits > 0


@pytest.mark.parametrize("kind", KINDS["sanitation"])
def test_sanitation_kinds_are_undone(corpus, kind):
    hits = 0
    for text in corpus.values():
        try:
            broken, _ = mutate(text, "sanitation", 5, kind=kind)
        except MutationError:
            continue
        hits += 1
        clean, report = sanitize(broken)
        assert report.edits
        assert clean == sanitize(text)[0]
    assert hits > 0


def test_errors():
    with pytest.raises(MutationError):
        mutate(ONE_BLOCK, "semantic", 1)
    with pytest.raises(MutationError):
        mutate(ONE_BLOCK, "structure", 1, kind="typo")
    with pytest.raises(MutationError):
        mutate("[Outputs]\n[]\n", "type_typo", 1)
    with pytest.raises(MutationError):
        mutate("[A]\n", "structure", 1)


def test_compound(corpus, registry):
    text = corpus["01_simple_diffusion.i"]
    broken, (typo, structure, san) = compound_mutation(text, 4, registry=registry)
    assert [m.mutation_class for m in (typo, structure, san)] == ["type_typo", "structure", "sanitation"]
    assert compound_mutation(text, 4, registry=registry)[0] == broken
    clean, report = sanitize(broken)
    assert report.edits
    assert repair(clean).success


def test_manifest_and_record():
    _, m = mutate(ONE_BLOCK, "type_typo", 7)
    entry = manifest_entry("one.i", m)
    assert entry == {"source": "one.i", "class": "type_typo", "kind": "typo", "seed": 7,
                     "expected_recovery_stage": "type_check"}
    d = m.to_dict()
    assert d["id"] == m.id and d["id"].startswith("type_typo/typo/7/")
    assert m.apply(ONE_BLOCK) == mutate(ONE_BLOCK, "type_typo", 7)[0]
