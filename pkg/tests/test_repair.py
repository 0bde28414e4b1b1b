from __future__ import annotations

import difflib

import pytest

from hitcheck import ParseFailure, mutate, parse, render, repair
from hitcheck.repair import RULE_FOR_CLASS, RULES
from checks import local, preserved_blocks


def _only_insertions(before: str, after: str) -> list[str]:
    ops = difflib.SequenceMatcher(None, before, after, autojunk=False).get_opcodes()
    assert all(tag in ("equal", "insert") for tag, *_ in ops)
    return [after[j1:j2] for tag, _, _, j1, j2 in ops if tag == "insert"]


def test_missing_closer_appended():
    text = "[Mesh]\n type = GeneratedMesh\n"
    outcome = repair(text)
    assert outcome.success and outcome.final_failure is None
    (action,) = outcome.actions
    assert action.rule == "balance_delimiters" and action.after.strip() == "[]"
    assert _only_insertions(text, outcome.text) == ["[]\n"]
    assert outcome.text.endswith("[]\n")


def test_valid_input_is_fixed_point(corpus):
    for text in corpus.values():
        outcome = repair(text)
        assert outcome.success and outcome.actions == () and outcome.iterations_used == 0
        assert outcome.text == text


def test_unterminated_quote_closed_at_line_end():
    text = "[A]\n  value = '1 2 3\n[]\n"
    outcome = repair(text)
    assert outcome.success
    (action,) = outcome.actions
    assert action.rule == "close_quote" and action.after == "'"
    assert _only_insertions(text, outcome.text) == ["'"]
    assert "value = '1 2 3'\n" in outcome.text
    # re-parse oracle: the quoted value is exactly the three numbers
    (block,) = parse(outcome.text).root.children
    assert block.get("value").text_value == "1 2 3"


def test_bare_statement_quote():
    outcome = repair("value = '1 2 3")
    assert outcome.success and outcome.text == "value = '1 2 3'"


def test_wrong_closing_quote_is_normalized():
    outcome = repair("[A]\n  x = '1 2\"\n[]\n")
    assert outcome.success and [a.rule for a in outcome.actions] == ["normalize_quote"]
    assert "x = '1 2'" in outcome.text


@pytest.mark.parametrize(
    "broken, fixed",
    [
        ("[A]\n  x 1\n[]\n", "[A]\n  x = 1\n[]\n"),
        ("[A]\n  x = 1 2 3\n[]\n", "[A]\n  x = '1 2 3'\n[]\n"),
        ("[A]\n  x = 1, 2, 3  # c\n[]\n", "[A]\n  x = '1 2 3'  # c\n[]\n"),
        ("[A]\n  x = [a, b]\n[]\n", "[A]\n  x = 'a b'\n[]\n"),
        ('[A]\n  y = "p q"\n  x = a b\n[]\n', '[A]\n  y = "p q"\n  x = "a b"\n[]\n'),
        ("[A]\n  [./b]\n    x = 1\n", "[A]\n  [./b]\n    x = 1\n  [../]\n[]\n"),
    ],
)
def test_rules(broken, fixed):
    outcome = repair(broken)
    assert outcome.success
    assert outcome.text == fixed


def test_stray_identifier_dropped():
    outcome = repair("[A]\n  @ x = 1\n[]\n")
    assert outcome.success
    assert [a.rule for a in outcome.actions] == ["drop_stray_token"]
    assert outcome.actions[0].before == "@"


def test_no_applicable_rule():
    outcome = repair("[]\n")
    assert not outcome.success
    assert outcome.error == "no_applicable_rule"
    assert outcome.final_failure.expected == "block_open"
    assert "block_open" not in RULE_FOR_CLASS


def test_budget_exhausted():
    text = "[A]\n  [b]\n    [c]\n      [d]\n"
    outcome = repair(text, budget=2)
    assert not outcome.success and outcome.error == "budget_exhausted"
    assert len(outcome.actions) == outcome.iterations_used == 2
    assert isinstance(outcome.final_failure, ParseFailure)
    assert not repair(text, budget=3).success
    assert repair(text, budget=4).success


def test_budget_must_be_positive():
    with pytest.raises(ValueError):
        repair("[A]\n[]\n", budget=0)


def test_sibling_missing_closer_keeps_nesting():
    text = "[Kernels]\n  [a]\n    type = X\n  [b]\n    type = Y\n  []\n[]\n"
    outcome = repair(text)
    assert outcome.success
    tree = parse(outcome.text)
    assert [c.path for c in tree.root.children[0].children] == ["/Kernels/a", "/Kernels/b"]


def test_comment_lines_untouched():
    text = "[A]\n  # x = 1 2 3\n  y 4\n[]\n"
    outcome = repair(text)
    assert outcome.success
    assert "  # x = 1 2 3\n" in outcome.text


def test_invariants_on_mutated_corpus(corpus):
    for name, text in corpus.items():
        for seed in range(6):
            try:
                broken, _ = mutate(text, "structure", seed)
            except ValueError:
                continue
            outcome = repair(broken)
            assert all(a.rule in RULES for a in outcome.actions)
            assert len(outcome.actions) <= 8
            assert [a.iteration for a in outcome.actions] == list(range(1, len(outcome.actions) + 1))
            assert local(outcome), (name, seed)
            _, bad = preserved_blocks(broken, outcome)
            assert bad == [], (name, seed)
            assert repair(broken) == outcome
            if outcome.success:
                tree = parse(outcome.text)
                assert not any(d.severity == "error" for d in tree.diagnostics)
                assert render(tree) == outcome.text
