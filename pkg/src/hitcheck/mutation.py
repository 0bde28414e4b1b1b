"""Seeded generation of malformed variants of valid inputs.

Reproducibility across implementations rests on two fixed choices:

* The generator is SplitMix64 (Steele, Lea & Flood 2014) seeded with the
  integer seed; ``below(n)`` is ``next() % n``.
* Candidate sites are enumerated in document order and drawn in this order:
  kind (when not given, from the class's kind list, skipping forward
  cyclically past kinds with no site), then site, then any kind-specific
  choices.

Classes and kinds:

``sanitation``  nbsp (a space becomes U+00A0), zero_width (U+200B inserted),
                smart_quote (a value quote becomes its typographic form)
``structure``   delete_closer, delete_equals, corrupt_quote (closing quote
                dropped), break_list_separator (quoted list unquoted, comma
                separated or bracketed)
``type_typo``   one substitution, insertion, deletion or adjacent transposition
                inside a ``type`` value
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass

from .hit import BlockNode, Param, ParseFailure, SourceSpan, SyntaxTree, extract_types, iter_blocks, parse

__all__ = [
    "CLASSES",
    "KINDS",
    "Mutation",
    "MutationError",
    "SplitMix64",
    "compound_mutation",
    "manifest_entry",
    "mutate",
]

MASK64 = (1 << 64) - 1

KINDS = {
    "sanitation": ("nbsp", "zero_width", "smart_quote"),
    "structure": ("delete_closer", "delete_equals", "corrupt_quote", "break_list_separator"),
    "type_typo": ("typo",),
}
CLASSES = tuple(KINDS)
RECOVERY_STAGE = {"sanitation": "sanitize", "structure": "repair", "type_typo": "type_check"}

TYPO_ALPHABET = string.ascii_letters
_LIST_TOKEN_RE = re.compile(r"[A-Za-z0-9_.+\-]+")


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        if n <= 0:
            raise ValueError("below() needs a positive bound")
        return self.next() % n


class MutationError(ValueError):
    """The requested mutation class or kind has no applicable site in the input."""


@dataclass(frozen=True)
class Mutation:
    id: str
    mutation_class: str
    kind: str
    location: SourceSpan
    seed: int
    start: int
    end: int
    replacement: str
    original: str

    def apply(self, text: str) -> str:
        return text[:self.start] + self.replacement + text[self.end:]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "class": self.mutation_class,
            "kind": self.kind,
            "location": self.location.to_dict(),
            "seed": self.seed,
            "original": self.original,
            "replacement": self.replacement,
        }


def _span(text: str, start: int, end: int) -> SourceSpan:
    def lc(offset: int) -> tuple[int, int]:
        return text.count("\n", 0, offset) + 1, offset - (text.rfind("\n", 0, offset) + 1) + 1

    sl, sc = lc(start)
    el, ec = lc(max(start, end - 1))
    return SourceSpan(sl, sc, el, ec, start, end)


def _params(tree: SyntaxTree) -> list[Param]:
    found = []

    def walk(block: BlockNode):
        for item in block.items:
            if isinstance(item, Param):
                found.append(item)
            else:
                walk(item)

    walk(tree.root)
    return found


# Each site function returns a list of candidate sites; each site is a callable
# taking the rng and returning (start, end, replacement).


def _sites_nbsp(text, tree):
    return [(lambda rng, i=i: (i, i + 1, "\u00a0")) for i, ch in enumerate(text) if ch == " "]


def _sites_zero_width(text, tree):
    return [(lambda rng, i=i: (i, i, "\u200b")) for i in range(len(text) + 1)]


def _sites_smart_quote(text, tree):
    sites = []
    for p in _params(tree):
        if p.value_kind == "bare" or p.value_span is None:
            continue
        o, e = p.value_span.offset, p.value_span.end_offset - 1
        left, right = ("\u2018", "\u2019") if p.value[0] == "'" else ("\u201c", "\u201d")
        sites.append(lambda rng, o=o, c=left: (o, o + 1, c))
        sites.append(lambda rng, e=e, c=right: (e, e + 1, c))
    return sorted(sites, key=lambda f: f(None)[0])


def _sites_delete_closer(text, tree):
    sites = []
    for block in iter_blocks(tree):
        end = block.span.end_offset
        start = end - len(block.closer)
        line_start = text.rfind("\n", 0, start) + 1
        nl = text.find("\n", end)
        line_end = len(text) if nl < 0 else nl
        if text[line_start:start].strip() == "" and text[end:line_end].strip() == "":
            # closer alone on its line: drop the whole line
            stop = line_end + 1 if nl >= 0 else line_end
            sites.append(lambda rng, a=line_start, b=stop: (a, b, ""))
        else:
            sites.append(lambda rng, a=start, b=end: (a, b, ""))
    return sorted(sites, key=lambda f: f(None)[0])


def _sites_delete_equals(text, tree):
    sites = []
    for p in _params(tree):
        if p.key.startswith("!"):
            continue
        eq = p.span.offset + len(p.key) + p.separator.index("=")
        spaced = p.separator != "=" and (p.separator[0] in " \t" or p.separator[-1] in " \t")
        sites.append(lambda rng, eq=eq, r="" if spaced else " ": (eq, eq + 1, r))
    return sites


def _sites_corrupt_quote(text, tree):
    sites = []
    for p in _params(tree):
        if p.value_kind == "bare":
            continue
        e = p.value_span.end_offset - 1
        sites.append(lambda rng, e=e: (e, e + 1, ""))
    return sites


def _sites_break_list(text, tree):
    sites = []
    for p in _params(tree):
        if p.value_kind == "bare" or "\n" in p.value:
            continue
        tokens = p.text_value.split()
        if len(tokens) < 2 or not all(_LIST_TOKEN_RE.fullmatch(t) for t in tokens):
            continue
        end = p.value_span.end_offset
        nl = text.find("\n", end)
        rest = text[end:len(text) if nl < 0 else nl]
        if rest.strip() and not rest.strip().startswith("#"):
            continue
        start = p.value_span.offset

        def site(rng, start=start, end=end, tokens=tokens):
            variant = rng.below(3) if rng is not None else 0
            if variant == 0:
                return start, end, " ".join(tokens)
            if variant == 1:
                return start, end, ", ".join(tokens)
            return start, end, "[" + ", ".join(tokens) + "]"

        sites.append(site)
    return sites


def _sites_typo(text, tree, registry=None):
    sites = []
    for usage in extract_types(tree):
        span = usage.span
        inner_start = span.offset + (1 if text[span.offset] in "'\"" else 0)
        name = usage.type_name
        if not name:
            continue
        taken = set(registry.names(usage.family)) if registry is not None else set()

        def site(rng, inner_start=inner_start, name=name, taken=taken):
            for _ in range(64):
                op = rng.below(4)
                i = rng.below(len(name))
                if op == 0:
                    new = name[:i] + TYPO_ALPHABET[rng.below(len(TYPO_ALPHABET))] + name[i + 1:]
                elif op == 1:
                    new = name[:i] + TYPO_ALPHABET[rng.below(len(TYPO_ALPHABET))] + name[i:]
                elif op == 2:
                    new = name[:i] + name[i + 1:]
                else:
                    if i + 1 >= len(name):
                        continue
                    new = name[:i] + name[i + 1] + name[i] + name[i + 2:]
                if new and new != name and new not in taken:
                    return inner_start, inner_start + len(name), new
            raise MutationError(f"could not derive a typo of {name!r}")

        sites.append(site)
    return sites


_SITE_FUNCS = {
    "nbsp": _sites_nbsp,
    "zero_width": _sites_zero_width,
    "smart_quote": _sites_smart_quote,
    "delete_closer": _sites_delete_closer,
    "delete_equals": _sites_delete_equals,
    "corrupt_quote": _sites_corrupt_quote,
    "break_list_separator": _sites_break_list,
}


def mutate(
    valid_input: str,
    mutation_class: str,
    seed: int,
    *,
    kind: str | None = None,
    registry=None,
) -> tuple[str, Mutation]:
    """Derive one malformed variant of *valid_input*.

    *registry*, when given, keeps type typos from landing on another valid name
    in the same family.
    """
    if mutation_class not in KINDS:
        raise MutationError(f"unknown mutation class {mutation_class!r}")
    if kind is not None and kind not in KINDS[mutation_class]:
        raise MutationError(f"kind {kind!r} does not belong to class {mutation_class!r}")
    tree = parse(valid_input)
    if isinstance(tree, ParseFailure):
        raise MutationError(f"input does not parse: {tree.message}")
    rng = SplitMix64(seed)

    def sites_for(k: str):
        if k == "typo":
            return _sites_typo(valid_input, tree, registry)
        return _SITE_FUNCS[k](valid_input, tree)

    kinds = KINDS[mutation_class]
    if kind is None:
        first = rng.below(len(kinds))
        order = kinds[first:] + kinds[:first]
    else:
        order = (kind,)
    for k in order:
        sites = sites_for(k)
        if sites:
            break
    else:
        raise MutationError(f"no applicable site for {mutation_class}/{kind or 'any'}")
    site = sites[rng.below(len(sites))]
    start, end, replacement = site(rng)
    location = _span(valid_input, start, end)
    mutation = Mutation(
        id=f"{mutation_class}/{k}/{seed}/{location.start_line}:{location.start_col}",
        mutation_class=mutation_class,
        kind=k,
        location=location,
        seed=seed,
        start=start,
        end=end,
        replacement=replacement,
        original=valid_input[start:end],
    )
    return mutation.apply(valid_input), mutation


def compound_mutation(valid_input: str, seed: int, *, registry=None) -> tuple[str, list[Mutation]]:
    """Apply one type typo, one structure and one sanitation mutation together.

    The typo is applied first. The structure mutation is drawn on the typo'd
    text, and the sanitation site is drawn on that same (still parsable) text,
    then shifted past the structure edit; sanitation seeds advance until the
    two edit sites are disjoint.
    """
    typo_text, typo = mutate(valid_input, "type_typo", seed, registry=registry)
    broken, structure = mutate(typo_text, "structure", seed)
    delta = len(structure.replacement) - (structure.end - structure.start)
    for attempt in range(64):
        _, san = mutate(typo_text, "sanitation", seed + attempt)
        if san.end <= structure.start or san.start >= structure.end:
            break
    else:
        raise MutationError("no disjoint sanitation site")
    shift = delta if san.start >= structure.end else 0
    final = broken[:san.start + shift] + san.replacement + broken[san.end + shift:]
    return final, [typo, structure, san]


def manifest_entry(source: str, mutation: Mutation) -> dict:
    return {
        "source": source,
        "class": mutation.mutation_class,
        "kind": mutation.kind,
        "seed": mutation.seed,
        "expected_recovery_stage": RECOVERY_STAGE[mutation.mutation_class],
    }
