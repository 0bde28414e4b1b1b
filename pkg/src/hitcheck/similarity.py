"""String similarity used to rank object-name corrections."""

from __future__ import annotations

import re

__all__ = [
    "camel_tokens",
    "damerau_levenshtein",
    "edit_similarity",
    "lexical_similarity",
    "token_jaccard",
]

_TOKEN_RE = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|[0-9]+")


def damerau_levenshtein(a: str, b: str) -> int:
    """Unrestricted Damerau-Levenshtein distance (Lowrance-Wagner).

    Insertions, deletions, substitutions and transpositions of adjacent
    characters each cost one; unlike the optimal-string-alignment variant a
    substring may be edited more than once.
    """
    if a == b:
        return 0
    if not a or not b:
        return len(a) + len(b)
    inf = len(a) + len(b)
    last_row: dict[str, int] = {}
    # d has an extra leading row/column holding `inf` sentinels
    d = [[inf] * (len(b) + 2) for _ in range(len(a) + 2)]
    for i in range(len(a) + 1):
        d[i + 1][1] = i
    for j in range(len(b) + 1):
        d[1][j + 1] = j
    for i in range(1, len(a) + 1):
        last_match_col = 0
        for j in range(1, len(b) + 1):
            k = last_row.get(b[j - 1], 0)
            l = last_match_col
            if a[i - 1] == b[j - 1]:
                cost = 0
                last_match_col = j
            else:
                cost = 1
            d[i + 1][j + 1] = min(
                d[i][j] + cost,
                d[i + 1][j] + 1,
                d[i][j + 1] + 1,
                d[k][l] + (i - k - 1) + 1 + (j - l - 1),
            )
        last_row[a[i - 1]] = i
    return d[len(a) + 1][len(b) + 1]


def edit_similarity(a: str, b: str) -> float:
    """``1 - distance / max(len)``, so 1.0 for equal strings and 0.0 at worst."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - damerau_levenshtein(a, b) / longest


def camel_tokens(name: str) -> list[str]:
    """Split on case boundaries, digit runs and underscores; lower-case the pieces.

    >>> camel_tokens("ADDirichletBC")
    ['ad', 'dirichlet', 'bc']
    >>> camel_tokens("heat_source2D")
    ['heat', 'source', '2', 'd']
    """
    return [t.lower() for part in name.split("_") for t in _TOKEN_RE.findall(part)]


def _near(a: str, b: str) -> bool:
    return min(len(a), len(b)) >= 3 and damerau_levenshtein(a, b) <= 1


def _dedupe(tokens: list[str]) -> list[tuple[int, str]]:
    seen: set[str] = set()
    out = []
    for i, t in enumerate(tokens):
        if t not in seen:
            seen.add(t)
            out.append((i, t))
    return out


def _align(left: list[tuple[int, str]], right: list[tuple[int, str]]) -> tuple[int, int, int]:
    """Best near-match alignment of two leftover token sequences.

    Returns ``(pairs, merges_left, merges_right)``. A pair is two tokens within
    one edit of each other; one side may instead offer two tokens that were
    adjacent in the original name, concatenated, which counts as one token.
    """
    cache: dict[tuple[int, int], tuple[int, int, int]] = {}

    def adjacent(seq, i):
        return i + 1 < len(seq) and seq[i + 1][0] == seq[i][0] + 1

    def best(i: int, j: int) -> tuple[int, int, int]:
        if i >= len(left) or j >= len(right):
            return (0, 0, 0)
        key = (i, j)
        if key in cache:
            return cache[key]
        options = [best(i + 1, j), best(i, j + 1)]
        if _near(left[i][1], right[j][1]):
            p, ml, mr = best(i + 1, j + 1)
            options.append((p + 1, ml, mr))
        if adjacent(left, i) and _near(left[i][1] + left[i + 1][1], right[j][1]):
            p, ml, mr = best(i + 2, j + 1)
            options.append((p + 1, ml + 1, mr))
        if adjacent(right, j) and _near(left[i][1], right[j][1] + right[j + 1][1]):
            p, ml, mr = best(i + 1, j + 2)
            options.append((p + 1, ml, mr + 1))
        # most pairs first, then most merges (a smaller union), then a fixed order
        cache[key] = max(options, key=lambda o: (o[0], o[1] + o[2], o))
        return cache[key]

    return best(0, 0)


def token_jaccard(a: str, b: str) -> float:
    """Jaccard overlap of the camel-case token sets of *a* and *b*.

    Equal tokens are matched as sets. The remaining tokens are then paired in
    name order when they lie within one edit of each other (three or more
    characters), so a typo inside a token still counts as overlap. A typo
    that adds or removes a case boundary is absorbed by letting two adjacent
    tokens stand in, concatenated, for one.

    >>> token_jaccard("DiffQusion", "Diffusion")
    1.0
    """
    left, right = _dedupe(camel_tokens(a)), _dedupe(camel_tokens(b))
    if not left and not right:
        return 1.0 if a == b else 0.0
    exact = {t for _, t in left} & {t for _, t in right}
    pairs, merged_left, merged_right = _align(
        [x for x in left if x[1] not in exact], [x for x in right if x[1] not in exact]
    )
    matched = len(exact) + pairs
    union = len(left) - merged_left + len(right) - merged_right - matched
    return matched / union


def lexical_similarity(a: str, b: str) -> float:
    return 0.5 * edit_similarity(a, b) + 0.5 * token_jaccard(a, b)
