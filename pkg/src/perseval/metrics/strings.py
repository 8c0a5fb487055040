"""Token-overlap distances between text pairs.

Every function takes token sequences (candidate first, reference
second), returns a distance in [0, 1], and is exactly 1 minus the
underlying overlap score. Empty token sequences are rejected: a
distance over nothing is meaningless.
"""
from __future__ import annotations

import math
import re
from collections import Counter

from ..errors import DataError
from .porter import stem

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)


def tokenize(text: str, scheme: str = "word_lower") -> list[str]:
    """Lowercase and split on whitespace/punctuation boundaries.

    Hyphenated and punctuated forms split into their word parts; an
    empty or punctuation-only text yields an empty sequence.
    """
    if scheme != "word_lower":
        raise ValueError(f"unknown tokenization scheme {scheme!r}")
    return _TOKEN_RE.findall(text.lower())


def _require_tokens(cand, ref):
    if not cand or not ref:
        raise DataError("cannot score an empty token sequence")


def lcs_length(a, b) -> int:
    """Longest common subsequence length, two-row dynamic program."""
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                curr.append(prev[j - 1] + 1)
            else:
                curr.append(max(prev[j], curr[j - 1]))
        prev = curr
    return prev[-1]


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def rouge_l_distance(cand, ref) -> float:
    """1 - LCS F1, with precision against the candidate length."""
    _require_tokens(cand, ref)
    lcs = lcs_length(cand, ref)
    return 1.0 - _f1(lcs / len(cand), lcs / len(ref))


def _su4_units(tokens) -> Counter:
    """Multiset of unigrams plus skip-bigrams with gap at most 4."""
    units = Counter(("u", tok) for tok in tokens)
    for i in range(len(tokens)):
        for j in range(i + 1, min(i + 5, len(tokens))):
            units[("b", tokens[i], tokens[j])] += 1
    return units


def rouge_su4_distance(cand, ref) -> float:
    """1 - F1 over unigrams and skip-bigrams (skip distance <= 4)."""
    _require_tokens(cand, ref)
    cu = _su4_units(cand)
    ru = _su4_units(ref)
    overlap = sum((cu & ru).values())
    return 1.0 - _f1(overlap / sum(cu.values()), overlap / sum(ru.values()))


def bleu1_distance(cand, ref) -> float:
    """1 - brevity-penalised clipped unigram precision."""
    _require_tokens(cand, ref)
    cand_counts = Counter(cand)
    ref_counts = Counter(ref)
    clipped = sum(min(n, ref_counts[tok]) for tok, n in cand_counts.items())
    precision = clipped / len(cand)
    brevity = min(1.0, math.exp(1.0 - len(ref) / len(cand)))
    return 1.0 - brevity * precision


def _align(cand, ref) -> list[tuple[int, int]]:
    """Two-stage unigram alignment: exact forms, then Porter stems.

    Each candidate position greedily takes the first still-unmatched
    reference position, in order.
    """
    free_c = list(range(len(cand)))
    free_r = list(range(len(ref)))
    pairs: list[tuple[int, int]] = []
    for keyed in (lambda t: t, stem):
        ref_keys = {i: keyed(ref[i]) for i in free_r}
        still_free = []
        for ci in free_c:
            key = keyed(cand[ci])
            hit = next((ri for ri in free_r if ref_keys[ri] == key), None)
            if hit is None:
                still_free.append(ci)
            else:
                pairs.append((ci, hit))
                free_r.remove(hit)
        free_c = still_free
    return sorted(pairs)


def _chunk_count(pairs) -> int:
    chunks = 0
    prev = None
    for ci, ri in pairs:
        if prev is None or ci != prev[0] + 1 or ri != prev[1] + 1:
            chunks += 1
        prev = (ci, ri)
    return chunks


def meteor_distance(cand, ref) -> float:
    """1 - harmonic-mean unigram score with a fragmentation penalty.

    Recall-weighted mean 10PR/(R+9P); penalty 0.5*(chunks/matches)^3.
    Note the penalty never fully vanishes, so identical inputs score
    1 - 0.5/m^3 rather than a perfect 1.
    """
    _require_tokens(cand, ref)
    pairs = _align(cand, ref)
    matches = len(pairs)
    if matches == 0:
        return 1.0
    precision = matches / len(cand)
    recall = matches / len(ref)
    f_mean = 10.0 * precision * recall / (recall + 9.0 * precision)
    penalty = 0.5 * (_chunk_count(pairs) / matches) ** 3
    return 1.0 - f_mean * (1.0 - penalty)
