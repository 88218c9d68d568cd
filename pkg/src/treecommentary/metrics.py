"""Text similarity between generated and reference commentary.

Tokenisation is fixed: lowercase, every character other than a word
character, whitespace or apostrophe becomes a space, then split on
whitespace.
"""
from __future__ import annotations

import math
import re
from collections import Counter
from typing import Sequence

from .errors import EmptyCandidate, EmptyInput

BLEU_EPSILON = 1e-9
_PUNCT = re.compile(r"[^\w\s']")


def tokenize(text: str) -> list[str]:
    return _PUNCT.sub(" ", text.lower()).split()


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu4(candidate: Sequence[str], references: Sequence[Sequence[str]]) -> float:
    """Sentence-level cumulative BLEU-4 with uniform weights.

    Clipped n-gram counts are divided by ``max(1, candidate n-grams)``; a
    zero count is replaced by ``1e-9``. The brevity penalty uses the
    reference length closest to the candidate's (shorter wins ties). With no
    unigram match the score is 0.

    Args:
        candidate: Candidate tokens.
        references: One or more reference token lists.

    Raises:
        EmptyCandidate: ``candidate`` has no tokens.
    """
    candidate = list(candidate)
    if not candidate:
        raise EmptyCandidate("BLEU needs a nonempty candidate")
    references = [list(r) for r in references]
    if not references:
        raise EmptyInput("BLEU needs at least one reference")
    log_sum = 0.0
    for n in range(1, 5):
        counts = _ngrams(candidate, n)
        max_ref = Counter()
        for ref in references:
            for gram, c in _ngrams(ref, n).items():
                max_ref[gram] = max(max_ref[gram], c)
        clipped = sum(min(c, max_ref[g]) for g, c in counts.items())
        total = max(1, sum(counts.values()))
        if n == 1 and clipped == 0:
            return 0.0
        log_sum += 0.25 * math.log((clipped if clipped else BLEU_EPSILON) / total)
    c = len(candidate)
    r = min((len(ref) for ref in references), key=lambda L: (abs(L - c), L))
    bp = 1.0 if c > r else math.exp(1.0 - r / c)
    return bp * math.exp(log_sum)


def wlcs(a: Sequence[str], b: Sequence[str], alpha: float = 1.2) -> float:
    """Weighted LCS score with consecutive-run weighting ``f(k) = k**alpha``."""
    m, n = len(a), len(b)
    score = [[0.0] * (n + 1) for _ in range(m + 1)]
    run = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            if a[i - 1] == b[j - 1]:
                k = run[i - 1][j - 1]
                score[i][j] = score[i - 1][j - 1] + (k + 1) ** alpha - k ** alpha
                run[i][j] = k + 1
            else:
                score[i][j] = max(score[i - 1][j], score[i][j - 1])
    return score[m][n]


def rouge_w(candidate: Sequence[str], reference: Sequence[str], alpha: float = 1.2) -> float:
    """ROUGE-W F1 from the weighted LCS.

    Recall and precision are ``(WLCS / f(len))**(1/alpha)`` with the
    reference and candidate lengths respectively.

    Raises:
        EmptyInput: Either sequence is empty.
    """
    if not candidate or not reference:
        raise EmptyInput("ROUGE-W needs nonempty candidate and reference")
    if alpha <= 1:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    w = wlcs(candidate, reference, alpha)
    if w == 0:
        return 0.0
    recall = (w / len(reference) ** alpha) ** (1.0 / alpha)
    precision = (w / len(candidate) ** alpha) ** (1.0 / alpha)
    # increments of k**alpha can overshoot 1 by an ulp
    return min(1.0, 2 * precision * recall / (precision + recall))
