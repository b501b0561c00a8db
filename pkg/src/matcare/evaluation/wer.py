"""Word error rate with configurable normalization.

WER = (substitutions + deletions + insertions) / reference words, from a
minimum-edit-distance alignment at word level with unit costs. The value is
reported unclamped (insertion-heavy hypotheses can exceed 1).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional

from ..lexicon import Lexicon, canonical_spelling
from ..transcripts import collapse_repetitions


class WerError(ValueError):
    """Reference empty after normalization."""


@dataclass(frozen=True)
class NormalizationOptions:
    casefold: bool = True
    strip_punct: bool = True
    collapse_repetitions: bool = False
    roman_urdu_canonicalize: bool = False


@dataclass(frozen=True)
class WERResult:
    substitutions: int
    deletions: int
    insertions: int
    ref_words: int

    @property
    def wer(self) -> float:
        return (self.substitutions + self.deletions + self.insertions) \
            / self.ref_words

    @property
    def percent(self) -> str:
        return f"{self.wer * 100:.1f}%"


_PUNCT_RE = re.compile(r"[^\w\s]", re.UNICODE)


def normalize(text: str, opts: NormalizationOptions,
              lexicon: Optional[Lexicon] = None) -> List[str]:
    if opts.casefold:
        text = text.casefold()
    if opts.strip_punct:
        text = _PUNCT_RE.sub(" ", text)
    if opts.collapse_repetitions:
        text = collapse_repetitions(text)
    tokens = text.split()
    if opts.roman_urdu_canonicalize:
        if lexicon is None:
            raise WerError("roman_urdu_canonicalize requires a lexicon")
        tokens = [canonical_spelling(t, lexicon) for t in tokens]
    return tokens


def align_counts(ref: List[str], hyp: List[str]) -> WERResult:
    """Levenshtein alignment over words, preferring the S/D/I split of any
    optimal path (total count is what WER uses)."""
    n, m = len(ref), len(hyp)
    # dp[i][j] = (total_edits, S, D, I) for ref[:i] vs hyp[:j]
    dp = [[(0, 0, 0, 0)] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dp[i][0] = (i, 0, i, 0)
    for j in range(1, m + 1):
        dp[0][j] = (j, 0, 0, j)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            if ref[i - 1] == hyp[j - 1]:
                dp[i][j] = dp[i - 1][j - 1]
                continue
            sub = dp[i - 1][j - 1]
            dele = dp[i - 1][j]
            ins = dp[i][j - 1]
            best = min(
                (sub[0] + 1, sub[1] + 1, sub[2], sub[3]),
                (dele[0] + 1, dele[1], dele[2] + 1, dele[3]),
                (ins[0] + 1, ins[1], ins[2], ins[3] + 1),
            )
            dp[i][j] = best
    total, s, d, ins_count = dp[n][m]
    assert total == s + d + ins_count
    return WERResult(substitutions=s, deletions=d, insertions=ins_count,
                     ref_words=n)


def wer(reference: str, hypothesis: str,
        opts: NormalizationOptions = NormalizationOptions(),
        lexicon: Optional[Lexicon] = None) -> WERResult:
    ref = normalize(reference, opts, lexicon)
    hyp = normalize(hypothesis, opts, lexicon)
    if not ref:
        raise WerError("reference is empty after normalization")
    return align_counts(ref, hyp)
