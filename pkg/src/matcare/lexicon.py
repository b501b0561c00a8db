"""Medical lexicon: colloquial terms, abbreviations, and Roman-Urdu spellings.

Maps informal phrases ("sugar", "dil ka marz") and unstandardized Roman-Urdu
spellings ("krte", "krtay") to canonical terminology. Used both for grounding
generation prompts and for optional normalization before WER scoring.

Matching is case-insensitive, longest phrase first, left to right. The
lexicon is immutable after load and safe for concurrent readers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, Iterable, List, Tuple

CATEGORY_COLLOQUIAL = "colloquialism"
CATEGORY_ORTHOGRAPHIC = "orthographic-variant"
CATEGORY_CLINICAL = "clinical-term"
CATEGORIES = (CATEGORY_COLLOQUIAL, CATEGORY_ORTHOGRAPHIC, CATEGORY_CLINICAL)

_TOKEN_RE = re.compile(r"\S+")


class LexiconError(ValueError):
    """Malformed lexicon input or a variant collision."""


@dataclass(frozen=True)
class LexiconEntry:
    canonical: str
    category: str
    variants: Tuple[str, ...] = ()


@dataclass(frozen=True)
class Substitution:
    """A single replacement made by :func:`normalize_text`."""

    start: int
    end: int
    original: str
    replacement: str


@dataclass
class Lexicon:
    entries: List[LexiconEntry] = field(default_factory=list)

    def __post_init__(self):
        # variant (casefolded) -> entry
        self.index: Dict[str, LexiconEntry] = {}
        # representative spelling per orthographic token
        self.spellings: Dict[str, str] = {}
        # casefolded canonical phrases, so already-normalized text is left alone
        self.canonical_keys: set = set()
        for entry in self.entries:
            for variant in entry.variants:
                key = variant.casefold()
                if key in self.index:
                    other = self.index[key]
                    raise LexiconError(
                        f"variant {variant!r} claimed by both "
                        f"{other.canonical!r} and {entry.canonical!r}"
                    )
                self.index[key] = entry
            self.canonical_keys.add(entry.canonical.casefold())
            if entry.category == CATEGORY_ORTHOGRAPHIC:
                for variant in entry.variants:
                    self.spellings[variant.casefold()] = entry.canonical
        # Substitution must be idempotent: a canonical may not be some other
        # entry's variant.
        for entry in self.entries:
            hit = self.index.get(entry.canonical.casefold())
            if hit is not None and hit.canonical != entry.canonical:
                raise LexiconError(
                    f"canonical {entry.canonical!r} collides with a variant of "
                    f"{hit.canonical!r}"
                )

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def max_variant_tokens(self) -> int:
        longest = 1
        for variant in self.index:
            longest = max(longest, len(variant.split()))
        for canonical in self.canonical_keys:
            longest = max(longest, len(canonical.split()))
        return longest


def load_lexicon(source: Iterable[str]) -> Lexicon:
    """Load a lexicon from text lines.

    Format per line: ``canonical<TAB>category[<TAB>variant|variant|...]``.
    Blank lines and lines starting with ``#`` are ignored. Errors name the
    offending line number.
    """
    entries: List[LexiconEntry] = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) < 2:
            raise LexiconError(f"line {lineno}: expected canonical<TAB>category")
        canonical = parts[0].strip()
        category = parts[1].strip()
        variants = tuple(
            v.strip() for v in parts[2].split("|") if v.strip()
        ) if len(parts) > 2 else ()
        if not canonical:
            raise LexiconError(f"line {lineno}: empty canonical")
        if category not in CATEGORIES:
            raise LexiconError(f"line {lineno}: unknown category {category!r}")
        if category in (CATEGORY_COLLOQUIAL, CATEGORY_ORTHOGRAPHIC) and not variants:
            raise LexiconError(f"line {lineno}: {category} entry needs variants")
        for v in variants:
            if v.casefold() == canonical.casefold():
                raise LexiconError(
                    f"line {lineno}: variant {v!r} equals its canonical"
                )
        entries.append(LexiconEntry(canonical, category, variants))
    try:
        return Lexicon(entries)
    except LexiconError:
        raise


def default_lexicon() -> Lexicon:
    text = resources.files("matcare.data").joinpath("lexicon_v1.txt").read_text("utf-8")
    return load_lexicon(text.splitlines())


def normalize_term(phrase: str, lex: Lexicon) -> Tuple[str, bool]:
    """Map a full phrase to its canonical term; unknown phrases pass through."""
    entry = lex.index.get(phrase.strip().casefold())
    if entry is None:
        return phrase, False
    return entry.canonical, True


def normalize_text(text: str, lex: Lexicon) -> Tuple[str, List[Substitution]]:
    """Replace every lexicon variant phrase in ``text`` with its canonical.

    Greedy longest-match-first, left-to-right over whitespace tokens.
    Substitution spans never overlap, and applying them to the input
    reconstructs the output exactly.
    """
    tokens = list(_TOKEN_RE.finditer(text))
    max_n = lex.max_variant_tokens
    subs: List[Substitution] = []
    i = 0
    while i < len(tokens):
        matched = False
        for n in range(min(max_n, len(tokens) - i), 0, -1):
            phrase = " ".join(t.group(0) for t in tokens[i:i + n])
            key = phrase.casefold()
            if key in lex.canonical_keys:
                # Already canonical; consume so a shorter variant inside it
                # (e.g. "height" within "fundal height") cannot re-fire.
                i += n
                matched = True
                break
            entry = lex.index.get(key)
            if entry is not None:
                start = tokens[i].start()
                end = tokens[i + n - 1].end()
                subs.append(Substitution(start, end, text[start:end], entry.canonical))
                i += n
                matched = True
                break
        if not matched:
            i += 1
    if not subs:
        return text, []
    out_parts: List[str] = []
    cursor = 0
    for sub in subs:
        out_parts.append(text[cursor:sub.start])
        out_parts.append(sub.replacement)
        cursor = sub.end
    out_parts.append(text[cursor:])
    return "".join(out_parts), subs


def canonical_spelling(token: str, lex: Lexicon) -> str:
    """Collapse a Roman-Urdu spelling variant to its representative spelling."""
    return lex.spellings.get(token.casefold(), token)
