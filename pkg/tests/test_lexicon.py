import pytest
from hypothesis import given, strategies as st

from matcare.lexicon import (
    CATEGORY_COLLOQUIAL,
    Lexicon,
    LexiconEntry,
    LexiconError,
    canonical_spelling,
    default_lexicon,
    normalize_term,
    normalize_text,
)


def test_default_lexicon_size(lexicon):
    # 108 dictionary terms plus 3 orthographic variant groups.
    assert len(lexicon.entries) == 111


def test_colloquialism_normalization(lexicon):
    out, subs = normalize_text("patient has sugar and blood pressure", lexicon)
    assert out == "patient has diabetes and hypertension"
    assert len(subs) == 2
    for sub in subs:
        assert "patient has sugar and blood pressure"[sub.start:sub.end] == \
            sub.original


def test_normalize_term_passthrough(lexicon):
    assert normalize_term("unrelated words", lexicon) == \
        ("unrelated words", False)
    assert normalize_term("Sugar", lexicon)[0] == "diabetes"


def test_longest_match_first():
    lex = Lexicon(entries=[
        LexiconEntry("hypertension", CATEGORY_COLLOQUIAL, ("blood pressure",)),
        LexiconEntry("blood", CATEGORY_COLLOQUIAL, ("blud",)),
        LexiconEntry("pressure sore", CATEGORY_COLLOQUIAL, ("pressure",)),
    ])
    out, subs = normalize_text("high blood pressure today", lex)
    # The two-word phrase wins over the single-word entries.
    assert out == "high hypertension today"
    assert len(subs) == 1


def test_case_insensitive(lexicon):
    out, _ = normalize_text("Patient Has SUGAR", lexicon)
    assert "diabetes" in out


def test_variant_collision_rejected():
    with pytest.raises(LexiconError):
        Lexicon(entries=[
            LexiconEntry("diabetes", CATEGORY_COLLOQUIAL, ("sugar",)),
            LexiconEntry("glucose", CATEGORY_COLLOQUIAL, ("sugar",)),
        ])


def test_canonical_as_another_entrys_variant_rejected():
    # Would make normalization non-idempotent: a -> b -> c.
    with pytest.raises(LexiconError):
        Lexicon(entries=[
            LexiconEntry("b", CATEGORY_COLLOQUIAL, ("a",)),
            LexiconEntry("c", CATEGORY_COLLOQUIAL, ("b",)),
        ])


def test_normalization_idempotent_on_default(lexicon):
    samples = [
        "patient has sugar and dil ka marz",
        "no nasha reported, bp checked, edd confirmed",
        "height measured, depression noted, pehla hamal",
    ]
    for text in samples:
        once, _ = normalize_text(text, lexicon)
        twice, subs = normalize_text(once, lexicon)
        assert twice == once
        assert subs == []


@given(st.text(alphabet="abcdefgh ", max_size=60))
def test_normalization_idempotent_property(text):
    lex = default_lexicon()
    once, _ = normalize_text(text, lex)
    twice, _ = normalize_text(once, lex)
    assert twice == once


def test_orthographic_representative(lexicon):
    # First listed spelling is the representative.
    assert canonical_spelling("krty", lexicon) == "kertay"
    assert canonical_spelling("krte", lexicon) == "kertay"
    assert canonical_spelling("kertay", lexicon) == "kertay"
    assert canonical_spelling("unknownword", lexicon) == "unknownword"


def test_substitution_spans_reconstruct_input(lexicon):
    text = "she has sugar, bp and dil ka marz daily"
    out, subs = normalize_text(text, lexicon)
    rebuilt = list(text)
    for sub in sorted(subs, key=lambda s: s.start, reverse=True):
        rebuilt[sub.start:sub.end] = sub.replacement
    assert "".join(rebuilt) == out
