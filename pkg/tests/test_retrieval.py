"""Chunking, scoring, and query construction for guideline retrieval.

The scoring oracle recomputes every chunk score exhaustively with plain
Python dict arithmetic and re-sorts with the documented tie order.
"""

import math
import re

import pytest

from matcare.retrieval import (
    CorpusError,
    GuidelineDoc,
    default_corpus,
    flags_to_query,
    index_corpus,
    load_corpus_dir,
    parse_guideline_file,
    retrieve,
)
from matcare.rules import RedFlag, CATEGORY_CRITICAL


def _words(n, offset=0):
    return " ".join(f"w{i + offset}" for i in range(n))


def test_chunk_count_oracle():
    # 500 tokens, window 200, stride 160: windows start at 0, 160, 320;
    # the third window reaches the end, so 3 chunks of 200/200/180 tokens.
    doc = GuidelineDoc("d1", "src", "t", _words(500))
    index = index_corpus([doc], chunk_tokens=200, overlap=40)
    assert len(index.chunks) == 3
    sizes = [sum(c.counts.values()) for c in index.chunks]
    assert sizes == [200, 200, 180]
    # Spans are char offsets into the body and reproduce the chunk text.
    for chunk in index.chunks:
        lo, hi = chunk.span
        assert doc.body[lo:hi] == chunk.text


def test_exact_multiple_has_no_empty_tail():
    doc = GuidelineDoc("d1", "src", "t", _words(200))
    index = index_corpus([doc], chunk_tokens=200, overlap=40)
    assert len(index.chunks) == 1


def test_overlap_repeats_tokens():
    doc = GuidelineDoc("d1", "src", "t", _words(240))
    index = index_corpus([doc], chunk_tokens=200, overlap=40)
    assert len(index.chunks) == 2
    first = set(index.chunks[0].counts)
    second = set(index.chunks[1].counts)
    assert len(first & second) == 40


def test_index_guards():
    with pytest.raises(CorpusError):
        index_corpus([])
    doc = GuidelineDoc("d1", "s", "t", "body text")
    with pytest.raises(CorpusError):
        index_corpus([doc, doc])
    with pytest.raises(CorpusError):
        index_corpus([doc], chunk_tokens=40, overlap=40)
    with pytest.raises(CorpusError):
        GuidelineDoc("d2", "s", "t", "")


def _score_oracle(query, index):
    terms = sorted(set(re.findall(r"[A-Za-z0-9']+", query.casefold())))
    n = len(index.chunks)
    rows = []
    for chunk in index.chunks:
        score = 0.0
        for term in terms:
            tf = chunk.counts.get(term, 0)
            if tf:
                score += tf * (math.log((n + 1) / (index.doc_count[term] + 1)) + 1.0)
        if score > 0:
            rows.append((score, chunk.doc_id, chunk.span))
    rows.sort(key=lambda r: (-r[0], r[1], r[2]))
    return rows


def _toy_index():
    docs = [
        GuidelineDoc("a", "s", "t", "anemia iron hemoglobin " * 10 + "folate"),
        GuidelineDoc("b", "s", "t", "hypertension blood pressure " * 10 + "iron"),
        GuidelineDoc("c", "s", "t", "diet exercise rest " * 30),
    ]
    return index_corpus(docs, chunk_tokens=20, overlap=5)


@pytest.mark.parametrize("query", [
    "anemia", "iron hemoglobin", "blood pressure iron", "folate",
    "anemia anemia anemia", "unknownterm", "diet",
])
def test_retrieve_matches_exhaustive_oracle(query):
    index = _toy_index()
    got = retrieve(query, index, k=5)
    want = _score_oracle(query, index)[:5]
    assert [(s.doc_id, s.span) for s in got] == [(d, sp) for _, d, sp in want]
    for s, (score, _, _) in zip(got, want):
        assert s.score == pytest.approx(score)


def test_duplicate_query_terms_count_once():
    index = _toy_index()
    assert [ (s.doc_id, s.span, s.score) for s in retrieve("anemia", index)] == \
        [(s.doc_id, s.span, s.score) for s in retrieve("anemia anemia ANEMIA", index)]


def test_retrieve_deterministic_and_traceable():
    docs = default_corpus()
    index = index_corpus(docs)
    first = retrieve("hypertension blood pressure referral", index, k=3)
    second = retrieve("hypertension blood pressure referral", index, k=3)
    assert first == second
    assert first, "bundled corpus must answer a hypertension query"
    for snippet in first:
        doc = index.docs[snippet.doc_id]
        lo, hi = snippet.span
        assert doc.body[lo:hi] == snippet.text


def test_empty_query_returns_nothing():
    assert retrieve("...", _toy_index()) == []
    with pytest.raises(ValueError):
        retrieve("anemia", _toy_index(), k=0)


def test_flags_to_query_uses_rule_vocabulary(lexicon):
    flag = RedFlag(CATEGORY_CRITICAL, "anemia", "Low hemoglobin", "Hb 9")
    query = flags_to_query([flag], lexicon)
    assert "hemoglobin" in query
    assert "iron" in query
    unknown = RedFlag(CATEGORY_CRITICAL, "missing:urine_albumin",
                      "Albumin not recorded", "")
    assert "urine albumin" in flags_to_query([unknown])


def test_parse_guideline_file_and_errors(tmp_path):
    text = "---\ndoc_id: g1\nsource_label: WHO\ntitle: Anemia\n---\nBody text."
    doc = parse_guideline_file(text)
    assert (doc.doc_id, doc.source_label, doc.title) == ("g1", "WHO", "Anemia")
    assert doc.body == "Body text."
    with pytest.raises(CorpusError):
        parse_guideline_file("no front matter")
    with pytest.raises(CorpusError):
        parse_guideline_file("---\ndoc_id: g1\n---\nbody")
    (tmp_path / "g1.txt").write_text(text)
    assert len(load_corpus_dir(tmp_path)) == 1
    with pytest.raises(CorpusError):
        load_corpus_dir(tmp_path / "empty")


def test_default_corpus_indexable():
    docs = default_corpus()
    assert len(docs) >= 3
    index = index_corpus(docs)
    assert index.chunks
