"""Lexical retrieval over maternal-health guideline snippets.

Deterministic term-weighted search (document-frequency damped) over fixed
overlapping chunks. No embeddings, no model dependency; the interface is a
seam where a vector retriever could be swapped in.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .lexicon import Lexicon, normalize_text

_TOKEN_RE = re.compile(r"[A-Za-z0-9']+")


class CorpusError(ValueError):
    """Empty corpus, duplicate document ids, or a malformed corpus file."""


@dataclass(frozen=True)
class GuidelineDoc:
    doc_id: str
    source_label: str
    title: str
    body: str

    def __post_init__(self):
        if not self.body:
            raise CorpusError(f"document {self.doc_id!r} has an empty body")


@dataclass(frozen=True)
class Snippet:
    doc_id: str
    span: Tuple[int, int]  # char offsets into the source body
    text: str
    score: float


@dataclass(frozen=True)
class _Chunk:
    doc_id: str
    span: Tuple[int, int]
    text: str
    counts: Dict[str, int]


@dataclass
class Index:
    chunks: List[_Chunk] = field(default_factory=list)
    doc_count: Dict[str, int] = field(default_factory=dict)  # term -> chunks containing it
    chunk_tokens: int = 200
    overlap: int = 40
    docs: Dict[str, GuidelineDoc] = field(default_factory=dict)


def _tokenize_spans(text: str) -> List[Tuple[str, int, int]]:
    return [(m.group(0).casefold(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def index_corpus(docs: List[GuidelineDoc], chunk_tokens: int = 200,
                 overlap: int = 40) -> Index:
    """Chunk documents with a fixed overlapping window and build term stats."""
    if not docs:
        raise CorpusError("empty corpus")
    if overlap >= chunk_tokens:
        raise CorpusError("overlap must be smaller than the chunk size")
    index = Index(chunk_tokens=chunk_tokens, overlap=overlap)
    seen = set()
    for doc in docs:
        if doc.doc_id in seen:
            raise CorpusError(f"duplicate doc_id: {doc.doc_id}")
        seen.add(doc.doc_id)
        index.docs[doc.doc_id] = doc
        tokens = _tokenize_spans(doc.body)
        start = 0
        while True:
            end = min(start + chunk_tokens, len(tokens))
            window = tokens[start:end]
            if window:
                char_lo = window[0][1]
                char_hi = window[-1][2]
                counts: Dict[str, int] = {}
                for term, _, _ in window:
                    counts[term] = counts.get(term, 0) + 1
                index.chunks.append(_Chunk(
                    doc_id=doc.doc_id,
                    span=(char_lo, char_hi),
                    text=doc.body[char_lo:char_hi],
                    counts=counts,
                ))
                for term in counts:
                    index.doc_count[term] = index.doc_count.get(term, 0) + 1
            if end >= len(tokens):
                break
            start += chunk_tokens - overlap
    return index


def retrieve(query: str, index: Index, k: int = 3) -> List[Snippet]:
    """Top-k chunks by damped term-frequency score, ties by (doc_id, span)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    terms = sorted({t for t, _, _ in _tokenize_spans(query)})
    if not terms:
        return []
    n_chunks = len(index.chunks)
    scored: List[Tuple[float, str, Tuple[int, int], _Chunk]] = []
    for chunk in index.chunks:
        score = 0.0
        for term in terms:
            tf = chunk.counts.get(term, 0)
            if tf:
                idf = math.log((n_chunks + 1) / (index.doc_count.get(term, 0) + 1)) + 1.0
                score += tf * idf
        if score > 0.0:
            scored.append((score, chunk.doc_id, chunk.span, chunk))
    scored.sort(key=lambda item: (-item[0], item[1], item[2]))
    return [
        Snippet(doc_id=c.doc_id, span=c.span, text=c.text, score=s)
        for s, _, _, c in scored[:k]
    ]


#: Query vocabulary per deterministic rule id, used to search guidelines
#: relevant to the triggered flags.
_RULE_QUERY_TERMS = {
    "hypertension": "hypertension blood pressure monitoring",
    "obesity": "obesity bmi weight",
    "anemia": "anemia hemoglobin iron",
    "hyperglycemia_rbg": "gestational diabetes blood glucose screening",
    "hyperglycemia_hba1c": "gestational diabetes hba1c screening",
    "proteinuria": "proteinuria albumin preeclampsia",
    "glycosuria": "glycosuria urine glucose diabetes",
}


def flags_to_query(flags, lexicon: Optional[Lexicon] = None) -> str:
    """Build a retrieval query from red flags: titles plus rule vocabulary."""
    parts: List[str] = []
    for flag in flags:
        parts.append(flag.title)
        terms = _RULE_QUERY_TERMS.get(flag.rule_id)
        parts.append(terms if terms else flag.rule_id.replace(":", " ").replace("_", " "))
    query = " ".join(parts)
    if lexicon is not None and query:
        query, _ = normalize_text(query, lexicon)
    return query


_FRONT_MATTER_RE = re.compile(r"^---\n(.*?)\n---\n", re.DOTALL)


def load_corpus_dir(path) -> List[GuidelineDoc]:
    """Load plain-text guideline documents with a front-matter header.

    Header lines between '---' markers: doc_id, source_label, title.
    """
    docs = []
    for file in sorted(Path(path).glob("*.txt")):
        docs.append(parse_guideline_file(file.read_text("utf-8"), name=file.name))
    if not docs:
        raise CorpusError(f"no guideline documents found in {path}")
    return docs


def parse_guideline_file(text: str, name: str = "<stream>") -> GuidelineDoc:
    match = _FRONT_MATTER_RE.match(text)
    if not match:
        raise CorpusError(f"{name}: missing front-matter header")
    header: Dict[str, str] = {}
    for line in match.group(1).splitlines():
        if ":" not in line:
            raise CorpusError(f"{name}: malformed header line {line!r}")
        key, _, value = line.partition(":")
        header[key.strip()] = value.strip()
    for required in ("doc_id", "source_label", "title"):
        if required not in header:
            raise CorpusError(f"{name}: header missing {required}")
    return GuidelineDoc(
        doc_id=header["doc_id"],
        source_label=header["source_label"],
        title=header["title"],
        body=text[match.end():].strip(),
    )


def default_corpus() -> List[GuidelineDoc]:
    """The small curated guideline corpus bundled with the package."""
    root = resources.files("matcare.data").joinpath("guidelines")
    docs = []
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".txt"):
            docs.append(parse_guideline_file(entry.read_text("utf-8"), name=entry.name))
    return docs
