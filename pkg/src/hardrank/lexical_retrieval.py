"""First-stage BM25 retrieval and lexical passage selection.

Scoring uses the Robertson idf with 0.5 smoothing, floored at zero:

    idf(t) = max(0, ln((N - df + 0.5) / (df + 0.5)))

and the standard saturated term frequency with length normalization:

    score(q, d) = sum over distinct query terms t of
        idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len(d) / avg_len))

Documents scoring exactly zero are excluded from results. Ties break by
doc_id ascending. The index is immutable once built; searches over it are
safe to run concurrently.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .corpus_io import Document, Query, RunRecord, rank_records
from .text import tokenize, tokenize_with_spans

INDEX_FORMAT = "hardrank-index"
INDEX_VERSION = 1


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 0.9
    b: float = 0.4

    def __post_init__(self):
        if self.k1 <= 0:
            raise ValueError(f"k1 must be > 0, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must be in [0, 1], got {self.b}")


@dataclass
class InvertedIndex:
    """Term postings plus the per-document statistics BM25 needs."""

    postings: dict[str, list[tuple[int, int]]]  # term -> [(internal_id, tf)]
    doc_lengths: list[int]  # internal_id -> token count
    doc_ids: list[str]  # internal_id -> external doc_id
    avg_doc_length: float
    internal_ids: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.internal_ids:
            self.internal_ids = {d: i for i, d in enumerate(self.doc_ids)}

    @property
    def n_docs(self) -> int:
        return len(self.doc_ids)

    def document_frequency(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def idf(self, term: str) -> float:
        """Robertson idf with 0.5 smoothing, floored at 0."""
        df = self.document_frequency(term)
        return max(0.0, math.log((self.n_docs - df + 0.5) / (df + 0.5)))

    def term_frequencies(self, term: str) -> dict[int, int]:
        return dict(self.postings.get(term, ()))


def build_index(corpus: Sequence[Document]) -> InvertedIndex:
    """Build an inverted index over the corpus.

    Raises ValueError on an empty corpus or a duplicated doc_id.
    """
    if not corpus:
        raise ValueError("cannot index an empty corpus")
    postings: dict[str, list[tuple[int, int]]] = {}
    doc_lengths: list[int] = []
    doc_ids: list[str] = []
    seen: set[str] = set()
    for internal_id, doc in enumerate(corpus):
        if doc.doc_id in seen:
            raise ValueError(f"duplicate doc_id {doc.doc_id!r}")
        seen.add(doc.doc_id)
        tokens = tokenize(doc.text)
        doc_ids.append(doc.doc_id)
        doc_lengths.append(len(tokens))
        for term, tf in sorted(Counter(tokens).items()):
            postings.setdefault(term, []).append((internal_id, tf))
    avg = sum(doc_lengths) / len(doc_lengths)
    return InvertedIndex(
        postings=postings,
        doc_lengths=doc_lengths,
        doc_ids=doc_ids,
        avg_doc_length=avg,
    )


def bm25_term_score(
    tf: int, idf: float, doc_length: int, avg_doc_length: float, params: Bm25Params
) -> float:
    """One term's contribution to a document's BM25 score."""
    norm = params.k1 * (1.0 - params.b + params.b * doc_length / avg_doc_length)
    return idf * tf * (params.k1 + 1.0) / (tf + norm)


def bm25_scores(
    index: InvertedIndex,
    query_terms: Iterable[str],
    params: Bm25Params = Bm25Params(),
) -> dict[int, float]:
    """BM25 scores by internal doc id for every document matching any term.

    Iterates distinct query terms; repeated terms in a query contribute once.
    """
    scores: dict[int, float] = {}
    for term in sorted(set(query_terms)):
        idf = index.idf(term)
        if idf == 0.0:
            continue
        for internal_id, tf in index.postings.get(term, ()):
            scores[internal_id] = scores.get(internal_id, 0.0) + bm25_term_score(
                tf, idf, index.doc_lengths[internal_id], index.avg_doc_length, params
            )
    return scores


def bm25_search(
    index: InvertedIndex,
    query: Query,
    k: int,
    params: Bm25Params = Bm25Params(),
) -> list[RunRecord]:
    """Top-k documents for the query; zero-scoring documents are excluded."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    scores = bm25_scores(index, tokenize(query.text), params)
    pairs = [
        (index.doc_ids[internal_id], score)
        for internal_id, score in scores.items()
        if score > 0.0
    ]
    return rank_records(pairs)[:k]


def score_pair(
    index: InvertedIndex,
    query_text: str,
    doc_id: str,
    params: Bm25Params = Bm25Params(),
) -> float:
    """BM25 score of one (query, document) pair; the document must be indexed."""
    if doc_id not in index.internal_ids:
        raise ValueError(f"doc_id {doc_id!r} not in index")
    internal_id = index.internal_ids[doc_id]
    total = 0.0
    for term in sorted(set(tokenize(query_text))):
        idf = index.idf(term)
        if idf == 0.0:
            continue
        tf = dict(index.postings.get(term, ())).get(internal_id, 0)
        if tf == 0:
            continue
        total += bm25_term_score(
            tf, idf, index.doc_lengths[internal_id], index.avg_doc_length, params
        )
    return total


def select_passage(
    doc: Document,
    query: Query,
    window: int = 120,
    tf_k1: float = 0.9,
) -> tuple[str, int]:
    """Pick the document window that best covers the query's terms.

    Windows of `window` tokens slide with 50% overlap. The winner maximizes
    the number of distinct query terms present; ties prefer a higher
    saturated term-frequency mass (sum of tf/(tf + tf_k1) over matched
    terms), then the earliest window. Returns the original-text span of the
    winning window and its distinct-match count.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    spans = tokenize_with_spans(doc.text)
    query_terms = set(tokenize(query.text))
    if not spans:
        return doc.text, 0

    def window_key(tokens: list[str]) -> tuple[int, float]:
        counts = Counter(tokens)
        matched = query_terms & counts.keys()
        tf_mass = sum(counts[t] / (counts[t] + tf_k1) for t in matched)
        return len(matched), tf_mass

    if len(spans) <= window:
        distinct, _ = window_key([t for t, _, _ in spans])
        return doc.text, distinct

    stride = max(1, window // 2)
    best_start = 0
    best_key = (-1, -1.0)
    best_end = 0
    start = 0
    while start < len(spans):
        end = min(start + window, len(spans))
        key = window_key([t for t, _, _ in spans[start:end]])
        if key > best_key:
            best_key = key
            best_start, best_end = start, end
        if end == len(spans):
            break
        start += stride
    passage = doc.text[spans[best_start][1] : spans[best_end - 1][2]]
    return passage, best_key[0]


def save_index(index: InvertedIndex, path) -> None:
    """Persist the index as a single versioned JSON file."""
    payload = {
        "format": INDEX_FORMAT,
        "version": INDEX_VERSION,
        "doc_ids": index.doc_ids,
        "doc_lengths": index.doc_lengths,
        "avg_doc_length": index.avg_doc_length,
        "postings": {term: plist for term, plist in sorted(index.postings.items())},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_index(path) -> InvertedIndex:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != INDEX_FORMAT:
        raise ValueError(f"not an index file: {path}")
    if payload.get("version") != INDEX_VERSION:
        raise ValueError(f"unsupported index version {payload.get('version')}")
    return InvertedIndex(
        postings={
            term: [(int(i), int(tf)) for i, tf in plist]
            for term, plist in payload["postings"].items()
        },
        doc_lengths=[int(n) for n in payload["doc_lengths"]],
        doc_ids=list(payload["doc_ids"]),
        avg_doc_length=float(payload["avg_doc_length"]),
    )
