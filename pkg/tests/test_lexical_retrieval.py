"""BM25 against a brute-force closed-form oracle, plus passage selection."""

import math
import random

import pytest

from hardrank.corpus_io import Document, Query
from hardrank.lexical_retrieval import (
    Bm25Params,
    bm25_search,
    build_index,
    load_index,
    save_index,
    score_pair,
    select_passage,
)
from hardrank.text import tokenize


def oracle_bm25(corpus, query_text, params=Bm25Params()):
    """Direct evaluation of the scoring formula, independent of the index.

    Robertson idf with 0.5 smoothing floored at 0; saturated tf with length
    normalization; sum over distinct query terms.
    """
    token_lists = [tokenize(d.text) for d in corpus]
    n = len(corpus)
    avg = sum(len(toks) for toks in token_lists) / n
    scores = {}
    for doc, toks in zip(corpus, token_lists):
        total = 0.0
        for term in set(tokenize(query_text)):
            tf = toks.count(term)
            if tf == 0:
                continue
            df = sum(1 for other in token_lists if term in other)
            idf = max(0.0, math.log((n - df + 0.5) / (df + 0.5)))
            total += idf * tf * (params.k1 + 1) / (
                tf + params.k1 * (1 - params.b + params.b * len(toks) / avg)
            )
        scores[doc.doc_id] = total
    return scores


class TestBuildIndex:
    def test_tokenizer_and_postings(self):
        idx = build_index([Document("d1", "Cats cats dog")])
        assert idx.postings == {"cats": [(0, 2)], "dog": [(0, 1)]}
        assert idx.doc_lengths == [3]

    def test_average_length(self):
        idx = build_index([Document("d1", "a b"), Document("d2", "a b c d")])
        assert idx.avg_doc_length == 3.0

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            build_index([])

    def test_duplicate_doc_id_rejected(self):
        with pytest.raises(ValueError):
            build_index([Document("d1", "a"), Document("d1", "b")])


class TestBm25Search:
    def test_absent_term_returns_empty(self):
        idx = build_index([Document("d1", "cats dog")])
        assert bm25_search(idx, Query("q", "zebra"), 10) == []

    def test_single_doc_corpus_matches_closed_form(self):
        # With N=1 and df=1 the floored idf is 0, so the closed form gives 0
        # and the zero-score exclusion leaves the result empty.
        corpus = [Document("d1", "lean body mass")]
        idx = build_index(corpus)
        oracle = oracle_bm25(corpus, "lean")
        assert oracle["d1"] == 0.0
        assert score_pair(idx, "lean", "d1") == oracle["d1"]
        assert bm25_search(idx, Query("q", "lean"), 5) == []

    def test_k1_returns_argmax_doc(self):
        corpus = [
            Document("d1", "solar panels convert light"),
            Document("d2", "solar solar solar energy"),
            Document("d3", "wind turbines spin"),
        ]
        idx = build_index(corpus)
        oracle = oracle_bm25(corpus, "solar energy")
        best = max(sorted(oracle), key=lambda d: oracle[d])
        hits = bm25_search(idx, Query("q", "solar energy"), 1)
        assert len(hits) == 1
        assert hits[0].doc_id == best

    def test_scores_match_oracle_within_1e12_relative(self):
        rng = random.Random(7)
        vocab = [f"w{i}" for i in range(30)]
        corpus = [
            Document(f"d{i}", " ".join(rng.choices(vocab, k=rng.randint(3, 40))))
            for i in range(25)
        ]
        idx = build_index(corpus)
        for trial in range(20):
            q_text = " ".join(rng.choices(vocab, k=rng.randint(1, 4)))
            oracle = oracle_bm25(corpus, q_text)
            hits = bm25_search(idx, Query("q", q_text), 100)
            for rec in hits:
                expected = oracle[rec.doc_id]
                assert rec.score == pytest.approx(expected, rel=1e-12)
            # every positive-scoring doc is returned, zero-scoring excluded
            positive = {d for d, s in oracle.items() if s > 0}
            assert {rec.doc_id for rec in hits} == positive

    def test_results_sorted_non_increasing(self):
        corpus = [Document(f"d{i}", "apple banana " * (i + 1)) for i in range(5)]
        idx = build_index(corpus)
        hits = bm25_search(idx, Query("q", "apple"), 10)
        scores = [rec.score for rec in hits]
        assert scores == sorted(scores, reverse=True)
        assert all(s > 0 for s in scores)

    def test_tie_breaks_by_doc_id(self):
        corpus = [
            Document("b", "apple pie"),
            Document("a", "apple pie"),
            Document("c", "other words entirely"),
            Document("d", "more unrelated filler"),
            Document("e", "yet more unrelated text"),
        ]
        idx = build_index(corpus)
        hits = bm25_search(idx, Query("q", "apple"), 10)
        assert [rec.doc_id for rec in hits] == ["a", "b"]

    def test_k_must_be_positive(self):
        idx = build_index([Document("d1", "a")])
        with pytest.raises(ValueError):
            bm25_search(idx, Query("q", "a"), 0)


class TestSelectPassage:
    def test_short_doc_returned_whole(self):
        doc = Document("d1", "lean body mass")
        passage, matched = select_passage(doc, Query("q", "lean mass"), window=10)
        assert passage == "lean body mass"
        assert matched == 2

    def test_terms_in_second_half_select_second_half(self):
        filler = " ".join(f"x{i}" for i in range(40))
        tail = "lean body mass explained simply"
        doc = Document("d1", filler + " " + tail)
        passage, matched = select_passage(doc, Query("q", "lean body mass"), window=10)
        assert "lean" in passage
        assert matched == 3
        assert "x0" not in passage

    def test_argmax_on_distinct_matches(self):
        doc = Document(
            "d1",
            "alpha filler filler filler filler filler filler filler "
            "alpha beta gamma filler filler filler filler filler",
        )
        passage, matched = select_passage(doc, Query("q", "alpha beta gamma"), window=8)
        assert matched == 3
        assert "beta" in passage and "gamma" in passage

    def test_output_is_contiguous_span(self):
        rng = random.Random(3)
        words = [f"w{rng.randint(0, 15)}" for _ in range(200)]
        doc = Document("d1", " ".join(words))
        passage, _ = select_passage(doc, Query("q", "w3 w7 w11"), window=16)
        assert passage in doc.text

    def test_earliest_window_wins_full_tie(self):
        doc = Document("d1", "apple x x x x x x x apple y y y y y y y")
        passage, matched = select_passage(doc, Query("q", "apple"), window=8)
        assert matched == 1
        assert passage.startswith("apple x")


class TestIndexPersistence:
    def test_roundtrip(self, tmp_path):
        corpus = [Document("d1", "a b c"), Document("d2", "b c d e")]
        idx = build_index(corpus)
        path = tmp_path / "index.json"
        save_index(idx, path)
        loaded = load_index(path)
        assert loaded.postings == idx.postings
        assert loaded.doc_ids == idx.doc_ids
        assert loaded.doc_lengths == idx.doc_lengths
        assert loaded.avg_doc_length == idx.avg_doc_length

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "other.json"
        path.write_text('{"format": "something-else"}')
        with pytest.raises(ValueError):
            load_index(path)
