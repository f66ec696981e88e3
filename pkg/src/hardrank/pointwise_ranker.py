"""Trainable pointwise re-ranker over query-document feature vectors.

The same code path is instantiated twice: a base ranker trained on all
original queries and a specialized ranker trained only on enriched hard
queries. The two differ in nothing but their training data.

A score-file ranker with the same reranking contract lets externally
produced scores (e.g. from a neural model) stand in for either ranker.
"""

from __future__ import annotations

import json
import logging
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

import numpy as np

from .corpus_io import Document, Qrels, Query, RunRecord, rank_records
from .enrichment import EnrichedQuery
from .lexical_retrieval import Bm25Params, InvertedIndex, bm25_search, score_pair
from .linear_model import apply_zscore, bce_loss, fit_logistic, open_unit_sigmoid, zscore_stats
from .text import tokenize

log = logging.getLogger(__name__)

MODEL_FORMAT = "hardrank-ranker"
MODEL_VERSION = 1

FEATURE_NAMES = (
    "bm25",
    "term_overlap",
    "tf_cosine",
    "query_length",
    "log_doc_length",
    "early_coverage",
)

EARLY_WINDOW = 20  # tokens treated as the document's title/lead


@dataclass(frozen=True)
class TrainingInstance:
    query_id: str
    doc_id: str
    features: tuple[float, ...]
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")


@dataclass
class RankerModel:
    """Logistic scorer: sigmoid(w . z + b) over z-scored features."""

    weights: np.ndarray
    bias: float
    feature_means: np.ndarray
    feature_stds: np.ndarray
    metadata: dict = field(default_factory=dict)
    model_id: str = "pointwise-logistic-v1"

    def __eq__(self, other) -> bool:
        if not isinstance(other, RankerModel):
            return NotImplemented
        return (
            np.array_equal(self.weights, other.weights)
            and self.bias == other.bias
            and np.array_equal(self.feature_means, other.feature_means)
            and np.array_equal(self.feature_stds, other.feature_stds)
            and self.metadata == other.metadata
            and self.model_id == other.model_id
        )


def _query_text(query) -> str:
    if isinstance(query, EnrichedQuery):
        return query.enriched_text
    if isinstance(query, Query):
        return query.text
    return str(query)


def extract_features(query, doc: Document, index: InvertedIndex,
                     params: Bm25Params = Bm25Params()) -> np.ndarray:
    """Deterministic 6-feature vector for a (query, document) pair.

    Order (see FEATURE_NAMES):
      bm25            BM25 score of the pair under the index statistics
      term_overlap    |distinct query terms in doc| / |distinct query terms|
      tf_cosine       cosine between query and doc term-frequency vectors
      query_length    query token count
      log_doc_length  ln(1 + doc token count)
      early_coverage  fraction of distinct query terms in the doc's first
                      20 tokens
    """
    text = _query_text(query)
    q_tokens = tokenize(text)
    d_tokens = tokenize(doc.text)
    q_counts = Counter(q_tokens)
    d_counts = Counter(d_tokens)
    q_terms = set(q_counts)

    bm25 = score_pair(index, text, doc.doc_id, params)

    if q_terms:
        overlap = len(q_terms & d_counts.keys()) / len(q_terms)
        early_terms = set(d_tokens[:EARLY_WINDOW])
        early = len(q_terms & early_terms) / len(q_terms)
    else:
        overlap = 0.0
        early = 0.0

    dot = sum(q_counts[t] * d_counts[t] for t in q_terms if t in d_counts)
    q_norm = math.sqrt(sum(c * c for c in q_counts.values()))
    d_norm = math.sqrt(sum(c * c for c in d_counts.values()))
    cosine = dot / (q_norm * d_norm) if dot else 0.0

    return np.array(
        [bm25, overlap, cosine, float(len(q_tokens)), math.log1p(len(d_tokens)), early]
    )


def score(model: RankerModel, features: np.ndarray) -> float:
    """Relevance score in the open interval (0, 1)."""
    z = apply_zscore(features, model.feature_means, model.feature_stds)
    return open_unit_sigmoid(float(np.dot(model.weights, z)) + model.bias)


def train(
    instances: Sequence[TrainingInstance],
    epochs: int = 500,
    learning_rate: float = 0.1,
    seed: int = 0,
    model_id: str = "pointwise-logistic-v1",
) -> RankerModel:
    """Fit the logistic scorer by full-batch gradient descent on the BCE.

    Weights start at zero; normalization statistics are computed from the
    training set and frozen into the model. The run is deterministic; the
    seed is recorded for forward compatibility with stochastic variants but
    full-batch descent does not consume it.
    """
    if not instances:
        raise ValueError("training set is empty")
    labels = np.array([inst.label for inst in instances], dtype=float)
    if len(set(labels.tolist())) < 2:
        raise ValueError("training set must contain both labels")
    features = np.array([inst.features for inst in instances], dtype=float)
    means, stds = zscore_stats(features)
    fit = fit_logistic(apply_zscore(features, means, stds), labels, epochs, learning_rate)
    return RankerModel(
        weights=fit.weights,
        bias=fit.bias,
        feature_means=means,
        feature_stds=stds,
        metadata={
            "epochs": epochs,
            "learning_rate": learning_rate,
            "seed": seed,
            "n_instances": len(instances),
            "loss_curve": fit.losses,
        },
        model_id=model_id,
    )


def training_loss(model: RankerModel, instances: Sequence[TrainingInstance]) -> float:
    """Mean BCE of the model on a set of instances."""
    preds = np.array([score(model, np.asarray(i.features)) for i in instances])
    labels = np.array([i.label for i in instances], dtype=float)
    return bce_loss(labels, preds, clamp=True)


def rerank(
    model: RankerModel,
    query,
    candidates: Sequence[RunRecord],
    corpus: Mapping[str, Document],
    index: InvertedIndex,
    params: Bm25Params = Bm25Params(),
) -> list[RunRecord]:
    """Re-score the candidate documents with the model.

    Keeps exactly the input doc set; sorts by model score descending with
    doc_id tie-breaks; rewrites ranks.
    """
    if not candidates:
        raise ValueError("candidate list is empty")
    pairs = []
    for rec in candidates:
        doc = corpus.get(rec.doc_id)
        if doc is None:
            raise ValueError(f"doc_id {rec.doc_id!r} not in corpus")
        pairs.append((rec.doc_id, score(model, extract_features(query, doc, index, params))))
    return rank_records(pairs)


class Ranker(Protocol):
    """Anything that can rerank a candidate list for a query."""

    def rerank_query(self, query: Query, candidates: Sequence[RunRecord]) -> list[RunRecord]:
        ...


@dataclass
class ModelRanker:
    """Adapter binding a trained model to a corpus and index.

    `query_texts` optionally overrides the text used per query id (e.g.
    enriched rewrites); queries without an override use their own text.
    """

    model: RankerModel
    corpus: Mapping[str, Document]
    index: InvertedIndex
    params: Bm25Params = Bm25Params()
    query_texts: Mapping[str, str] | None = None

    def rerank_query(self, query: Query, candidates: Sequence[RunRecord]) -> list[RunRecord]:
        text = query.text
        if self.query_texts is not None:
            text = self.query_texts.get(query.query_id, text)
        return rerank(self.model, text, candidates, self.corpus, self.index, self.params)


@dataclass
class ScoreFileRanker:
    """Ranker backed by a preloaded (query_id, doc_id) -> score map."""

    scores: Mapping[tuple[str, str], float]

    @classmethod
    def from_run(cls, run) -> "ScoreFileRanker":
        return cls(
            {
                (qid, rec.doc_id): rec.score
                for qid, records in run.entries.items()
                for rec in records
            }
        )

    def rerank_query(self, query: Query, candidates: Sequence[RunRecord]) -> list[RunRecord]:
        if not candidates:
            raise ValueError("candidate list is empty")
        pairs = []
        for rec in candidates:
            key = (query.query_id, rec.doc_id)
            if key not in self.scores:
                raise ValueError(f"no stored score for {key}")
            pairs.append((rec.doc_id, self.scores[key]))
        return rank_records(pairs)


def score_file_ranker(scores: Mapping[tuple[str, str], float]) -> ScoreFileRanker:
    return ScoreFileRanker(scores)


def build_training_set(
    query_texts: Sequence[tuple[str, str]],
    qrels: Qrels,
    index: InvertedIndex,
    corpus: Mapping[str, Document],
    params: Bm25Params = Bm25Params(),
    depth: int = 100,
    negatives_per_positive: int = 4,
    label_threshold: int = 1,
    seed: int = 13,
) -> list[TrainingInstance]:
    """Assemble labeled instances for a set of (query_id, query_text) pairs.

    Positives are the judged documents with grade >= label_threshold.
    Negatives are sampled (without replacement, seeded) from the BM25
    top-`depth` documents that are unjudged or judged below the threshold,
    capped at negatives_per_positive per positive.
    """
    rng = random.Random(seed)
    instances: list[TrainingInstance] = []
    for qid, text in query_texts:
        judged = qrels.for_query(qid)
        positives = [
            d for d, g in sorted(judged.items()) if g >= label_threshold and d in corpus
        ]
        skipped = [d for d, g in judged.items() if g >= label_threshold and d not in corpus]
        if skipped:
            log.warning("query %s: %d judged docs missing from corpus", qid, len(skipped))
        if not positives:
            continue
        candidates = bm25_search(index, Query(qid, text), depth, params)
        pool = sorted(
            rec.doc_id
            for rec in candidates
            if judged.get(rec.doc_id, 0) < label_threshold
        )
        n_negatives = min(len(pool), negatives_per_positive * len(positives))
        negatives = rng.sample(pool, n_negatives) if n_negatives else []
        for doc_id in positives:
            feats = extract_features(text, corpus[doc_id], index, params)
            instances.append(TrainingInstance(qid, doc_id, tuple(feats), 1))
        for doc_id in negatives:
            feats = extract_features(text, corpus[doc_id], index, params)
            instances.append(TrainingInstance(qid, doc_id, tuple(feats), 0))
    return instances


def save_model(model: RankerModel, path) -> None:
    """Persist the model as a versioned plain-text (JSON) record."""
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "model_id": model.model_id,
        "weights": model.weights.tolist(),
        "bias": model.bias,
        "feature_means": model.feature_means.tolist(),
        "feature_stds": model.feature_stds.tolist(),
        "metadata": model.metadata,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)


def load_model(path) -> RankerModel:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a ranker model file: {path}")
    if payload.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {payload.get('version')}")
    return RankerModel(
        weights=np.array(payload["weights"], dtype=float),
        bias=float(payload["bias"]),
        feature_means=np.array(payload["feature_means"], dtype=float),
        feature_stds=np.array(payload["feature_stds"], dtype=float),
        metadata=payload.get("metadata", {}),
        model_id=payload.get("model_id", "pointwise-logistic-v1"),
    )
