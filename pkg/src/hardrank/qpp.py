"""Per-query hardness estimation from post-retrieval evidence.

A logistic model over statistics of the query's top-k first-stage results
is trained against nDCG@10 labels with a soft-target binary cross-entropy.
Because the training target measures how WELL retrieval did (higher =
easier), the default orientation inverts the prediction so that the emitted
estimate psi is a hardness score: psi = 1 - predicted effectiveness. The
orientation is recorded in the provider id of every estimate.

A file-backed provider serves precomputed scores through the same contract
so externally produced estimates can stand in for the trained model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .corpus_io import Query, RunRecord, read_qpp_scores_file
from .lexical_retrieval import InvertedIndex
from .linear_model import apply_zscore, fit_logistic, open_unit_sigmoid, zscore_stats
from .text import tokenize

QPP_MODEL_FORMAT = "hardrank-qpp"
QPP_MODEL_VERSION = 1

QPP_FEATURE_NAMES = (
    "mean_topk_score",
    "stdev_topk_score",
    "max_topk_score",
    "score_gap",
    "query_length",
    "mean_term_idf",
)

ORIENTATIONS = ("hardness", "effectiveness")


@dataclass(frozen=True)
class QppEstimate:
    query_id: str
    psi: float
    provider_id: str

    def __post_init__(self):
        if not 0.0 <= self.psi <= 1.0:
            raise ValueError(f"psi must be in [0, 1], got {self.psi}")


@dataclass
class QppModel:
    weights: np.ndarray
    bias: float
    feature_means: np.ndarray
    feature_stds: np.ndarray
    k: int = 10
    orientation: str = "hardness"  # emit 1 - prediction when "hardness"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.orientation not in ORIENTATIONS:
            raise ValueError(f"orientation must be one of {ORIENTATIONS}")

    @property
    def provider_id(self) -> str:
        suffix = "1-minus-ndcg10" if self.orientation == "hardness" else "ndcg10"
        return f"qpp-logistic-v1[{suffix}]"

    def __eq__(self, other) -> bool:
        if not isinstance(other, QppModel):
            return NotImplemented
        return (
            np.array_equal(self.weights, other.weights)
            and self.bias == other.bias
            and np.array_equal(self.feature_means, other.feature_means)
            and np.array_equal(self.feature_stds, other.feature_stds)
            and self.k == other.k
            and self.orientation == other.orientation
            and self.metadata == other.metadata
        )


def qpp_features(query: Query, topk: Sequence[RunRecord], index: InvertedIndex) -> np.ndarray:
    """Feature vector over the query and its top-k retrieval scores.

    Order (see QPP_FEATURE_NAMES): mean, population stdev and max of the
    top-k scores; gap between the first and last score; query token count;
    mean idf of the distinct query terms (terms absent from the index take
    the df=0 idf, i.e. maximally rare).
    """
    if not topk:
        raise ValueError("topk must be non-empty")
    scores = np.array([rec.score for rec in topk], dtype=float)
    terms = sorted(set(tokenize(query.text)))
    if terms:
        n = index.n_docs
        idfs = []
        for term in terms:
            df = index.document_frequency(term)
            idfs.append(max(0.0, np.log((n - df + 0.5) / (df + 0.5))))
        mean_idf = float(np.mean(idfs))
    else:
        mean_idf = 0.0
    return np.array(
        [
            float(scores.mean()),
            float(scores.std()),
            float(scores.max()),
            float(scores[0] - scores[-1]),
            float(len(tokenize(query.text))),
            mean_idf,
        ]
    )


def train_qpp(
    labeled: Sequence[tuple[Query, Sequence[RunRecord], float]],
    index: InvertedIndex,
    epochs: int = 500,
    learning_rate: float = 0.05,
    k: int = 10,
    orientation: str = "hardness",
) -> QppModel:
    """Fit the estimator on (query, top-k, nDCG@10 label) triples.

    Soft-target BCE over the effectiveness labels; the model itself always
    predicts effectiveness, and `orientation` controls whether estimates are
    inverted into hardness scores at inference time.
    """
    if len(labeled) < 2:
        raise ValueError("need at least 2 labeled queries")
    labels = np.array([label for _, _, label in labeled], dtype=float)
    if np.any((labels < 0.0) | (labels > 1.0)):
        bad = labels[(labels < 0.0) | (labels > 1.0)][0]
        raise ValueError(f"labels must lie in [0, 1], got {bad}")
    features = np.array(
        [qpp_features(query, topk, index) for query, topk, _ in labeled], dtype=float
    )
    means, stds = zscore_stats(features)
    fit = fit_logistic(apply_zscore(features, means, stds), labels, epochs, learning_rate)
    return QppModel(
        weights=fit.weights,
        bias=fit.bias,
        feature_means=means,
        feature_stds=stds,
        k=k,
        orientation=orientation,
        metadata={
            "epochs": epochs,
            "learning_rate": learning_rate,
            "n_queries": len(labeled),
            "loss_curve": fit.losses,
        },
    )


def estimate(
    model: QppModel, query: Query, topk: Sequence[RunRecord], index: InvertedIndex
) -> QppEstimate:
    """Hardness estimate for one query given its top-k retrieval."""
    if not topk:
        raise ValueError("topk must be non-empty")
    feats = qpp_features(query, topk[: model.k], index)
    z = apply_zscore(feats, model.feature_means, model.feature_stds)
    effectiveness = open_unit_sigmoid(float(np.dot(model.weights, z)) + model.bias)
    psi = 1.0 - effectiveness if model.orientation == "hardness" else effectiveness
    return QppEstimate(query.query_id, psi, model.provider_id)


class QppProvider(Protocol):
    """Source of hardness estimates, model-backed or file-backed."""

    def estimate_query(
        self, query: Query, topk: Sequence[RunRecord] | None = None
    ) -> QppEstimate:
        ...


@dataclass
class ModelQppProvider:
    model: QppModel
    index: InvertedIndex

    def estimate_query(
        self, query: Query, topk: Sequence[RunRecord] | None = None
    ) -> QppEstimate:
        if not topk:
            raise ValueError(f"query {query.query_id}: topk must be non-empty")
        return estimate(self.model, query, topk, self.index)


@dataclass
class FileQppProvider:
    """Precomputed per-query scores; lookup of an unknown query is an error."""

    scores: dict[str, float]
    provider_id: str = "qpp-file"

    def estimate_query(
        self, query: Query, topk: Sequence[RunRecord] | None = None
    ) -> QppEstimate:
        if query.query_id not in self.scores:
            raise ValueError(f"no QPP score for query {query.query_id!r}")
        return QppEstimate(query.query_id, self.scores[query.query_id], self.provider_id)


def file_provider(path) -> FileQppProvider:
    """Load a `qid<TAB>score` file into a provider (scores validated in [0,1])."""
    return FileQppProvider(read_qpp_scores_file(path))


def save_qpp_model(model: QppModel, path) -> None:
    payload = {
        "format": QPP_MODEL_FORMAT,
        "version": QPP_MODEL_VERSION,
        "weights": model.weights.tolist(),
        "bias": model.bias,
        "feature_means": model.feature_means.tolist(),
        "feature_stds": model.feature_stds.tolist(),
        "k": model.k,
        "orientation": model.orientation,
        "metadata": model.metadata,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)


def load_qpp_model(path) -> QppModel:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != QPP_MODEL_FORMAT:
        raise ValueError(f"not a QPP model file: {path}")
    if payload.get("version") != QPP_MODEL_VERSION:
        raise ValueError(f"unsupported QPP model version {payload.get('version')}")
    return QppModel(
        weights=np.array(payload["weights"], dtype=float),
        bias=float(payload["bias"]),
        feature_means=np.array(payload["feature_means"], dtype=float),
        feature_stds=np.array(payload["feature_stds"], dtype=float),
        k=int(payload["k"]),
        orientation=payload["orientation"],
        metadata=payload.get("metadata", {}),
    )
