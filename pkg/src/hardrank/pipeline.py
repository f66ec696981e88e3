"""End-to-end orchestration shared by the command-line surface.

Each function here corresponds to one pipeline stage and works purely from
a PipelineConfig plus on-disk artifacts, so a full experiment is a sequence
of calls (index, enrich, train x3, run per method, eval) that is exactly
reproducible from the config and seed.
"""

from __future__ import annotations

import logging
from pathlib import Path

from .config import ConfigError, PipelineConfig
from .corpus_io import (
    Qrels,
    Query,
    RunList,
    corpus_by_id,
    read_corpus_file,
    read_qrels_file,
    read_queries_file,
    read_run_file,
    write_run_file,
)
from .enrichment import (
    EnrichedQuery,
    HttpGenerator,
    StubGenerator,
    classify_hardness,
    enrich_all,
    read_enriched_file,
    write_enriched_file,
)
from .evaluation import MetricReport, build_report
from .fusion import (
    FusionConfig,
    bsf,
    route_qpp,
    train_median_threshold,
    w_qpps,
    write_routing_log_file,
)
from .lexical_retrieval import (
    InvertedIndex,
    bm25_search,
    build_index,
    load_index,
    save_index,
)
from .pointwise_ranker import (
    ModelRanker,
    build_training_set,
    load_model,
    save_model,
    train,
)
from .qpp import ModelQppProvider, load_qpp_model, save_qpp_model, train_qpp

log = logging.getLogger(__name__)

RUN_METHODS = ("br", "sr", "bsf", "r_qpp", "w_qpps")


def _require(path: Path, hint: str) -> Path:
    if not path.exists():
        raise ConfigError(f"{path} does not exist ({hint})")
    return path


def make_generator(config: PipelineConfig):
    section = config.section("generator")
    if section["type"] == "stub":
        return StubGenerator(context_terms=section["stub_context_terms"])
    return HttpGenerator(
        endpoint_url=section["endpoint_url"],
        auth_token_env=section["auth_token_env"],
        max_retries=section["max_retries"],
        max_in_flight=section["max_in_flight"],
    )


def build_and_save_index(config: PipelineConfig, force: bool = False) -> InvertedIndex:
    corpus_path = _require(config.path("corpus"), "corpus JSONL")
    index_path = config.path("index")
    if index_path.exists() and not force:
        raise ConfigError(f"{index_path} already exists; pass --force to rebuild")
    corpus = read_corpus_file(corpus_path)
    index = build_index(corpus)
    index_path.parent.mkdir(parents=True, exist_ok=True)
    save_index(index, index_path)
    return index


def _load_retrieval(config: PipelineConfig):
    corpus = read_corpus_file(_require(config.path("corpus"), "corpus JSONL"))
    index = load_index(_require(config.path("index"), "run the index command first"))
    return corpus_by_id(corpus), index


def candidates_for(
    config: PipelineConfig, index: InvertedIndex, queries: list[Query]
) -> dict[str, list]:
    """BM25 top-depth candidates per query; empty-result queries are dropped."""
    params = config.bm25_params()
    out = {}
    for query in queries:
        hits = bm25_search(index, query, config.run_depth, params)
        if hits:
            out[query.query_id] = hits
        else:
            log.warning("query %s: no candidates retrieved, skipped", query.query_id)
    return out


def enrich_training_queries(
    config: PipelineConfig,
) -> tuple[list[EnrichedQuery], list, int]:
    """Classify the training queries and enrich the hard ones.

    Returns (enriched records, errors, number of hard queries). The enriched
    TSV is written even when empty so downstream stages see a consistent
    artifact.
    """
    corpus, index = _load_retrieval(config)
    queries = read_queries_file(_require(config.path("train_queries"), "training queries"))
    rule = config.hardness_rule()
    hard = [q for q in queries if classify_hardness(q, rule) == "hard"]
    section = config.section("enrichment")
    qrels = None
    if section["use_judged_context"]:
        qrels = read_qrels_file(_require(config.path("train_qrels"), "training qrels"))
    generator = make_generator(config)
    max_workers = 1
    if config.section("generator")["type"] == "http":
        max_workers = config.section("generator")["max_in_flight"]
    enriched, errors = enrich_all(
        hard,
        index,
        corpus,
        generator,
        max_workers=max_workers,
        params=config.bm25_params(),
        passage_window=section["passage_window"],
        qrels=qrels,
        use_judged_context=section["use_judged_context"],
    )
    out_path = config.path("enriched_queries")
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_enriched_file(enriched, out_path)
    return enriched, errors, len(hard)


def _model_path(config: PipelineConfig, which: str) -> Path:
    return config.path("models_dir") / f"{which}.json"


def train_ranker(config: PipelineConfig, which: str) -> Path:
    """Train and persist the base ('br') or specialized ('sr') ranker."""
    if which not in ("br", "sr"):
        raise ConfigError(f"unknown ranker {which!r}")
    corpus, index = _load_retrieval(config)
    qrels = read_qrels_file(_require(config.path("train_qrels"), "training qrels"))
    queries = read_queries_file(_require(config.path("train_queries"), "training queries"))

    if which == "br":
        texts = [(q.query_id, q.text) for q in queries]
    else:
        enriched_path = config.path("enriched_queries")
        enriched = read_enriched_file(enriched_path) if enriched_path.exists() else {}
        if not enriched:
            raise ConfigError(
                "specialized ranker requires enriched training queries; "
                "run the enrich command first"
            )
        texts = [(qid, text) for qid, (text, _, _) in sorted(enriched.items())]

    section = config.section("ranker")
    instances = build_training_set(
        texts,
        qrels,
        index,
        corpus,
        params=config.bm25_params(),
        depth=config.run_depth,
        negatives_per_positive=section["negatives_per_positive"],
        label_threshold=section["label_threshold"],
        seed=config.seed,
    )
    model = train(
        instances,
        epochs=section["epochs"],
        learning_rate=section["learning_rate"],
        seed=config.seed,
        model_id=f"pointwise-logistic-v1:{which}",
    )
    path = _model_path(config, which)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, path)
    _write_loss_curve(model.metadata["loss_curve"], path.with_suffix(".loss.tsv"))
    return path


def train_qpp_model(config: PipelineConfig) -> Path:
    """Train the hardness estimator against nDCG@10 of the first-stage run."""
    corpus, index = _load_retrieval(config)
    qrels_path = config.path("train_qrels")
    if not qrels_path.exists():
        raise ConfigError(
            f"{qrels_path} does not exist (QPP training labels need judgments)"
        )
    qrels = read_qrels_file(qrels_path)
    queries = read_queries_file(_require(config.path("train_queries"), "training queries"))
    labeled = _qpp_labels(config, index, queries, qrels)
    section = config.section("qpp")
    model = train_qpp(
        labeled,
        index,
        epochs=section["epochs"],
        learning_rate=section["learning_rate"],
        k=section["k"],
        orientation=section["orientation"],
    )
    path = _model_path(config, "qpp")
    path.parent.mkdir(parents=True, exist_ok=True)
    save_qpp_model(model, path)
    _write_loss_curve(model.metadata["loss_curve"], path.with_suffix(".loss.tsv"))
    return path


def _qpp_labels(config, index, queries, qrels: Qrels):
    from .evaluation import ndcg_at_k

    metrics = config.section("metrics")
    k = config.section("qpp")["k"]
    candidates = candidates_for(config, index, queries)
    labeled = []
    for query in queries:
        hits = candidates.get(query.query_id)
        if not hits:
            continue
        if not qrels.has_positive(query.query_id, config.section("ranker")["label_threshold"]):
            log.warning("query %s: no positive judgments, skipped for QPP", query.query_id)
            continue
        label = ndcg_at_k(
            hits, qrels.for_query(query.query_id), metrics["ndcg_k"], metrics["gain"]
        )
        labeled.append((query, hits[:k], label))
    if len(labeled) < 2:
        raise ConfigError("QPP training needs at least 2 labeled queries")
    return labeled


def _write_loss_curve(losses: list[float], path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(f"{epoch}\t{loss!r}\n" for epoch, loss in enumerate(losses))


def _fusion_config(config: PipelineConfig, method: str) -> FusionConfig:
    section = config.section("fusion")
    return FusionConfig(
        method=method if method in ("bsf", "r_qpp", "w_qpps") else "bsf",
        normalize=section["normalize"],
        routing_threshold=section["routing_threshold"],
    )


def _resolve_tau(config: PipelineConfig, index, provider: ModelQppProvider) -> float:
    threshold = config.section("fusion")["routing_threshold"]
    if isinstance(threshold, (int, float)) and not isinstance(threshold, bool):
        return float(threshold)
    train_queries = read_queries_file(
        _require(config.path("train_queries"), "training queries for train_median")
    )
    candidates = candidates_for(config, index, train_queries)
    psis = [
        provider.estimate_query(q, candidates[q.query_id]).psi
        for q in train_queries
        if q.query_id in candidates
    ]
    if not psis:
        raise ConfigError("train_median threshold needs training-query estimates")
    return train_median_threshold(psis)


def produce_run(config: PipelineConfig, method: str) -> tuple[Path, Path | None]:
    """Rank the test queries by one method and write the run file.

    Returns (run path, routing log path or None). Methods 'br' and 'sr'
    emit the single-ranker baselines the fusion methods are compared to.
    """
    if method not in RUN_METHODS:
        raise ConfigError(f"unknown method {method!r}; choose from {RUN_METHODS}")
    corpus, index = _load_retrieval(config)
    queries = read_queries_file(_require(config.path("test_queries"), "test queries"))
    candidates = candidates_for(config, index, queries)
    queries = [q for q in queries if q.query_id in candidates]
    params = config.bm25_params()

    def ranker(which: str) -> ModelRanker:
        model = load_model(
            _require(_model_path(config, which), f"train {which} first")
        )
        return ModelRanker(model, corpus, index, params)

    def single_run(which: str) -> RunList:
        re_ranker = ranker(which)
        return RunList(
            entries={
                q.query_id: re_ranker.rerank_query(q, candidates[q.query_id])
                for q in queries
            },
            tag=which,
        )

    routing_log: Path | None = None
    if method in ("br", "sr"):
        run = single_run(method)
    elif method == "bsf":
        run = bsf(single_run("br"), single_run("sr"), _fusion_config(config, "bsf"))
    else:
        qpp_model = load_qpp_model(
            _require(_model_path(config, "qpp"), "train qpp first")
        )
        provider = ModelQppProvider(qpp_model, index)
        if method == "r_qpp":
            tau = _resolve_tau(config, index, provider)
            run, decisions = route_qpp(
                ranker("br"),
                ranker("sr"),
                provider,
                queries,
                candidates,
                tau,
                _fusion_config(config, "r_qpp"),
            )
            routing_log = config.path("runs_dir") / "r_qpp.routing.tsv"
            routing_log.parent.mkdir(parents=True, exist_ok=True)
            write_routing_log_file(decisions, routing_log)
        else:
            psis = {
                q.query_id: provider.estimate_query(q, candidates[q.query_id]).psi
                for q in queries
            }
            run = w_qpps(
                single_run("br"),
                single_run("sr"),
                psis,
                _fusion_config(config, "w_qpps"),
            )

    run_path = config.path("runs_dir") / f"{method}.txt"
    run_path.parent.mkdir(parents=True, exist_ok=True)
    write_run_file(run, run_path)
    return run_path, routing_log


def evaluate_runs(
    config: PipelineConfig, run_paths: list[Path], baseline: str
) -> tuple[MetricReport, Path, Path]:
    """Score named run files against the test qrels and persist the report."""
    qrels = read_qrels_file(_require(config.path("test_qrels"), "test qrels"))
    runs = {}
    for path in run_paths:
        path = Path(path)
        _require(path, "run file")
        runs[path.stem] = read_run_file(path)
    metrics = config.section("metrics")
    report = build_report(
        runs,
        qrels,
        baseline,
        k=metrics["ndcg_k"],
        rr_cutoff=metrics["rr_cutoff"],
        gain=metrics["gain"],
        include_no_positive=metrics["include_no_positive"],
    )
    from .evaluation import render_report, report_jsonl

    reports_dir = config.path("reports_dir")
    reports_dir.mkdir(parents=True, exist_ok=True)
    text_path = reports_dir / "report.txt"
    jsonl_path = reports_dir / "report.jsonl"
    text_path.write_text(render_report(report) + "\n", encoding="utf-8")
    jsonl_path.write_text("\n".join(report_jsonl(report)) + "\n", encoding="utf-8")
    return report, text_path, jsonl_path
