"""Hardness classification, prompt building, and the enrichment flow."""

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from hardrank.corpus_io import Document, Qrels, Query, corpus_by_id
from hardrank.enrichment import (
    EnrichmentError,
    HardnessRule,
    HttpGenerator,
    StubGenerator,
    build_prompt,
    classify_hardness,
    enrich,
    enrich_all,
    parse_enriched,
    write_enriched,
)
from hardrank.lexical_retrieval import build_index


class TestClassifyHardness:
    def test_short_query_is_hard(self):
        rule = HardnessRule(max_token_count=4)
        assert classify_hardness(Query("q", "what is lbm"), rule) == "hard"

    def test_long_covered_query_is_easy(self):
        rule = HardnessRule(max_token_count=5, min_context_terms=2)
        text = "population growth trends in coastal cities of western europe"
        assert classify_hardness(Query("q", text), rule) == "easy"

    def test_acronym_triggers_hard(self):
        rule = HardnessRule(max_token_count=2, acronym_pattern=True)
        assert classify_hardness(Query("q", "define NASA budget"), rule) == "hard"

    def test_acronym_rule_can_be_disabled(self):
        rule = HardnessRule(max_token_count=2, acronym_pattern=False, min_context_terms=1)
        assert classify_hardness(Query("q", "define NASA budget"), rule) == "easy"

    def test_lexicon_miss_is_hard(self):
        lexicon = frozenset("population growth trends in coastal cities of".split())
        rule = HardnessRule(max_token_count=2, lexicon=lexicon)
        hard = "population growth trends in xylographic cities"
        easy = "population growth trends in coastal cities"
        assert classify_hardness(Query("q", hard), rule) == "hard"
        assert classify_hardness(Query("q", easy), rule) == "easy"

    def test_too_few_content_terms_is_hard(self):
        rule = HardnessRule(max_token_count=3, min_context_terms=2)
        assert classify_hardness(Query("q", "what is it about then and now"), rule) == "hard"

    def test_pure_function(self):
        rule = HardnessRule()
        query = Query("q", "solar PV efficiency")
        assert classify_hardness(query, rule) == classify_hardness(query, rule)


class TestBuildPrompt:
    def test_contains_query_and_passage_verbatim(self):
        prompt = build_prompt(Query("q", "lbm"), "Lean body mass is fat-free mass.")
        assert "lbm" in prompt
        assert "Lean body mass is fat-free mass." in prompt

    def test_empty_passage_rejected(self):
        with pytest.raises(ValueError):
            build_prompt(Query("q", "lbm"), "")

    def test_deterministic(self):
        a = build_prompt(Query("q", "lbm"), "passage")
        b = build_prompt(Query("q", "lbm"), "passage")
        assert a == b


class EchoGenerator:
    """Test stub following the documented generator contract."""

    generator_id = "echo"

    def __init__(self, reply=None, fail=False):
        self.reply = reply
        self.fail = fail

    def generate(self, prompt, max_tokens):
        if self.fail:
            raise RuntimeError("backend down")
        if self.reply is not None:
            return self.reply
        # deterministic echo: query plus first 3 passage tokens
        from hardrank.enrichment import _prompt_fields

        query, passage = _prompt_fields(prompt)
        return f"REWRITTEN: {query} | {' '.join(passage.split()[:3])}"


@pytest.fixture
def setting():
    docs = [
        Document("d1", "Lean body mass lbm is total weight minus fat weight"),
        Document("d2", "Solar irradiance measures power per unit area"),
        Document("d3", "Rainfall statistics for temperate climates vary widely"),
    ]
    return docs, corpus_by_id(docs), build_index(docs)


class TestEnrich:
    def test_stub_echo_contract(self, setting):
        docs, corpus, index = setting
        out = enrich(Query("q1", "lbm"), index, corpus, EchoGenerator())
        assert out.enriched_text == "REWRITTEN: lbm | Lean body mass"
        assert out.context_doc_id == "d1"
        assert not out.fallback

    def test_no_match_falls_back_to_original(self, setting):
        docs, corpus, index = setting
        out = enrich(Query("q1", "zzz unknown"), index, corpus, EchoGenerator())
        assert out.enriched_text == "zzz unknown"
        assert out.fallback
        assert out.context_doc_id == ""

    def test_long_output_truncated_to_64_tokens(self, setting):
        docs, corpus, index = setting
        reply = " ".join(f"t{i}" for i in range(200))
        out = enrich(Query("q1", "lbm"), index, corpus, EchoGenerator(reply=reply))
        assert len(out.enriched_text.split()) == 64

    def test_multiline_output_trimmed_to_first_line(self, setting):
        docs, corpus, index = setting
        out = enrich(Query("q1", "lbm"), index, corpus,
                     EchoGenerator(reply="\nfirst line\nsecond line\n"))
        assert out.enriched_text == "first line"

    def test_generator_failure_carries_query_id(self, setting):
        docs, corpus, index = setting
        with pytest.raises(EnrichmentError, match="q7"):
            enrich(Query("q7", "lbm"), index, corpus, EchoGenerator(fail=True))

    def test_blank_completion_falls_back(self, setting):
        docs, corpus, index = setting
        out = enrich(Query("q1", "lbm"), index, corpus, EchoGenerator(reply="   \n"))
        assert out.enriched_text == "lbm"
        assert out.fallback

    def test_context_doc_is_bm25_rank1(self, setting):
        docs, corpus, index = setting
        out = enrich(Query("q1", "solar irradiance"), index, corpus, EchoGenerator())
        assert out.context_doc_id == "d2"

    def test_judged_context_prefers_highest_grade(self, setting):
        docs, corpus, index = setting
        qrels = Qrels({("q1", "d1"): 1, ("q1", "d2"): 3})
        out = enrich(
            Query("q1", "lbm"), index, corpus, EchoGenerator(),
            qrels=qrels, use_judged_context=True,
        )
        assert out.context_doc_id == "d2"

    def test_enrich_all_collects_errors(self, setting):
        docs, corpus, index = setting
        queries = [Query("q1", "lbm"), Query("q2", "solar")]
        enriched, errors = enrich_all(queries, index, corpus, EchoGenerator(fail=True))
        assert enriched == []
        assert sorted(e.query_id for e in errors) == ["q1", "q2"]

    def test_enrich_all_parallel_preserves_order(self, setting):
        docs, corpus, index = setting
        queries = [Query(f"q{i}", "lbm solar") for i in range(8)]
        sequential, _ = enrich_all(queries, index, corpus, EchoGenerator())
        threaded, _ = enrich_all(queries, index, corpus, EchoGenerator(), max_workers=4)
        assert sequential == threaded


class TestStubGenerator:
    def test_appends_new_content_terms(self):
        stub = StubGenerator(context_terms=3)
        prompt = build_prompt(Query("q", "lbm"), "the lean body mass of an athlete")
        out = stub.generate(prompt, 64)
        assert out == "lbm lean body mass"

    def test_no_new_terms_returns_query(self):
        stub = StubGenerator()
        prompt = build_prompt(Query("q", "lean body mass"), "lean body mass")
        assert stub.generate(prompt, 64) == "lean body mass"


class _Handler(BaseHTTPRequestHandler):
    failures_left = 0

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        if _Handler.failures_left > 0:
            _Handler.failures_left -= 1
            self.send_response(503)
            self.end_headers()
            return
        reply = json.dumps({"text": f"echo: {body['prompt'].splitlines()[-3][7:]}"})
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(reply.encode())

    def log_message(self, *args):
        pass


@pytest.fixture
def http_endpoint():
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/generate"
    server.shutdown()


class TestHttpGenerator:
    def test_round_trip(self, http_endpoint):
        gen = HttpGenerator(endpoint_url=http_endpoint, backoff_base=0.01)
        _Handler.failures_left = 0
        out = gen.generate(build_prompt(Query("q", "lbm"), "some passage"), 64)
        assert out.startswith("echo:")

    def test_retries_transient_failures(self, http_endpoint):
        gen = HttpGenerator(endpoint_url=http_endpoint, max_retries=3, backoff_base=0.01)
        _Handler.failures_left = 2
        out = gen.generate(build_prompt(Query("q", "lbm"), "some passage"), 64)
        assert out.startswith("echo:")

    def test_gives_up_after_retries(self, http_endpoint):
        gen = HttpGenerator(endpoint_url=http_endpoint, max_retries=1, backoff_base=0.01)
        _Handler.failures_left = 99
        with pytest.raises(RuntimeError, match="retries"):
            gen.generate("Query: x\nContext: y\n\nRewritten query:", 64)
        _Handler.failures_left = 0

    def test_unreachable_endpoint(self):
        gen = HttpGenerator(
            endpoint_url="http://127.0.0.1:1/nothing", max_retries=0, backoff_base=0.01,
            timeout=0.5,
        )
        with pytest.raises(RuntimeError):
            gen.generate("Query: x\nContext: y\n\nRewritten query:", 64)


class TestEnrichedTsv:
    def test_roundtrip_fields(self, setting):
        docs, corpus, index = setting
        enriched = [
            enrich(Query("q1", "lbm"), index, corpus, EchoGenerator()),
            enrich(Query("q2", "zzz"), index, corpus, EchoGenerator()),
        ]
        parsed = parse_enriched(write_enriched(enriched))
        assert parsed["q1"] == ("REWRITTEN: lbm | Lean body mass", "d1", False)
        assert parsed["q2"] == ("zzz", "", True)
