"""Parsers and writers for every on-disk artifact.

Formats (one record per line everywhere):

- Run file (TREC 6-column): ``qid Q0 docid rank score tag``
- Qrels: ``qid 0 docid grade``
- Queries: ``qid<TAB>query text``
- QPP scores: ``qid<TAB>score`` with score in [0, 1]
- Corpus: one JSON object per line with keys ``doc_id`` and ``text``

Determinism rules shared by all writers:

- Queries of a run are written in ascending qid order; records within a
  query sorted by score descending, ties broken by doc_id ascending, ranks
  rewritten 1..n.
- Scores are rendered with ``repr`` (shortest round-trip decimal), so
  ``parse_run(write_run(r)) == r`` bit-exactly.

Blank lines are skipped with a warning. Duplicate records are errors, never
last-one-wins.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

log = logging.getLogger(__name__)


class ParseError(ValueError):
    """Malformed input line; carries the 1-based line number."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class DuplicateEntryError(ParseError):
    """The same key appeared twice where exactly one record is allowed."""


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str
    passages: tuple[str, ...] | None = None


@dataclass(frozen=True)
class Query:
    query_id: str
    text: str
    hardness_label: str = "unknown"  # "hard" | "easy" | "unknown"


@dataclass(frozen=True)
class RunRecord:
    doc_id: str
    score: float
    rank: int


@dataclass
class Qrels:
    """Graded relevance judgments keyed by (query_id, doc_id)."""

    judgments: dict[tuple[str, str], int] = field(default_factory=dict)

    def grade(self, query_id: str, doc_id: str, default: int = 0) -> int:
        return self.judgments.get((query_id, doc_id), default)

    def for_query(self, query_id: str) -> dict[str, int]:
        return {d: g for (q, d), g in self.judgments.items() if q == query_id}

    def query_ids(self) -> list[str]:
        return sorted({q for q, _ in self.judgments})

    def has_positive(self, query_id: str, threshold: int = 1) -> bool:
        return any(
            g >= threshold for (q, _), g in self.judgments.items() if q == query_id
        )


@dataclass
class RunList:
    """Per-query ranked lists; the common currency between all stages.

    Invariants: within each query, ranks are contiguous 1..n, scores are
    non-increasing with rank, and no doc_id repeats.
    """

    entries: dict[str, list[RunRecord]] = field(default_factory=dict)
    tag: str = ""

    def query_ids(self) -> list[str]:
        return sorted(self.entries)

    def for_query(self, query_id: str) -> list[RunRecord]:
        return self.entries[query_id]

    def validate(self) -> None:
        for qid, records in self.entries.items():
            seen: set[str] = set()
            prev_score = math.inf
            for i, rec in enumerate(records, start=1):
                if rec.rank != i:
                    raise ValueError(f"{qid}: rank {rec.rank} at position {i}")
                if rec.score > prev_score:
                    raise ValueError(f"{qid}: score increases at rank {i}")
                if rec.doc_id in seen:
                    raise ValueError(f"{qid}: duplicate doc_id {rec.doc_id!r}")
                seen.add(rec.doc_id)
                prev_score = rec.score


def rank_records(scored: Iterable[tuple[str, float]]) -> list[RunRecord]:
    """Sort (doc_id, score) pairs into a valid ranked list.

    Score descending, ties by doc_id ascending, ranks assigned 1..n.
    """
    ordered = sorted(scored, key=lambda pair: (-pair[1], pair[0]))
    return [RunRecord(doc_id, score, i) for i, (doc_id, score) in enumerate(ordered, 1)]


def _iter_lines(lines: Iterable[str]) -> Iterator[tuple[int, str]]:
    """Yield (line_no, stripped) for non-blank lines, warning on blanks."""
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            log.warning("line %d: blank line skipped", line_no)
            continue
        yield line_no, line


def _parse_score(token: str, line_no: int, what: str = "score") -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"non-numeric {what} {token!r}", line_no) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite {what} {token!r}", line_no)
    return value


def parse_run(lines: Iterable[str]) -> RunList:
    """Parse a TREC run file into a RunList.

    Input ranks are checked for being integers but otherwise ignored; each
    query's records are re-sorted by score (ties by doc_id) and ranks are
    rewritten, so the output satisfies the RunList invariants regardless of
    input line order.
    """
    by_query: dict[str, list[tuple[str, float]]] = {}
    seen: set[tuple[str, str]] = set()
    tag = ""
    for line_no, line in _iter_lines(lines):
        fields = line.split()
        if len(fields) != 6:
            raise ParseError(f"expected 6 fields, got {len(fields)}", line_no)
        qid, _q0, doc_id, rank_s, score_s, line_tag = fields
        try:
            int(rank_s)
        except ValueError:
            raise ParseError(f"non-numeric rank {rank_s!r}", line_no) from None
        score = _parse_score(score_s, line_no)
        if (qid, doc_id) in seen:
            raise DuplicateEntryError(f"duplicate record ({qid}, {doc_id})", line_no)
        seen.add((qid, doc_id))
        by_query.setdefault(qid, []).append((doc_id, score))
        if not tag:
            tag = line_tag
    return RunList(
        entries={qid: rank_records(pairs) for qid, pairs in by_query.items()},
        tag=tag,
    )


def write_run(run: RunList, tag: str | None = None) -> list[str]:
    """Render a RunList as TREC 6-column lines (no trailing newlines)."""
    run.validate()
    out_tag = tag if tag is not None else (run.tag or "run")
    lines = []
    for qid in sorted(run.entries):
        for rec in run.entries[qid]:
            lines.append(f"{qid} Q0 {rec.doc_id} {rec.rank} {rec.score!r} {out_tag}")
    return lines


def parse_qrels(lines: Iterable[str]) -> Qrels:
    """Parse 4-column qrels. Duplicate (qid, docid) pairs are errors."""
    judgments: dict[tuple[str, str], int] = {}
    for line_no, line in _iter_lines(lines):
        fields = line.split()
        if len(fields) != 4:
            raise ParseError(f"expected 4 fields, got {len(fields)}", line_no)
        qid, _iteration, doc_id, grade_s = fields
        try:
            grade = int(grade_s)
        except ValueError:
            raise ParseError(f"non-integer grade {grade_s!r}", line_no) from None
        if grade < 0:
            raise ParseError(f"negative grade {grade}", line_no)
        key = (qid, doc_id)
        if key in judgments:
            raise DuplicateEntryError(f"duplicate judgment ({qid}, {doc_id})", line_no)
        judgments[key] = grade
    return Qrels(judgments)


def write_qrels(qrels: Qrels) -> list[str]:
    return [
        f"{qid} 0 {doc_id} {grade}"
        for (qid, doc_id), grade in sorted(qrels.judgments.items())
    ]


def parse_queries(lines: Iterable[str]) -> list[Query]:
    """Parse ``qid<TAB>text`` lines, preserving file order."""
    queries: list[Query] = []
    seen: set[str] = set()
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            log.warning("line %d: blank line skipped", line_no)
            continue
        if line.count("\t") != 1:
            raise ParseError(
                f"expected exactly one TAB, got {line.count(chr(9))}", line_no
            )
        qid, text = line.split("\t")
        qid = qid.strip()
        text = text.strip()
        if not qid:
            raise ParseError("empty query id", line_no)
        if not text:
            raise ParseError(f"empty text for query {qid!r}", line_no)
        if qid in seen:
            raise DuplicateEntryError(f"duplicate query id {qid!r}", line_no)
        seen.add(qid)
        queries.append(Query(qid, text))
    return queries


def write_queries(queries: Iterable[Query]) -> list[str]:
    return [f"{q.query_id}\t{q.text}" for q in queries]


def parse_qpp_scores(lines: Iterable[str]) -> dict[str, float]:
    """Parse ``qid<TAB>score`` lines; scores must lie in [0, 1]."""
    scores: dict[str, float] = {}
    for line_no, line in _iter_lines(lines):
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError(f"expected 2 TAB-separated fields, got {len(parts)}", line_no)
        qid, score_s = parts[0].strip(), parts[1].strip()
        score = _parse_score(score_s, line_no)
        if not 0.0 <= score <= 1.0:
            raise ParseError(f"score {score} outside [0, 1]", line_no)
        if qid in scores:
            raise DuplicateEntryError(f"duplicate query id {qid!r}", line_no)
        scores[qid] = score
    return scores


def write_qpp_scores(scores: Mapping[str, float]) -> list[str]:
    return [f"{qid}\t{scores[qid]!r}" for qid in sorted(scores)]


def parse_corpus(lines: Iterable[str]) -> list[Document]:
    """Parse a JSON-lines corpus with ``doc_id`` and ``text`` per record."""
    docs: list[Document] = []
    seen: set[str] = set()
    for line_no, line in _iter_lines(lines):
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", line_no) from None
        if not isinstance(record, dict) or "doc_id" not in record or "text" not in record:
            raise ParseError("record must be an object with doc_id and text", line_no)
        doc_id = str(record["doc_id"])
        if not doc_id:
            raise ParseError("empty doc_id", line_no)
        if doc_id in seen:
            raise DuplicateEntryError(f"duplicate doc_id {doc_id!r}", line_no)
        seen.add(doc_id)
        passages = record.get("passages")
        docs.append(
            Document(
                doc_id=doc_id,
                text=str(record["text"]),
                passages=tuple(passages) if passages is not None else None,
            )
        )
    return docs


def write_corpus(docs: Iterable[Document]) -> list[str]:
    lines = []
    for doc in docs:
        record: dict = {"doc_id": doc.doc_id, "text": doc.text}
        if doc.passages is not None:
            record["passages"] = list(doc.passages)
        lines.append(json.dumps(record, sort_keys=True))
    return lines


# Path-based conveniences. Readers stream; writers end the file with a newline.


def _read_lines(path) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.readlines()


def _write_lines(path, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(line + "\n" for line in lines)


def read_run_file(path) -> RunList:
    return parse_run(_read_lines(path))


def write_run_file(run: RunList, path, tag: str | None = None) -> None:
    _write_lines(path, write_run(run, tag))


def read_qrels_file(path) -> Qrels:
    return parse_qrels(_read_lines(path))


def write_qrels_file(qrels: Qrels, path) -> None:
    _write_lines(path, write_qrels(qrels))


def read_queries_file(path) -> list[Query]:
    return parse_queries(_read_lines(path))


def write_queries_file(queries: Iterable[Query], path) -> None:
    _write_lines(path, write_queries(queries))


def read_qpp_scores_file(path) -> dict[str, float]:
    return parse_qpp_scores(_read_lines(path))


def write_qpp_scores_file(scores: Mapping[str, float], path) -> None:
    _write_lines(path, write_qpp_scores(scores))


def read_corpus_file(path) -> list[Document]:
    return parse_corpus(_read_lines(path))


def write_corpus_file(docs: Iterable[Document], path) -> None:
    _write_lines(path, write_corpus(docs))


def corpus_by_id(docs: Iterable[Document]) -> dict[str, Document]:
    """Index a document list by doc_id."""
    return {doc.doc_id: doc for doc in docs}
