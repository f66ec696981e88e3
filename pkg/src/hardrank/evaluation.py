"""Ranking metrics, relative-improvement arithmetic and paired significance.

nDCG@k uses the exponential gain 2^grade - 1 (configurable to linear) with
a log2(rank + 1) discount; the ideal DCG ranks ALL judged documents for the
query and truncates at k. Reciprocal rank is 1/rank of the first document
at or above the relevance threshold. Queries without any positive judgment
score 0 and are excluded from aggregate means by default.

Significance between systems is a two-tailed paired t-test on per-query
differences, flagged at the 95% and 90% levels.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats as scipy_stats

from .corpus_io import Qrels, RunList, RunRecord

GAINS = ("exp", "linear")
METRIC_NAMES = ("ndcg10", "rr")


def _gain(grade: int, gain: str) -> float:
    if gain == "exp":
        return float(2**grade - 1)
    if gain == "linear":
        return float(grade)
    raise ValueError(f"gain must be one of {GAINS}, got {gain!r}")


def ndcg_at_k(
    ranking: Sequence[RunRecord],
    judgments: Mapping[str, int],
    k: int = 10,
    gain: str = "exp",
) -> float:
    """Normalized DCG at cutoff k against one query's graded judgments."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ideal = sorted(judgments.values(), reverse=True)[:k]
    idcg = sum(_gain(g, gain) / math.log2(i + 2) for i, g in enumerate(ideal))
    if idcg == 0.0:
        return 0.0
    dcg = sum(
        _gain(judgments.get(rec.doc_id, 0), gain) / math.log2(i + 2)
        for i, rec in enumerate(ranking[:k])
    )
    return dcg / idcg


def reciprocal_rank(
    ranking: Sequence[RunRecord],
    judgments: Mapping[str, int],
    cutoff: int | None = None,
    rel_threshold: int = 1,
) -> float:
    """1/rank of the first relevant document, 0 if none within the cutoff."""
    if cutoff is not None and cutoff < 1:
        raise ValueError(f"cutoff must be >= 1, got {cutoff}")
    scanned = ranking if cutoff is None else ranking[:cutoff]
    for i, rec in enumerate(scanned, start=1):
        if judgments.get(rec.doc_id, 0) >= rel_threshold:
            return 1.0 / i
    return 0.0


def relative_improvement(sys_value: float, base_value: float) -> float:
    """(sys - base) / base * 100. Reports render this to 1 decimal."""
    if base_value <= 0.0:
        raise ValueError(f"baseline must be > 0, got {base_value}")
    return (sys_value - base_value) / base_value * 100.0


@dataclass(frozen=True)
class PairedTestResult:
    t: float
    df: int
    p_two_tailed: float
    zero_variance: bool = False

    @property
    def significant_95(self) -> bool:
        return self.p_two_tailed < 0.05

    @property
    def significant_90(self) -> bool:
        return self.p_two_tailed < 0.10

    @property
    def level(self) -> int | None:
        if self.significant_95:
            return 95
        if self.significant_90:
            return 90
        return None


def paired_test(
    per_query_sys: Sequence[float], per_query_base: Sequence[float]
) -> PairedTestResult:
    """Two-tailed paired t-test on per-query metric differences.

    Degenerate inputs follow fixed conventions: all-zero differences give
    p = 1 (no evidence); zero-variance nonzero-mean differences give p = 0
    with the zero_variance flag set.
    """
    if len(per_query_sys) != len(per_query_base):
        raise ValueError(
            f"length mismatch: {len(per_query_sys)} vs {len(per_query_base)}"
        )
    n = len(per_query_sys)
    if n < 2:
        raise ValueError("need at least 2 paired observations")
    diffs = np.asarray(per_query_sys, dtype=float) - np.asarray(per_query_base, dtype=float)
    df = n - 1
    mean = float(diffs.mean())
    sd = float(diffs.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return PairedTestResult(t=0.0, df=df, p_two_tailed=1.0)
        return PairedTestResult(
            t=math.copysign(math.inf, mean), df=df, p_two_tailed=0.0, zero_variance=True
        )
    t = mean / (sd / math.sqrt(n))
    p = 2.0 * float(scipy_stats.t.sf(abs(t), df))
    return PairedTestResult(t=t, df=df, p_two_tailed=p)


@dataclass
class SystemReport:
    name: str
    per_query: dict[str, dict[str, float]]  # qid -> metric -> value
    means: dict[str, float]
    n_queries: int
    n_excluded: int
    delta_pct: dict[str, float | None] = field(default_factory=dict)
    p_value: dict[str, float | None] = field(default_factory=dict)
    sig_level: dict[str, int | None] = field(default_factory=dict)


@dataclass
class MetricReport:
    systems: list[SystemReport]
    baseline: str
    test_name: str = "paired-t (two-tailed)"

    def system(self, name: str) -> SystemReport:
        for sys_report in self.systems:
            if sys_report.name == name:
                return sys_report
        raise KeyError(name)


def build_report(
    runs: Mapping[str, RunList],
    qrels: Qrels,
    baseline: str,
    k: int = 10,
    rr_cutoff: int | None = None,
    rel_threshold: int = 1,
    gain: str = "exp",
    include_no_positive: bool = False,
) -> MetricReport:
    """Per-query and aggregate metrics for named runs, with baseline deltas.

    Every judged query is evaluated for every system (a query absent from a
    run scores 0). Queries with no positive judgment are excluded from the
    aggregate means unless include_no_positive is set; the same query set is
    used for every system so the significance tests pair correctly.
    """
    if baseline not in runs:
        raise ValueError(f"baseline {baseline!r} not among runs {sorted(runs)}")
    qids = qrels.query_ids()
    included = [
        qid
        for qid in qids
        if include_no_positive or qrels.has_positive(qid, rel_threshold)
    ]
    if not included:
        raise ValueError("no evaluable queries (none with positive judgments)")

    reports: dict[str, SystemReport] = {}
    for name, run in runs.items():
        per_query: dict[str, dict[str, float]] = {}
        for qid in qids:
            judgments = qrels.for_query(qid)
            entry = run.entries.get(qid, [])
            per_query[qid] = {
                "ndcg10": ndcg_at_k(entry, judgments, k, gain),
                "rr": reciprocal_rank(entry, judgments, rr_cutoff, rel_threshold),
            }
        means = {
            metric: float(np.mean([per_query[qid][metric] for qid in included]))
            for metric in METRIC_NAMES
        }
        reports[name] = SystemReport(
            name=name,
            per_query=per_query,
            means=means,
            n_queries=len(included),
            n_excluded=len(qids) - len(included),
        )

    base = reports[baseline]
    for name, report in reports.items():
        for metric in METRIC_NAMES:
            if name == baseline:
                report.delta_pct[metric] = None
                report.p_value[metric] = None
                report.sig_level[metric] = None
                continue
            try:
                report.delta_pct[metric] = relative_improvement(
                    report.means[metric], base.means[metric]
                )
            except ValueError:
                report.delta_pct[metric] = None
            result = paired_test(
                [report.per_query[qid][metric] for qid in included],
                [base.per_query[qid][metric] for qid in included],
            )
            report.p_value[metric] = result.p_two_tailed
            report.sig_level[metric] = result.level

    ordered = [reports[baseline]] + [
        reports[name] for name in sorted(reports) if name != baseline
    ]
    return MetricReport(systems=ordered, baseline=baseline)


_SIG_MARK = {95: "*", 90: "#", None: ""}


def _fmt_metric(report: SystemReport, metric: str) -> str:
    value = f"{report.means[metric]:.3f}"
    delta = report.delta_pct.get(metric)
    mark = _SIG_MARK[report.sig_level.get(metric)]
    if delta is None:
        return value
    return f"{value} ({delta:+.1f}%){mark}"


def render_report(report: MetricReport) -> str:
    """Aligned plain-text table; metrics to 3 decimals, deltas to 1."""
    headers = ["system", "nDCG@10", "RR", "p(nDCG@10)", "p(RR)"]
    rows = []
    for sys_report in report.systems:
        p_n = sys_report.p_value.get("ndcg10")
        p_r = sys_report.p_value.get("rr")
        rows.append(
            [
                sys_report.name + (" [baseline]" if sys_report.name == report.baseline else ""),
                _fmt_metric(sys_report, "ndcg10"),
                _fmt_metric(sys_report, "rr"),
                "-" if p_n is None else f"{p_n:.4f}",
                "-" if p_r is None else f"{p_r:.4f}",
            ]
        )
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * w for w in widths),
    ]
    lines += ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in rows]
    first = report.systems[0]
    lines.append(
        f"queries: {first.n_queries} evaluated, {first.n_excluded} excluded "
        f"(no positive judgments); significance: {report.test_name}, "
        f"* = 95%, # = 90%"
    )
    return "\n".join(lines)


def report_jsonl(report: MetricReport) -> list[str]:
    """One machine-readable JSON record per system (3dp metrics, 1dp deltas)."""
    lines = []
    for sys_report in report.systems:
        record = {
            "system": sys_report.name,
            "baseline": report.baseline,
            "n_queries": sys_report.n_queries,
            "n_excluded": sys_report.n_excluded,
            "ndcg10": round(sys_report.means["ndcg10"], 3),
            "rr": round(sys_report.means["rr"], 3),
            "delta_ndcg10_pct": _round1(sys_report.delta_pct.get("ndcg10")),
            "delta_rr_pct": _round1(sys_report.delta_pct.get("rr")),
            "p_ndcg10": sys_report.p_value.get("ndcg10"),
            "p_rr": sys_report.p_value.get("rr"),
            "sig_ndcg10": sys_report.sig_level.get("ndcg10"),
            "sig_rr": sys_report.sig_level.get("rr"),
            "test": report.test_name,
        }
        lines.append(json.dumps(record, sort_keys=True))
    return lines


def _round1(value: float | None) -> float | None:
    return None if value is None else round(value, 1)
