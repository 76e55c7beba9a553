"""Reviewer assessments and the joined per-paper analysis matrix."""
from __future__ import annotations

import csv
import logging
import math
from collections import Counter, OrderedDict
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping, Optional, Sequence, TextIO

import numpy as np

from .errors import ParseError, ValidationError
from .indicators import DisruptionScores
from .normalize import PaperMetadata, PercentileScore
from .tsvio import fmt_sig, parse_float, read_table, write_table

log = logging.getLogger(__name__)

TAGS = (
    "confirmation",
    "controversial",
    "good-for-teaching",
    "hypothesis",
    "negative-null",
    "new-finding",
    "novel-drug-target",
    "refutation",
    "technical-advance",
)
EXCLUDED_TAGS = ("clinical-trial", "systematic-review", "review-commentary")
TAG_CLASSES = ("newness", "non-newness", "unclassified")

REVIEW_COLUMNS = ("paper_id", "stars", "tags")


def load_tag_classes(stream: Optional[TextIO] = None) -> dict[str, str]:
    """Tag -> {newness, non-newness, unclassified}; defaults to the bundled file."""
    if stream is None:
        text = resources.files("citedisrupt").joinpath("data/tag_classes.tsv").read_text("utf-8")
        lines = text.splitlines()
    else:
        lines = stream.read().splitlines()
    classes = {}
    for lineno, line in enumerate(lines, 1):
        if lineno == 1 or not line.strip():
            continue
        try:
            tag, cls = (c.strip() for c in line.split("\t"))
        except ValueError:
            raise ParseError("expected tag<TAB>class", line=lineno, source="tag classes") from None
        if tag not in TAGS or cls not in TAG_CLASSES:
            raise ParseError(f"bad tag class row {line!r}", line=lineno, source="tag classes")
        classes[tag] = cls
    missing = set(TAGS) - set(classes)
    if missing:
        raise ValidationError(f"tag classes missing for {sorted(missing)}")
    return classes


@dataclass(frozen=True)
class ReviewRow:
    paper: str
    stars: int
    tags: frozenset = frozenset()


@dataclass
class ReviewReport:
    rows: int = 0
    dropped_excluded: int = 0


def load_reviews(stream: TextIO, source: str = "reviews") -> tuple[list[ReviewRow], ReviewReport]:
    """Parse ``paper_id<TAB>stars<TAB>tag;tag;...`` rows.

    A header row starting with ``paper_id`` is skipped. Excluded tags
    (clinical trial, systematic review, review/commentary) are dropped and
    counted; any other unknown tag is an error.
    """
    report = ReviewReport()
    rows = []
    reader = csv.reader(stream, delimiter="\t", quoting=csv.QUOTE_NONE)
    for rec in reader:
        line = reader.line_num
        if not rec or (len(rec) == 1 and not rec[0].strip()):
            continue
        if line == 1 and rec[0].strip() == "paper_id":
            continue
        if len(rec) not in (2, 3):
            raise ParseError(f"expected 3 tab-separated columns, got {len(rec)}", line=line, source=source)
        pid = rec[0].strip()
        if not pid:
            raise ParseError("empty paper_id", line=line, source=source)
        try:
            stars = int(rec[1].strip())
        except ValueError:
            raise ParseError(f"stars must be 1, 2 or 3, got {rec[1]!r}", line=line, source=source) from None
        if stars not in (1, 2, 3):
            raise ParseError(f"stars must be 1, 2 or 3, got {stars}", line=line, source=source)
        tags = set()
        raw = rec[2] if len(rec) == 3 else ""
        for tok in raw.split(";"):
            tok = tok.strip()
            if not tok:
                continue
            if tok in EXCLUDED_TAGS:
                report.dropped_excluded += 1
            elif tok in TAGS:
                tags.add(tok)
            else:
                raise ParseError(f"unknown tag {tok!r}", line=line, source=source)
        rows.append(ReviewRow(pid, stars, frozenset(tags)))
        report.rows += 1
    return rows, report


def write_reviews(stream: TextIO, rows: Iterable[ReviewRow]) -> None:
    write_table(stream, REVIEW_COLUMNS, (
        (r.paper, str(r.stars), ";".join(sorted(r.tags))) for r in rows
    ))


@dataclass
class AssessmentRecord:
    paper: str
    review_count: int
    resc_sum: int
    resc_avg: float
    tag_counts: dict = field(default_factory=dict)

    def newness_class(self, classes: Optional[Mapping[str, str]] = None) -> dict[str, str]:
        classes = classes or load_tag_classes()
        return {t: classes[t] for t in TAGS}


def aggregate_assessments(rows: Iterable[ReviewRow]) -> list[AssessmentRecord]:
    """Per-paper star sum and mean, and per-tag counts of assigning reviewers."""
    stars = {}
    counts = {}
    for r in rows:
        stars.setdefault(r.paper, []).append(r.stars)
        c = counts.setdefault(r.paper, Counter())
        c.update(r.tags)
    out = []
    for pid in sorted(stars):
        s = stars[pid]
        total = sum(s)
        out.append(AssessmentRecord(
            pid, len(s), total, total / len(s), {t: counts[pid].get(t, 0) for t in TAGS}
        ))
    return out


# --- analysis matrix --------------------------------------------------------------


def indicator_columns(ls=(1, 5)) -> list[str]:
    return [f"di_{lv}" for lv in ls] + [f"di_{lv}_nok" for lv in ls] + ["dein"]


def matrix_columns(ls=(1, 5)) -> list[str]:
    return (
        ["paper_id", "field", "year", "exposure_years", "citer_count", "n_i"]
        + [f"n_j_l{lv}" for lv in ls]
        + ["n_k"]
        + indicator_columns(ls)
        + ["bu_ratio", "citations", "percentile", "review_count", "resc_sum", "resc_avg"]
        + list(TAGS)
    )


# variables of the correlation and factor analysis, in report order
ANALYSIS_VARIABLES = (
    "di_1", "di_5", "di_1_nok", "di_5_nok", "dein",
    "citations", "percentile", "resc_sum", "resc_avg",
)

_TEXT_COLUMNS = ("paper_id", "field")


class AnalysisMatrix:
    """Column store: one row per paper, numeric columns as float arrays."""

    def __init__(self, columns: "OrderedDict[str, Sequence]"):
        n = None
        self.columns = OrderedDict()
        for name, values in columns.items():
            if name in _TEXT_COLUMNS:
                arr = list(values)
            else:
                arr = np.asarray(values, dtype=np.float64)
            if n is None:
                n = len(arr)
            elif len(arr) != n:
                raise ValidationError(f"column {name!r} has {len(arr)} rows, expected {n}")
            self.columns[name] = arr
        self.n_rows = n or 0

    @property
    def ids(self) -> list[str]:
        return self.columns["paper_id"]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise ValidationError(f"matrix has no column {name!r}") from None

    def select(self, names: Sequence[str]) -> np.ndarray:
        return np.column_stack([self.column(n) for n in names]) if names else np.zeros((self.n_rows, 0))

    def __len__(self):
        return self.n_rows

    def write(self, stream: TextIO) -> None:
        names = list(self.columns)

        def cell(name, i):
            v = self.columns[name][i]
            if name in _TEXT_COLUMNS:
                return v or ""
            if math.isnan(v):
                return "NA"
            if float(v).is_integer() and abs(v) < 2**53:
                return str(int(v))
            return fmt_sig(v, 12)

        write_table(stream, names, ([cell(n, i) for n in names] for i in range(self.n_rows)))

    @classmethod
    def read(cls, stream: TextIO, source: str = "matrix") -> "AnalysisMatrix":
        recs = [rec for _, rec in read_table(stream, ("paper_id",), source)]
        if not recs:
            stream.seek(0)
            header = stream.readline().rstrip("\n").split("\t")
            return cls(OrderedDict((h, []) for h in header))
        cols = OrderedDict((name, []) for name in recs[0])
        for rec in recs:
            for name in cols:
                v = rec[name]
                cols[name].append(v if name in _TEXT_COLUMNS else parse_float(v))
        return cls(cols)


@dataclass
class JoinReport:
    score_rows: int = 0
    missing_metadata: int = 0
    missing_percentile: int = 0
    missing_assessment: int = 0
    na_indicator: int = 0
    bad_exposure: int = 0
    assessments_without_scores: int = 0
    rows: int = 0

    def as_dict(self):
        return dict(self.__dict__)


def _index_unique(items, key, what):
    out = {}
    for it in items:
        k = key(it)
        if k in out:
            raise ValidationError(f"duplicate paper id {k!r} in {what}")
        out[k] = it
    return out


def build_matrix(
    scores: Sequence[DisruptionScores],
    percentiles: Sequence[PercentileScore],
    metadata: Sequence[PaperMetadata],
    assessments: Sequence[AssessmentRecord],
    reference_year: int = 2018,
    ls=(1, 5),
) -> tuple[AnalysisMatrix, JoinReport]:
    """Inner join of indicator scores with metadata, percentiles and assessments.

    Rows drop out for the first applicable reason in this order: no metadata,
    no percentile, no assessment, NA in an analysis variable, exposure < 1
    year. The report counts each reason, so ``score_rows - rows`` equals
    their sum.
    """
    by_score = _index_unique(scores, lambda r: r.focal, "scores")
    by_meta = _index_unique(metadata, lambda r: r.paper, "metadata")
    by_pct = _index_unique(percentiles, lambda r: r.paper, "percentiles")
    by_assess = _index_unique(assessments, lambda r: r.paper, "assessments")

    report = JoinReport(score_rows=len(by_score))
    report.assessments_without_scores = len(set(by_assess) - set(by_score))
    cols = OrderedDict((name, []) for name in matrix_columns(ls))
    for pid in sorted(by_score):
        s = by_score[pid]
        m = by_meta.get(pid)
        if m is None or m.year is None:
            report.missing_metadata += 1
            continue
        p = by_pct.get(pid)
        if p is None:
            report.missing_percentile += 1
            continue
        a = by_assess.get(pid)
        if a is None:
            report.missing_assessment += 1
            continue
        values = [s.di[(lv, True)] for lv in ls] + [s.di[(lv, False)] for lv in ls] + [s.dein]
        if any(math.isnan(v) for v in values) or math.isnan(p.percentile):
            report.na_indicator += 1
            continue
        exposure = reference_year - m.year
        if exposure < 1:
            report.bad_exposure += 1
            continue
        row = (
            [pid, m.field, m.year, exposure, s.citer_count, s.n_i]
            + [s.n_j_by_l[lv] for lv in ls]
            + [s.n_k]
            + values
            + [s.bu_ratio, m.citations, p.percentile, a.review_count, a.resc_sum, a.resc_avg]
            + [a.tag_counts.get(t, 0) for t in TAGS]
        )
        for name, v in zip(cols, row):
            cols[name].append(v)
    matrix = AnalysisMatrix(cols)
    report.rows = matrix.n_rows
    return matrix, report
