"""Eligibility filters, field/year citation percentiles, and the log(x+1) transform."""
from __future__ import annotations

import logging
import warnings
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np

from .errors import DomainError
from .graph import CitationGraph
from .kernels import YEAR_MISSING
from .tsvio import fmt_sig, parse_float, read_table, write_table

log = logging.getLogger(__name__)

BOUNDARY_SHIFT = 1e-9


@dataclass(frozen=True)
class PaperMetadata:
    paper: str
    year: Optional[int]
    field: Optional[str]
    citations: int
    reference_count: int


@dataclass(frozen=True)
class PercentileScore:
    paper: str
    field: str
    year: int
    citations: int
    percentile: float


def metadata_from_graph(graph: CitationGraph, window_end: Optional[int] = None) -> list[PaperMetadata]:
    """Per-paper citation counts (inside the window) and reference counts."""
    n = graph.node_count
    refs = graph.out_degrees()
    if window_end is None:
        cites = graph.in_degrees()
    else:
        citing = np.repeat(np.arange(n), refs)
        y = graph.years[citing]
        ok = (y != YEAR_MISSING) & (y <= window_end)
        cites = np.bincount(graph.out_indices[ok], minlength=n)
    out = []
    for i, pid in enumerate(graph.ids):
        y = int(graph.years[i])
        out.append(PaperMetadata(
            pid, None if y == YEAR_MISSING else y, graph.fields[i], int(cites[i]), int(refs[i])
        ))
    return out


def eligible_papers(metadata: Iterable[PaperMetadata], min_refs: int = 10, min_cites: int = 10,
                    year_min: int = 2000, year_max: int = 2016) -> set[str]:
    """Papers with at least ``min_refs`` references, ``min_cites`` citations,
    and a publication year in ``[year_min, year_max]``."""
    return {
        m.paper
        for m in metadata
        if m.reference_count >= min_refs
        and m.citations >= min_cites
        and m.year is not None
        and year_min <= m.year <= year_max
    }


def average_ranks(values) -> np.ndarray:
    """1-based ascending ranks; tied values share the mean of their positions."""
    a = np.asarray(values, dtype=np.float64).ravel()
    n = a.size
    if n == 0:
        return np.zeros(0)
    order = np.argsort(a, kind="mergesort")
    s = a[order]
    # boundaries of runs of equal values in sorted order
    starts = np.flatnonzero(np.r_[True, s[1:] != s[:-1]])
    ends = np.r_[starts[1:], n]
    mean_rank = (starts + ends + 1) / 2.0
    ranks = np.empty(n)
    ranks[order] = np.repeat(mean_rank, ends - starts)
    return ranks


def hazen(ranks, n) -> np.ndarray:
    return (np.asarray(ranks, dtype=np.float64) - 0.5) / n * 100.0


def percentiles(metadata: Iterable[PaperMetadata], skipped: Optional[list] = None) -> list[PercentileScore]:
    """Hazen percentiles of citation counts within each (field, year) group.

    Ranks ascend with citations, so the most cited paper of a group is
    nearest 100. Papers without field or year are skipped (and appended to
    ``skipped`` when given).
    """
    groups = defaultdict(list)
    n_skipped = 0
    for m in metadata:
        if m.field is None or m.year is None:
            n_skipped += 1
            if skipped is not None:
                skipped.append(m.paper)
            continue
        groups[(m.field, m.year)].append(m)
    if n_skipped:
        log.warning("%d paper(s) without field or year skipped in percentile computation", n_skipped)

    out = []
    for key in sorted(groups):
        members = groups[key]
        cites = np.array([m.citations for m in members], dtype=np.float64)
        pct = hazen(average_ranks(cites), len(members))
        out.extend(
            PercentileScore(m.paper, m.field, m.year, m.citations, float(p))
            for m, p in zip(members, pct)
        )
    out.sort(key=lambda r: r.paper)
    return out


def log1p_transform(values, shift_boundary: bool = False, names: Optional[Sequence] = None) -> np.ndarray:
    """Element-wise natural log(x + 1). NaN passes through.

    Values below -1 always raise :class:`DomainError`. Values exactly -1 raise
    unless ``shift_boundary`` is set, in which case they are moved up by
    1e-9 with a warning.
    """
    x = np.array(values, dtype=np.float64, copy=True).ravel()
    finite = ~np.isnan(x)
    bad = finite & (x < -1.0)
    at_edge = finite & (x == -1.0)
    if not shift_boundary:
        bad |= at_edge
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        label = names[i] if names is not None else i
        raise DomainError(f"log(x+1) undefined for value {x[i]!r} at row {label}")
    if at_edge.any():
        warnings.warn(
            f"{int(at_edge.sum())} value(s) equal to -1 shifted by {BOUNDARY_SHIFT} before log(x+1)",
            RuntimeWarning, stacklevel=2,
        )
        x[at_edge] += BOUNDARY_SHIFT
    return np.log1p(x)


PERCENTILE_COLUMNS = ("paper_id", "field", "year", "citations", "percentile")


def write_percentiles(stream: TextIO, rows: Sequence[PercentileScore]) -> None:
    write_table(stream, PERCENTILE_COLUMNS, (
        (r.paper, r.field, str(r.year), str(r.citations), fmt_sig(r.percentile)) for r in rows
    ))


def read_percentiles(stream: TextIO, source="percentiles") -> list[PercentileScore]:
    out = []
    for _, rec in read_table(stream, PERCENTILE_COLUMNS, source):
        out.append(PercentileScore(
            rec["paper_id"], rec["field"], int(rec["year"]), int(rec["citations"]),
            parse_float(rec["percentile"]),
        ))
    return out
