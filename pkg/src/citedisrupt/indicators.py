"""Disruption-index family for focal papers of a citation graph.

Terminology for a focal paper FP with reference set R(FP):

* citer      - a paper citing FP (inside the citation window, if one is set)
* coupling   - number of references a citer shares with FP
* n_j(l)     - citers with coupling >= l
* n_i        - citers with coupling == 0 (``ZERO_COUPLING``) or < l (``COMPLEMENT``)
* n_k        - papers that cite something in R(FP) but not FP itself

``DI_l = (n_i - n_j) / (n_i + n_j + n_k)``; the "no-k" variant drops n_k.
DeIn is the mean coupling over citers. Every ratio with a zero denominator
is NA, represented as ``math.nan``.
"""
from __future__ import annotations

import enum
import logging
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np

from . import kernels
from .errors import ValidationError
from .graph import CitationGraph
from .kernels import COL_CITERS, COL_COUPLING_SUM, COL_NK, COL_UNKNOWN, COL_ZERO, N_FIXED_COLS
from .tsvio import fmt_sig, parse_float, read_table, write_table

log = logging.getLogger(__name__)

NA = math.nan


class NiStrategy(str, enum.Enum):
    ZERO_COUPLING = "zero-coupling"
    COMPLEMENT = "complement"


@dataclass(frozen=True)
class IndicatorConfig:
    l: int = 1  # noqa: E741
    include_k: bool = True
    ni_strategy: NiStrategy = NiStrategy.ZERO_COUPLING
    window_end: Optional[int] = None

    def __post_init__(self):
        if int(self.l) != self.l or self.l < 1:
            raise ValidationError(f"coupling threshold l must be an integer >= 1, got {self.l!r}")
        object.__setattr__(self, "ni_strategy", NiStrategy(self.ni_strategy))


def default_configs(ls=(1, 5), ni_strategy=NiStrategy.ZERO_COUPLING, window_end=None):
    """The indicator lattice used in the analyses: every l with and without n_k."""
    return [
        IndicatorConfig(lv, include_k, ni_strategy, window_end)
        for lv in ls
        for include_k in (True, False)
    ]


@dataclass
class CiterPartition:
    n_i: int
    n_j: int
    citer_total: int
    coupling_histogram: dict = field(default_factory=dict)


@dataclass
class DisruptionScores:
    """All indicator values of one focal paper.

    ``n_i`` is the zero-coupling citer count (N_i at l = 1 under either
    strategy); per-l values under ``COMPLEMENT`` are ``citer_count - n_j``.
    """

    focal: str
    citer_count: int
    n_i: int
    n_j_by_l: dict
    n_k: int
    di: dict
    dein: float
    bu_ratio: float
    ni_strategy: NiStrategy = NiStrategy.ZERO_COUPLING
    unknown_year_citers: int = 0

    def get(self, threshold: int, include_k: bool = True) -> float:
        return self.di[(threshold, include_k)]


def _ratio(num, den):
    return num / den if den else NA


def _backend(backend):
    return kernels.get_backend(backend)


def _window_args(window_end):
    if window_end is None:
        return 0, False
    return int(window_end), True


# --- single-paper operations -------------------------------------------------


def citer_couplings(graph: CitationGraph, focal: str, window_end=None, backend=None):
    """(citer indices, coupling per citer, unknown-year citers dropped)."""
    f = graph.index_of(focal)
    we, use = _window_args(window_end)
    return _backend(backend).citer_couplings(
        graph.out_indptr, graph.out_indices, graph.in_indptr, graph.in_indices,
        graph.years, f, we, use,
    )


def classify_citers(graph: CitationGraph, focal: str, config: IndicatorConfig,
                    backend=None) -> CiterPartition:
    _, couplings, _ = citer_couplings(graph, focal, config.window_end, backend)
    hist = Counter(int(c) for c in couplings)
    n_j = sum(v for c, v in hist.items() if c >= config.l)
    if config.ni_strategy is NiStrategy.ZERO_COUPLING:
        n_i = hist.get(0, 0)
    else:
        n_i = sum(v for c, v in hist.items() if c < config.l)
    return CiterPartition(n_i, n_j, int(couplings.size), dict(sorted(hist.items())))


def count_nk(graph: CitationGraph, focal: str, config: IndicatorConfig, backend=None) -> int:
    f = graph.index_of(focal)
    we, use = _window_args(config.window_end)
    return int(_backend(backend).count_nk(
        graph.out_indptr, graph.out_indices, graph.in_indptr, graph.in_indices,
        graph.years, f, we, use,
    ))


def disruption_score(partition: CiterPartition, n_k: int, include_k: bool) -> float:
    den = partition.n_i + partition.n_j + (n_k if include_k else 0)
    return _ratio(partition.n_i - partition.n_j, den)


def dependence_score(graph: CitationGraph, focal: str, config: IndicatorConfig, backend=None) -> float:
    _, couplings, _ = citer_couplings(graph, focal, config.window_end, backend)
    return _ratio(int(couplings.sum()), int(couplings.size))


def bu_ratio(partition: CiterPartition) -> float:
    """N_i / (N_i + N_j) for a partition computed at l = 1."""
    return _ratio(partition.n_i, partition.n_i + partition.n_j)


# --- combined / batch ---------------------------------------------------------


def _check_configs(configs: Sequence[IndicatorConfig]):
    configs = list(configs)
    if not configs:
        raise ValidationError("at least one indicator config is required")
    strategies = {c.ni_strategy for c in configs}
    windows = {c.window_end for c in configs}
    if len(strategies) > 1 or len(windows) > 1:
        raise ValidationError("configs of one computation must share ni_strategy and window_end")
    thresholds = sorted({1} | {c.l for c in configs})
    return configs, configs[0].ni_strategy, configs[0].window_end, np.asarray(thresholds, dtype=np.int64)


def _scores_from_counts(pid, row, configs, strategy, thresholds) -> DisruptionScores:
    n_citers = int(row[COL_CITERS])
    n_zero = int(row[COL_ZERO])
    n_k = int(row[COL_NK])
    n_j_by_l = {int(lv): int(row[N_FIXED_COLS + t]) for t, lv in enumerate(thresholds)}
    di = {}
    for c in configs:
        n_j = n_j_by_l[c.l]
        n_i = n_zero if strategy is NiStrategy.ZERO_COUPLING else n_citers - n_j
        den = n_i + n_j + (n_k if c.include_k else 0)
        di[(c.l, c.include_k)] = _ratio(n_i - n_j, den)
    return DisruptionScores(
        focal=pid,
        citer_count=n_citers,
        n_i=n_zero,
        n_j_by_l=n_j_by_l,
        n_k=n_k,
        di=di,
        dein=_ratio(int(row[COL_COUPLING_SUM]), n_citers),
        bu_ratio=_ratio(n_zero, n_zero + n_j_by_l[1]),
        ni_strategy=strategy,
        unknown_year_citers=int(row[COL_UNKNOWN]),
    )


def _run_counts(graph, focal_idx, thresholds, window_end, backend):
    we, use = _window_args(window_end)
    return backend.batch_counts(
        graph.out_indptr, graph.out_indices, graph.in_indptr, graph.in_indices,
        graph.years, focal_idx, thresholds, we, use,
    )


def compute_all(graph: CitationGraph, focal: str, configs: Optional[Sequence[IndicatorConfig]] = None,
                backend=None) -> DisruptionScores:
    """Every requested DI variant plus DeIn and the Bu ratio from one pass over citers."""
    configs, strategy, window_end, thresholds = _check_configs(configs or default_configs())
    f = np.asarray([graph.index_of(focal)], dtype=np.int64)
    counts = _run_counts(graph, f, thresholds, window_end, _backend(backend))
    return _scores_from_counts(focal, counts[0], configs, strategy, thresholds)


def batch_compute(graph: CitationGraph, focal_set: Iterable[str],
                  configs: Optional[Sequence[IndicatorConfig]] = None,
                  worker_count: int = 1, backend=None, chunk_size: Optional[int] = None):
    """Scores for many focal papers, sorted by paper id.

    Work is split into contiguous chunks executed on a thread pool; the
    kernels release the GIL under numba. Rows are reassembled in chunk order
    so the result does not depend on ``worker_count``.
    """
    configs, strategy, window_end, thresholds = _check_configs(configs or default_configs())
    ids = sorted(set(focal_set))
    if not ids:
        return []
    focal_idx = np.asarray([graph.index_of(pid) for pid in ids], dtype=np.int64)
    be = _backend(backend)
    worker_count = max(1, int(worker_count))
    if chunk_size is None:
        chunk_size = max(1, -(-focal_idx.size // (worker_count * 4)))
    chunks = [focal_idx[i:i + chunk_size] for i in range(0, focal_idx.size, chunk_size)]

    def work(chunk):
        return _run_counts(graph, chunk, thresholds, window_end, be)

    if worker_count == 1 or len(chunks) == 1:
        parts = [work(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=worker_count) as pool:
            parts = list(pool.map(work, chunks))
    counts = np.concatenate(parts, axis=0)
    rows = [_scores_from_counts(pid, counts[k], configs, strategy, thresholds) for k, pid in enumerate(ids)]
    unknown = int(counts[:, COL_UNKNOWN].sum())
    if unknown:
        log.warning("%d citation(s) from citers of unknown year excluded by the citation window", unknown)
    return rows


# --- scores.tsv ----------------------------------------------------------------


def score_columns(ls=(1, 5)) -> list[str]:
    cols = ["paper_id", "citer_count", "n_i"]
    cols += [f"n_j_l{lv}" for lv in ls]
    cols += ["n_k"]
    cols += [f"di_{lv}" for lv in ls]
    cols += [f"di_{lv}_nok" for lv in ls]
    cols += ["dein", "bu_ratio"]
    return cols


def write_scores(stream: TextIO, rows: Sequence[DisruptionScores], ls=(1, 5)) -> None:
    ls = tuple(ls)

    def fmt(r):
        out = [r.focal, str(r.citer_count), str(r.n_i)]
        out += [str(r.n_j_by_l[lv]) for lv in ls]
        out += [str(r.n_k)]
        out += [fmt_sig(r.di[(lv, True)]) for lv in ls]
        out += [fmt_sig(r.di[(lv, False)]) for lv in ls]
        out += [fmt_sig(r.dein), fmt_sig(r.bu_ratio)]
        return out

    write_table(stream, score_columns(ls), (fmt(r) for r in rows))


def read_scores(stream: TextIO, ls=(1, 5), source="scores") -> list[DisruptionScores]:
    ls = tuple(ls)
    rows = []
    for _, rec in read_table(stream, score_columns(ls), source):
        di = {}
        for lv in ls:
            di[(lv, True)] = parse_float(rec[f"di_{lv}"])
            di[(lv, False)] = parse_float(rec[f"di_{lv}_nok"])
        rows.append(DisruptionScores(
            focal=rec["paper_id"],
            citer_count=int(rec["citer_count"]),
            n_i=int(rec["n_i"]),
            n_j_by_l={lv: int(rec[f"n_j_l{lv}"]) for lv in ls},
            n_k=int(rec["n_k"]),
            di=di,
            dein=parse_float(rec["dein"]),
            bu_ratio=parse_float(rec["bu_ratio"]),
        ))
    return rows
