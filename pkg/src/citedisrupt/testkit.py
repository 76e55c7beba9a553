"""Synthetic citation networks and assessments with known structure, plus a
brute-force indicator oracle.

The oracle works on plain id pairs with set lookups and nested loops. It
shares no code with :mod:`citedisrupt.indicators` or the kernels, so the two
can be compared as independent routes to the same numbers.
"""
from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import ValidationError
from .graph import CitationGraph
from .ingest import ANALYSIS_VARIABLES, TAGS, AnalysisMatrix, ReviewRow, matrix_columns, write_reviews
from .kernels import YEAR_MISSING
from .normalize import PaperMetadata, metadata_from_graph

REGIMES = ("disruptive-heavy", "developmental-heavy", "mixed")

# Beta(a, b) parameters of each paper's probability that a citer avoids its references
_REGIME_BETA = {
    "disruptive-heavy": (9.0, 1.0),
    "developmental-heavy": (1.0, 9.0),
    "mixed": (1.0, 1.0),
}

NEWNESS_TAGS = ("hypothesis", "new-finding", "novel-drug-target", "technical-advance")
NON_NEWNESS_TAGS = ("confirmation", "good-for-teaching", "negative-null", "refutation")

DEFAULT_TAG_BASE = {
    "confirmation": -3.2,
    "controversial": -3.6,
    "good-for-teaching": -3.4,
    "hypothesis": -3.4,
    "negative-null": -4.0,
    "new-finding": -2.3,
    "novel-drug-target": -3.8,
    "refutation": -4.0,
    "technical-advance": -3.0,
}


def newness_slopes(slope: float = 0.4) -> dict:
    """Positive slope for newness tags, negative for the others, 0 for controversial."""
    out = {t: 0.0 for t in TAGS}
    out.update({t: slope for t in NEWNESS_TAGS})
    out.update({t: -slope for t in NON_NEWNESS_TAGS})
    return out


@dataclass
class SyntheticSpec:
    seed: int = 0
    paper_count: int = 2000
    year_min: int = 1995
    year_max: int = 2018
    mean_refs: float = 20.0
    regime: str = "mixed"
    field_count: int = 4
    max_copied_refs: int = 8
    attachment_share: float = 0.4
    tag_indicator: str = "di_5"
    tag_slopes: dict = field(default_factory=newness_slopes)
    tag_base: dict = field(default_factory=lambda: dict(DEFAULT_TAG_BASE))
    reviewed_share: float = 0.95
    reference_year: int = 2018

    def validate(self):
        if self.regime not in REGIMES:
            raise ValidationError(f"unknown regime {self.regime!r}; expected one of {REGIMES}")
        if self.paper_count < 2:
            raise ValidationError("paper_count must be at least 2")
        if self.mean_refs <= 0 or self.mean_refs > self.paper_count:
            raise ValidationError(f"mean_refs {self.mean_refs} infeasible for {self.paper_count} papers")
        if self.year_min > self.year_max:
            raise ValidationError("year_min exceeds year_max")


def paper_ids(n: int, prefix: str = "P") -> list[str]:
    width = max(6, len(str(n)))
    return [f"{prefix}{i:0{width}d}" for i in range(n)]


def generate_network(spec: SyntheticSpec) -> tuple[CitationGraph, list[PaperMetadata]]:
    """Year-ordered citation DAG whose citers copy or avoid their targets' references.

    Each paper draws a propensity ``d`` from the regime's Beta distribution.
    When a new paper cites it, with probability ``d`` the citer avoids the
    cited paper's references, dropping any it already picked (disruptive
    pattern), otherwise it also cites
    up to ``max_copied_refs`` of them (developmental pattern). Targets come
    from preferential attachment with share ``attachment_share``.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = spec.paper_count
    years = np.sort(rng.integers(spec.year_min, spec.year_max + 1, size=n))
    first_of_year = {}
    for i, y in enumerate(years.tolist()):
        first_of_year.setdefault(y, i)
    fields = [f"F{int(k) + 1}" for k in rng.integers(0, spec.field_count, size=n)]
    a, b = _REGIME_BETA[spec.regime]
    avoid = rng.beta(a, b, size=n)

    refs_of: list[list[int]] = []
    pool: list[int] = []
    for p in range(n):
        m = first_of_year[int(years[p])]
        if m == 0:
            refs_of.append([])
            continue
        k = int(min(max(1, rng.poisson(spec.mean_refs)), m))
        cap = k + spec.max_copied_refs
        chosen: set[int] = set()
        forbidden: set[int] = set()
        attempts = 0
        while len(chosen) < k and attempts < 20 * k:
            attempts += 1
            if pool and rng.random() < spec.attachment_share:
                t = pool[int(rng.integers(len(pool)))]
            else:
                t = int(rng.integers(m))
            if t in chosen or t in forbidden:
                continue
            chosen.add(t)
            if rng.random() < avoid[t]:
                forbidden.update(refs_of[t])
                chosen.difference_update(refs_of[t])
            elif refs_of[t]:
                c = int(rng.integers(1, spec.max_copied_refs + 1))
                for r in rng.permutation(refs_of[t])[:c].tolist():
                    if r not in forbidden and len(chosen) < cap:
                        chosen.add(r)
        refs = sorted(chosen)
        refs_of.append(refs)
        pool.extend(refs)

    src = np.repeat(np.arange(n), [len(r) for r in refs_of])
    dst = np.fromiter((r for rs in refs_of for r in rs), dtype=np.int64, count=int(src.size))
    graph = CitationGraph.from_arrays(paper_ids(n), src, dst, years.astype(np.int32), fields)
    return graph, metadata_from_graph(graph, window_end=spec.reference_year)


def scale_graph(n_nodes: int, n_edges: int, seed: int = 0, year_min: int = 1990,
                year_max: int = 2018, skew: float = 1.0) -> CitationGraph:
    """Large year-ordered random DAG, built with vectorized numpy only.

    Cited papers are drawn from the citing paper's earlier-year prefix,
    uniformly for ``skew`` = 1 and increasingly concentrated on the oldest
    papers for larger ``skew``. About 5% extra edges are drawn so that at
    least ``n_edges`` survive de-duplication.
    """
    rng = np.random.default_rng(seed)
    years = np.sort(rng.integers(year_min, year_max + 1, size=n_nodes)).astype(np.int32)
    first = np.searchsorted(years, years, side="left")
    eligible_src = np.flatnonzero(first > 0)
    src = eligible_src[rng.integers(0, eligible_src.size, size=int(n_edges * 1.05))]
    u = rng.random(src.size)
    dst = np.minimum((first[src] * u ** skew).astype(np.int64), first[src] - 1)
    graph = CitationGraph.from_arrays(paper_ids(n_nodes), src, dst, years, ["F1"] * n_nodes)
    return graph


def random_small_graph(rng: np.random.Generator, max_nodes: int = 60, missing_year_share: float = 0.1):
    """Small random DAG (edges point from later to earlier index).

    Returns ``(edges, years)`` as plain id pairs and an id -> year dict with
    some years absent. Duplicate and self edges are never produced.
    """
    n = int(rng.integers(2, max_nodes + 1))
    density = float(rng.uniform(0.02, 0.45))
    ids = [f"n{i:02d}" for i in range(n)]
    base = sorted(rng.integers(1995, 2021, size=n).tolist())
    years = {}
    for pid, y in zip(ids, base):
        years[pid] = None if rng.random() < missing_year_share else int(y)
    edges = []
    for i in range(n):
        for j in range(i):
            if rng.random() < density:
                edges.append((ids[i], ids[j]))
    return edges, years


# --- oracle ------------------------------------------------------------------------


def oracle_indicators(graph_or_edges, focal: str, config, years: Optional[Mapping] = None) -> dict:
    """Brute-force indicator values for one focal paper and one config.

    ``graph_or_edges`` is a :class:`CitationGraph` or a list of
    ``(citing, cited)`` id pairs (then ``years`` maps id -> year or None).
    Returns a dict with the counts, ``di`` (for ``config.include_k``),
    ``di_nok``, ``dein`` and ``bu_ratio``; NaN marks an undefined ratio.
    """
    if isinstance(graph_or_edges, CitationGraph):
        g = graph_or_edges
        edges = list(g.edges())
        years = {pid: (None if int(g.years[i]) == YEAR_MISSING else int(g.years[i]))
                 for i, pid in enumerate(g.ids)}
        nodes = list(g.ids)
    else:
        edges = [(u, v) for u, v in graph_or_edges if u != v]
        years = dict(years or {})
        nodes = sorted({x for e in edges for x in e} | set(years))
    cites = set(edges)
    if focal not in nodes:
        raise KeyError(focal)

    window_end = config.window_end
    threshold = config.l
    complement = str(getattr(config.ni_strategy, "value", config.ni_strategy)) == "complement"

    def in_window(p):
        if window_end is None:
            return True
        y = years.get(p)
        return y is not None and y <= window_end

    refs = [r for r in nodes if (focal, r) in cites]
    citers = [p for p in nodes if (p, focal) in cites and in_window(p)]

    couplings = []
    for c in citers:
        shared = 0
        for r in refs:
            if (c, r) in cites:
                shared += 1
        couplings.append(shared)

    n_j = 0
    n_i = 0
    zero = 0
    n_j1 = 0
    for s in couplings:
        if s >= threshold:
            n_j += 1
        if s == 0:
            zero += 1
        if s >= 1:
            n_j1 += 1
        if (complement and s < threshold) or (not complement and s == 0):
            n_i += 1

    n_k = 0
    for p in nodes:
        if p == focal or (p, focal) in cites or not in_window(p):
            continue
        for r in refs:
            if (p, r) in cites:
                n_k += 1
                break

    def ratio(a, b):
        return a / b if b != 0 else math.nan

    return {
        "citer_count": len(citers),
        "n_i": n_i,
        "n_j": n_j,
        "n_k": n_k,
        "zero_coupling": zero,
        "di": ratio(n_i - n_j, n_i + n_j + (n_k if config.include_k else 0)),
        "di_nok": ratio(n_i - n_j, n_i + n_j),
        "dein": ratio(sum(couplings), len(couplings)),
        "bu_ratio": ratio(zero, zero + n_j1),
    }


# --- assessments ------------------------------------------------------------------


def _standardize(x):
    x = np.asarray(x, dtype=np.float64)
    sd = x.std(ddof=1) if x.size > 1 else 0.0
    return (x - x.mean()) / sd if sd > 0 else np.zeros_like(x)


def generate_assessments(metadata: Sequence[PaperMetadata], scores: Sequence, spec: SyntheticSpec,
                         seed_offset: int = 1) -> list[ReviewRow]:
    """Reviews whose tag counts are Poisson with log-rate linear in one indicator.

    For paper p with exposure e_p = reference_year - year_p and standardized
    indicator z_p, the number of reviewers assigning tag t is
    ``Poisson(e_p * exp(tag_base[t] + tag_slopes[t] * z_p))``.
    """
    rng = np.random.default_rng(spec.seed + seed_offset)
    meta = {m.paper: m for m in metadata}
    rows_in = [s for s in sorted(scores, key=lambda s: s.focal) if s.focal in meta]
    key = _indicator_key(spec.tag_indicator)
    values = np.array([_score_value(s, key) for s in rows_in], dtype=np.float64)
    ok = ~np.isnan(values)
    z = np.full(values.size, np.nan)
    z[ok] = _standardize(values[ok])

    reviews = []
    for s, zp in zip(rows_in, z):
        if math.isnan(zp) or rng.random() >= spec.reviewed_share:
            continue
        m = meta[s.focal]
        exposure = max(1, spec.reference_year - int(m.year))
        counts = {}
        for t in TAGS:
            lam = exposure * math.exp(spec.tag_base[t] + spec.tag_slopes[t] * zp)
            counts[t] = int(rng.poisson(lam))
        n_reviews = max(1 + int(rng.poisson(0.6)), max(counts.values()))
        tag_sets = [set() for _ in range(n_reviews)]
        for t in TAGS:
            for r in rng.choice(n_reviews, size=counts[t], replace=False).tolist():
                tag_sets[r].add(t)
        stars = rng.choice([1, 2, 3], size=n_reviews, p=[0.55, 0.35, 0.10])
        for st, tags in zip(stars.tolist(), tag_sets):
            reviews.append(ReviewRow(s.focal, int(st), frozenset(tags)))
    return reviews


def _indicator_key(name):
    if name == "dein":
        return ("dein",)
    parts = name.split("_")
    if len(parts) >= 2 and parts[0] == "di":
        return ("di", int(parts[1]), not name.endswith("_nok"))
    raise ValidationError(f"unknown indicator {name!r}")


def _score_value(s, key):
    if key[0] == "dein":
        return s.dein
    return s.di[(key[1], key[2])]


# --- factor-structured matrix ----------------------------------------------------------

# variable -> (block, sign) mirroring the three-dimension pattern of disruption,
# citation impact and reviewer scores
BLOCK_PATTERN = OrderedDict([
    ("di_1", (1, -1.0)),
    ("di_5", (0, 1.0)),
    ("di_1_nok", (0, 1.0)),
    ("di_5_nok", (0, 1.0)),
    ("dein", (0, -1.0)),
    ("citations", (1, 1.0)),
    ("percentile", (1, 1.0)),
    ("resc_sum", (2, 1.0)),
    ("resc_avg", (2, 1.0)),
])


def block_structured_data(n: int, seed: int = 0, loading: float = 0.9) -> dict:
    """Columns whose log(x+1) values follow three orthogonal latent factors.

    Each variable is ``expm1(loading * sign * f_block + noise)`` with unit
    total variance in log space, so after the log transform the correlation
    matrix has the block pattern of :data:`BLOCK_PATTERN`.
    """
    rng = np.random.default_rng(seed)
    latent = rng.standard_normal((n, 3))
    noise_sd = math.sqrt(1.0 - loading ** 2)
    out = OrderedDict()
    for name, (block, sign) in BLOCK_PATTERN.items():
        w = loading * sign * latent[:, block] + noise_sd * rng.standard_normal(n)
        out[name] = np.expm1(w)
    assert list(out) == list(ANALYSIS_VARIABLES)
    return out


def block_matrix(n: int, seed: int = 0, loading: float = 0.9, tag_variable: str = "di_5",
                 slope: float = 0.4, reference_year: int = 2018) -> AnalysisMatrix:
    """A complete analysis matrix built from :func:`block_structured_data`.

    Tag counts depend on the log of ``tag_variable`` through
    :func:`newness_slopes`; count and id columns are filled with plausible
    values so the matrix passes through every analysis step.
    """
    rng = np.random.default_rng(seed + 7)
    data = block_structured_data(n, seed, loading)
    years = rng.integers(2000, 2017, size=n)
    exposure = reference_year - years
    z = _standardize(np.log1p(data[tag_variable]))
    slopes = newness_slopes(slope)
    cols = OrderedDict((c, None) for c in matrix_columns())
    cols["paper_id"] = paper_ids(n, "M")
    cols["field"] = ["F1"] * n
    cols["year"] = years
    cols["exposure_years"] = exposure
    for name in ("citer_count", "n_i", "n_j_l1", "n_j_l5", "n_k", "review_count"):
        cols[name] = np.zeros(n)
    for name, values in data.items():
        cols[name] = values
    cols["bu_ratio"] = np.full(n, math.nan)
    for t in TAGS:
        lam = exposure * np.exp(DEFAULT_TAG_BASE[t] + slopes[t] * z)
        cols[t] = rng.poisson(lam)
    return AnalysisMatrix(cols)


# --- bundled dataset --------------------------------------------------------------------


def write_dataset(directory, graph: CitationGraph, reviews: Iterable[ReviewRow]) -> dict:
    """Write ``nodes.tsv``, ``edges.tsv`` and ``reviews.tsv``; returns the paths."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = {"nodes": d / "nodes.tsv", "edges": d / "edges.tsv", "reviews": d / "reviews.tsv"}
    with open(paths["nodes"], "w", encoding="utf-8", newline="\n") as fh:
        graph.write_nodes(fh)
    with open(paths["edges"], "w", encoding="utf-8", newline="\n") as fh:
        graph.write_edges(fh)
    with open(paths["reviews"], "w", encoding="utf-8", newline="\n") as fh:
        write_reviews(fh, sorted(reviews, key=lambda r: (r.paper, r.stars, sorted(r.tags))))
    return paths


BUNDLED_SPEC = SyntheticSpec(seed=20180601, paper_count=3000, regime="mixed")


def build_dataset(directory, spec: SyntheticSpec = BUNDLED_SPEC) -> dict:
    """Generate a network plus reviews driven by ``spec.tag_indicator`` and write them.

    Tag rates depend on indicator values computed with the default
    eligibility filters and citation window, as the pipeline would.
    """
    from .indicators import batch_compute, default_configs
    from .normalize import eligible_papers

    graph, metadata = generate_network(spec)
    focal = eligible_papers(metadata)
    scores = batch_compute(graph, focal, default_configs(window_end=spec.reference_year))
    reviews = generate_assessments(metadata, scores, spec)
    return write_dataset(directory, graph, reviews)


def scale_run(n_nodes: int = 40_000, n_edges: int = 1_000_000, n_focal: int = 10_000,
              worker_counts=(1, 8), seed: int = 0, skew: float = 1.5, backend=None) -> dict:
    """Time batch computation on a :func:`scale_graph` and digest its output.

    Focal papers are the first ``n_focal`` eligible ids under the default
    filters. Returns timings per worker count, the SHA-256 of each
    ``scores.tsv`` rendering, and the process's peak resident memory.
    """
    import hashlib
    import io
    import resource
    import time

    from .indicators import batch_compute, default_configs, write_scores
    from .normalize import eligible_papers

    t0 = time.perf_counter()
    graph = scale_graph(n_nodes, n_edges, seed=seed, skew=skew)
    focal = sorted(eligible_papers(metadata_from_graph(graph, window_end=2018)))[:n_focal]
    out = {"edges": graph.edge_count, "nodes": graph.node_count, "focal": len(focal),
           "build_seconds": time.perf_counter() - t0, "runs": {}}
    configs = default_configs(window_end=2018)
    for workers in worker_counts:
        t1 = time.perf_counter()
        rows = batch_compute(graph, focal, configs, worker_count=workers, backend=backend)
        buf = io.StringIO()
        write_scores(buf, rows)
        out["runs"][str(workers)] = {
            "seconds": time.perf_counter() - t1,
            "sha256": hashlib.sha256(buf.getvalue().encode()).hexdigest(),
        }
    out["total_seconds"] = time.perf_counter() - t0
    out["peak_rss_mb"] = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0
    return out
