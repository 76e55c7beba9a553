"""Staged batch pipeline: compute, percentile, join, analyze.

Every stage reads its inputs from files, writes TSV outputs atomically
(temporary names renamed on success, removed on failure) and records a
section in ``manifest.json`` holding the settings, their hash, input and
output digests, row counts and collected warnings. Nothing time-dependent
goes into the manifest, so identical inputs give identical manifests.
"""
from __future__ import annotations

import contextlib
import hashlib
import json
import logging
import os
import warnings
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from . import __version__
from .errors import CiteDisruptError, StageError, ValidationError
from .graph import load_graph_files
from .indicators import NiStrategy, batch_compute, default_configs, read_scores, write_scores
from .ingest import (
    TAGS,
    AnalysisMatrix,
    aggregate_assessments,
    build_matrix,
    load_reviews,
    load_tag_classes,
)
from .normalize import eligible_papers, metadata_from_graph, percentiles, read_percentiles, write_percentiles
from .stats import correlation_matrix, factor_scores, fit_from_data, regression_grid, select_best, tally
from .stats.grid import write_regress

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"
SCORES = "scores.tsv"
PERCENTILES = "percentiles.tsv"
MATRIX = "matrix.tsv"
CORR = "corr.tsv"
FA = "fa.tsv"
REGRESS = "regress.tsv"

# settings that change results; paths and worker counts are excluded from the hash
HASHED_SETTINGS = (
    "min_refs", "min_cites", "year_min", "year_max", "window_end",
    "ls", "ni_strategy", "reference_year",
)


@dataclass
class PipelineConfig:
    nodes: Optional[Path] = None
    edges: Optional[Path] = None
    reviews: Optional[Path] = None
    out_dir: Path = Path("out")
    min_refs: int = 10
    min_cites: int = 10
    year_min: int = 2000
    year_max: int = 2016
    window_end: Optional[int] = 2018
    ls: tuple = (1, 5)
    ni_strategy: str = NiStrategy.ZERO_COUPLING.value
    reference_year: int = 2018
    workers: int = 1
    backend: Optional[str] = None

    def __post_init__(self):
        for name in ("nodes", "edges", "reviews"):
            v = getattr(self, name)
            if v is not None:
                setattr(self, name, Path(v))
        self.out_dir = Path(self.out_dir)
        self.ls = tuple(sorted({int(v) for v in self.ls}))
        if not self.ls or self.ls[0] < 1:
            raise ValidationError("coupling thresholds must be integers >= 1")
        try:
            self.ni_strategy = NiStrategy(self.ni_strategy).value
        except ValueError:
            raise ValidationError(f"unknown ni_strategy {self.ni_strategy!r}") from None
        if self.year_min > self.year_max:
            raise ValidationError(f"year range {self.year_min}-{self.year_max} is empty")
        if self.min_refs < 0 or self.min_cites < 0:
            raise ValidationError("min_refs and min_cites must be non-negative")
        if self.workers < 1:
            raise ValidationError("workers must be at least 1")

    def settings(self) -> dict:
        out = {k: getattr(self, k) for k in HASHED_SETTINGS}
        out["ls"] = list(self.ls)
        return out

    def config_hash(self) -> str:
        return hashlib.sha256(_canonical(self.settings()).encode()).hexdigest()

    def require(self, *names):
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise ValidationError(f"missing required input(s): {', '.join(missing)}")


# key=value file keys -> (field, parser)
def _opt_int(v):
    return None if v.strip().lower() in ("", "none", "na") else int(v)


def _ls(v):
    return tuple(int(x) for x in v.replace(" ", "").split(",") if x)


CONFIG_KEYS = {
    "nodes": ("nodes", Path),
    "edges": ("edges", Path),
    "reviews": ("reviews", Path),
    "out": ("out_dir", Path),
    "out_dir": ("out_dir", Path),
    "min_refs": ("min_refs", int),
    "min_cites": ("min_cites", int),
    "year_min": ("year_min", int),
    "year_max": ("year_max", int),
    "window_end": ("window_end", _opt_int),
    "l": ("ls", _ls),
    "ls": ("ls", _ls),
    "ni_strategy": ("ni_strategy", str),
    "reference_year": ("reference_year", int),
    "workers": ("workers", int),
    "backend": ("backend", str),
}


def read_config_file(path) -> dict:
    """Parse a ``key = value`` file (``#`` comments) into PipelineConfig fields.

    Relative paths resolve against the file's directory.
    """
    path = Path(path)
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in CONFIG_KEYS:
                raise ValidationError(f"{path}:{lineno}: unknown config key {key!r}")
            name, parse = CONFIG_KEYS[key]
            try:
                v = parse(value)
            except ValueError as err:
                raise ValidationError(f"{path}:{lineno}: bad value for {key}: {err}") from None
            if isinstance(v, Path) and not v.is_absolute():
                v = path.parent / v
            out[name] = v
    return out


def config_with(base: Optional[dict] = None, **overrides) -> PipelineConfig:
    """Config from file values, then overrides (None means "not given")."""
    values = dict(base or {})
    values.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(values) - known
    if unknown:
        raise ValidationError(f"unknown config field(s): {sorted(unknown)}")
    return PipelineConfig(**values)


# --- manifest & outputs -------------------------------------------------------------


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def file_digest(path) -> dict:
    h = hashlib.sha256()
    size = 0
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
            size += len(block)
    return {"sha256": h.hexdigest(), "bytes": size}


def read_manifest(out_dir) -> dict:
    p = Path(out_dir) / MANIFEST
    if not p.exists():
        return {"tool": "citedisrupt", "version": __version__, "stages": {}}
    with open(p, encoding="utf-8") as fh:
        return json.load(fh)


def _write_manifest(out_dir, stage: str, section: dict) -> None:
    manifest = read_manifest(out_dir)
    manifest["version"] = __version__
    manifest.setdefault("stages", {})[stage] = section
    p = Path(out_dir) / MANIFEST
    tmp = p.with_name(p.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    os.replace(tmp, p)


class _WarningLog(logging.Handler):
    def __init__(self):
        super().__init__(logging.WARNING)
        self.messages = []

    def emit(self, record):
        self.messages.append(record.getMessage())


@dataclass
class StageRun:
    """Bookkeeping for one stage: temporary outputs, digests and warnings."""

    name: str
    config: PipelineConfig
    inputs: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    pending: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def input(self, label, path) -> Path:
        path = Path(path)
        self.inputs[label] = file_digest(path)
        return path

    def output(self, name) -> Path:
        final = self.config.out_dir / name
        tmp = final.with_name(f".{name}.partial")
        self.pending[name] = (tmp, final)
        return tmp

    def _commit(self) -> dict:
        outs = {}
        for name, (tmp, final) in self.pending.items():
            os.replace(tmp, final)
            outs[name] = file_digest(final)
        return outs

    def _discard(self):
        for tmp, _ in self.pending.values():
            with contextlib.suppress(FileNotFoundError):
                tmp.unlink()


@contextlib.contextmanager
def stage(name: str, config: PipelineConfig):
    """Run a stage; on failure remove its partial outputs and raise StageError."""
    run = StageRun(name, config)
    handler = _WarningLog()
    root = logging.getLogger("citedisrupt")
    root.addHandler(handler)
    try:
        config.out_dir.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            yield run
        # the same transform warning repeats once per consumer of a column
        run.warnings = list(dict.fromkeys(handler.messages + [str(w.message) for w in caught]))
        outputs = run._commit()
    except (CiteDisruptError, OSError) as err:
        run._discard()
        if isinstance(err, StageError):
            raise
        raise StageError(name, err) from err
    except BaseException:
        run._discard()
        raise
    finally:
        root.removeHandler(handler)
    _write_manifest(config.out_dir, name, {
        "settings": config.settings(),
        "config_hash": config.config_hash(),
        "inputs": run.inputs,
        "outputs": outputs,
        "counts": run.counts,
        "warnings": run.warnings,
    })


# --- stages ------------------------------------------------------------------------


def _graph(run: StageRun):
    cfg = run.config
    cfg.require("nodes", "edges")
    graph, report = load_graph_files(run.input("nodes", cfg.nodes), run.input("edges", cfg.edges))
    for w in report.warnings:
        log.warning("%s", w)
    run.counts["ingest"] = report.as_dict()
    return graph


def run_compute(config: PipelineConfig):
    """Indicator scores for eligible papers -> ``scores.tsv``."""
    with stage("compute", config) as run:
        graph = _graph(run)
        metadata = metadata_from_graph(graph, window_end=config.window_end)
        focal = eligible_papers(metadata, config.min_refs, config.min_cites, config.year_min, config.year_max)
        configs = default_configs(config.ls, NiStrategy(config.ni_strategy), config.window_end)
        scores = batch_compute(graph, focal, configs, worker_count=config.workers, backend=config.backend)
        with open(run.output(SCORES), "w", encoding="utf-8", newline="\n") as fh:
            write_scores(fh, scores, config.ls)
        run.counts.update(papers=graph.node_count, edges=graph.edge_count, eligible=len(focal),
                          score_rows=len(scores))
    return scores


def run_percentile(config: PipelineConfig):
    """Field- and year-normalized citation percentiles -> ``percentiles.tsv``."""
    with stage("percentile", config) as run:
        graph = _graph(run)
        metadata = metadata_from_graph(graph, window_end=config.window_end)
        skipped = []
        rows = percentiles(metadata, skipped)
        with open(run.output(PERCENTILES), "w", encoding="utf-8", newline="\n") as fh:
            write_percentiles(fh, rows)
        run.counts.update(percentile_rows=len(rows), skipped=len(skipped))
    return rows


def run_join(config: PipelineConfig):
    """Join scores, percentiles, metadata and reviews -> ``matrix.tsv``."""
    with stage("join", config) as run:
        config.require("reviews")
        graph = _graph(run)
        metadata = metadata_from_graph(graph, window_end=config.window_end)
        with open(run.input("scores", config.out_dir / SCORES), encoding="utf-8") as fh:
            scores = read_scores(fh, config.ls)
        with open(run.input("percentiles", config.out_dir / PERCENTILES), encoding="utf-8") as fh:
            pct = read_percentiles(fh)
        with open(run.input("reviews", config.reviews), encoding="utf-8") as fh:
            reviews, review_report = load_reviews(fh)
        assessments = aggregate_assessments(reviews)
        matrix, report = build_matrix(scores, pct, metadata, assessments, config.reference_year, config.ls)
        with open(run.output(MATRIX), "w", encoding="utf-8", newline="\n") as fh:
            matrix.write(fh)
        run.counts.update(report.as_dict())
        run.counts.update(review_rows=len(reviews), dropped_excluded_tags=review_report.dropped_excluded)
    return matrix


def analysis_variables(ls=(1, 5)) -> list:
    return ([f"di_{lv}" for lv in ls] + [f"di_{lv}_nok" for lv in ls]
            + ["dein", "citations", "percentile", "resc_sum", "resc_avg"])


def indicator_variables(ls=(1, 5)) -> list:
    return [f"di_{lv}" for lv in ls] + [f"di_{lv}_nok" for lv in ls] + ["dein"]


@dataclass
class AnalysisResult:
    corr: object
    factors: object
    factor_grid: list
    indicator_grid: list
    tallies: dict
    best_indicator: str


def analyze_matrix(matrix: AnalysisMatrix, ls=(1, 5), tag_classes=None) -> AnalysisResult:
    """Correlations, factor model and both regression grids for one matrix."""
    tag_classes = tag_classes or load_tag_classes()
    variables = analysis_variables(ls)
    if len(matrix) < 3:
        raise ValidationError(f"analysis needs at least 3 complete papers, matrix has {len(matrix)}")
    corr = correlation_matrix(matrix, variables, transform=True, method="spearman")
    model = fit_from_data(matrix, variables, transform=True)
    if model.n_factors == 0:
        raise ValidationError("no factor has an eigenvalue above 1")
    scores = factor_scores(model, matrix)
    data = {name: matrix.column(name) for name in matrix.columns if name not in ("paper_id", "field")}
    names = model.factor_names()
    for k, name in enumerate(names):
        data[name] = scores[:, k]
    factor_grid = regression_grid(data, TAGS, [("factors", names)], grid="factor")
    indicators = indicator_variables(ls)
    indicator_grid = regression_grid(data, TAGS, [(v, [v]) for v in indicators], grid="indicator")
    return AnalysisResult(
        corr=corr, factors=model, factor_grid=factor_grid, indicator_grid=indicator_grid,
        tallies=tally(indicator_grid, tag_classes),
        best_indicator=select_best(indicator_grid, tag_classes),
    )


def _read_matrix(run: StageRun) -> AnalysisMatrix:
    with open(run.input("matrix", run.config.out_dir / MATRIX), encoding="utf-8") as fh:
        return AnalysisMatrix.read(fh)


def run_corr(config: PipelineConfig):
    with stage("corr", config) as run:
        matrix = _read_matrix(run)
        corr = correlation_matrix(matrix, analysis_variables(config.ls), transform=True, method="spearman")
        with open(run.output(CORR), "w", encoding="utf-8", newline="\n") as fh:
            corr.write(fh)
        run.counts.update(rows=len(matrix))
    return corr


def run_fa(config: PipelineConfig):
    with stage("fa", config) as run:
        matrix = _read_matrix(run)
        model = fit_from_data(matrix, analysis_variables(config.ls), transform=True)
        with open(run.output(FA), "w", encoding="utf-8", newline="\n") as fh:
            model.write(fh)
        run.counts.update(rows=len(matrix), factors=model.n_factors)
    return model


def run_regress(config: PipelineConfig):
    with stage("regress", config) as run:
        matrix = _read_matrix(run)
        result = analyze_matrix(matrix, config.ls)
        _write_regress(run, result)
    return result


def _write_regress(run, result):
    with open(run.output(REGRESS), "w", encoding="utf-8", newline="\n") as fh:
        write_regress(fh, [result.factor_grid, result.indicator_grid], load_tag_classes())
    failed = [c for c in result.factor_grid + result.indicator_grid if c.fit is None]
    run.counts.update(factor_fits=len(result.factor_grid), indicator_fits=len(result.indicator_grid),
                      failed_fits=len(failed), tally=result.tallies, best_indicator=result.best_indicator)


def run_analyze(config: PipelineConfig) -> AnalysisResult:
    """``corr.tsv``, ``fa.tsv`` and ``regress.tsv`` from ``matrix.tsv``."""
    with stage("analyze", config) as run:
        matrix = _read_matrix(run)
        result = analyze_matrix(matrix, config.ls)
        with open(run.output(CORR), "w", encoding="utf-8", newline="\n") as fh:
            result.corr.write(fh)
        with open(run.output(FA), "w", encoding="utf-8", newline="\n") as fh:
            result.factors.write(fh)
        _write_regress(run, result)
        run.counts.update(rows=len(matrix), factors=result.factors.n_factors)
    return result


def run_pipeline(config: PipelineConfig) -> AnalysisResult:
    """All stages in order; analysis re-reads ``matrix.tsv`` from disk."""
    run_compute(config)
    run_percentile(config)
    run_join(config)
    return run_analyze(config)


def with_out_dir(config: PipelineConfig, out_dir) -> PipelineConfig:
    return replace(config, out_dir=Path(out_dir))
