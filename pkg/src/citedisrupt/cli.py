"""Command-line entry point.

Exit codes: 0 success, 2 validation, 3 parse, 4 I/O, 5 non-convergence.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__, pipeline
from .errors import CiteDisruptError
from .graph import load_graph_files
from .indicators import NiStrategy
from .ingest import load_reviews
from .kernels import ENV_FLAG, available_backends

EXIT_IO = 4

_D = pipeline.PipelineConfig()


def _window(value: str):
    if value.strip().lower() in ("none", "off"):
        return "none"
    return int(value)


def _ls(value: str):
    try:
        out = tuple(int(x) for x in value.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("at least one threshold is required")
    return out


def _add_common(p: argparse.ArgumentParser):
    g = p.add_argument_group("inputs and outputs")
    g.add_argument("--config", metavar="FILE",
                   help="key=value settings file; explicit flags override it (default: none)")
    g.add_argument("--nodes", metavar="TSV", help="nodes table: paper_id, year, field")
    g.add_argument("--edges", metavar="TSV", help="edges table: citing_id, cited_id")
    g.add_argument("--reviews", metavar="TSV", help="reviews table: paper_id, stars, tags")
    g.add_argument("--out", dest="out_dir", metavar="DIR",
                   help=f"output directory (default: {_D.out_dir})")

    s = p.add_argument_group("settings")
    s.add_argument("--min-refs", type=int, help=f"minimum cited references per paper (default: {_D.min_refs})")
    s.add_argument("--min-cites", type=int, help=f"minimum citations per paper (default: {_D.min_cites})")
    s.add_argument("--year-min", type=int, help=f"first publication year included (default: {_D.year_min})")
    s.add_argument("--year-max", type=int, help=f"last publication year included (default: {_D.year_max})")
    s.add_argument("--window-end", type=_window,
                   help=f"last year of citing papers counted, or 'none' (default: {_D.window_end})")
    s.add_argument("--l", dest="ls", type=_ls, metavar="L[,L...]",
                   help=f"coupling thresholds l (default: {','.join(map(str, _D.ls))})")
    s.add_argument("--ni-strategy", choices=[v.value for v in NiStrategy],
                   help=f"which citers count as n_i (default: {_D.ni_strategy})")
    s.add_argument("--reference-year", type=int,
                   help=f"year exposure is measured to (default: {_D.reference_year})")
    s.add_argument("--workers", type=int, help=f"threads for indicator computation (default: {_D.workers})")
    s.add_argument("--backend", choices=available_backends(),
                   help=f"kernel backend (default: numba if installed, unless {ENV_FLAG}=0)")


SUBCOMMANDS = {
    "ingest-check": ("validate nodes/edges (and reviews) and print an ingest report", None),
    "compute": ("indicator scores for eligible papers -> scores.tsv", pipeline.run_compute),
    "percentile": ("field/year citation percentiles -> percentiles.tsv", pipeline.run_percentile),
    "join": ("join scores, percentiles and reviews -> matrix.tsv", pipeline.run_join),
    "corr": ("Spearman correlations of log(x+1) variables -> corr.tsv", pipeline.run_corr),
    "fa": ("factor analysis with varimax rotation -> fa.tsv", pipeline.run_fa),
    "regress": ("Poisson regression grids and expectation tallies -> regress.tsv", pipeline.run_regress),
    "analyze": ("corr, fa and regress from matrix.tsv in one step", pipeline.run_analyze),
    "pipeline": ("compute, percentile, join and analyze", pipeline.run_pipeline),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="citedisrupt",
        description="Disruption indicators on citation networks and their comparison with reviewer tags.",
        epilog="Exit codes: 0 success, 2 validation, 3 parse, 4 I/O, 5 non-convergence.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (helptext, _) in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=helptext, description=helptext)
        _add_common(p)
    return parser


_SETTING_FLAGS = (
    "nodes", "edges", "reviews", "out_dir", "min_refs", "min_cites", "year_min", "year_max",
    "window_end", "ls", "ni_strategy", "reference_year", "workers", "backend",
)


def config_from_args(args) -> pipeline.PipelineConfig:
    base = pipeline.read_config_file(args.config) if args.config else {}
    overrides = {k: getattr(args, k, None) for k in _SETTING_FLAGS}
    if overrides.get("window_end") == "none":
        overrides["window_end"] = None
        base["window_end"] = None
    return pipeline.config_with(base, **overrides)


def _ingest_check(cfg: pipeline.PipelineConfig) -> dict:
    cfg.require("nodes", "edges")
    graph, report = load_graph_files(cfg.nodes, cfg.edges)
    out = {"papers": graph.node_count, "edges": graph.edge_count, "ingest": report.as_dict()}
    if cfg.reviews is not None:
        with open(cfg.reviews, encoding="utf-8") as fh:
            rows, rep = load_reviews(fh)
        out["reviews"] = {"rows": len(rows), "dropped_excluded_tags": rep.dropped_excluded,
                          "papers": len({r.paper for r in rows})}
    return out


def _summary(command, result, cfg) -> str:
    if command == "ingest-check":
        return json.dumps(result, sort_keys=True, indent=2)
    manifest = pipeline.read_manifest(cfg.out_dir)
    stage = "analyze" if command == "pipeline" else command
    counts = manifest.get("stages", {}).get(stage, {}).get("counts", {})
    return f"{command}: ok ({cfg.out_dir}) " + json.dumps(counts, sort_keys=True)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "ingest-check":
            result = _ingest_check(cfg)
        else:
            result = SUBCOMMANDS[args.command][1](cfg)
        print(_summary(args.command, result, cfg))
        return 0
    except CiteDisruptError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.exit_code
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
