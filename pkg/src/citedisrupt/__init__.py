"""Citation-network disruption indicators and their validation against reviewer assessments."""
from .errors import (
    CiteDisruptError,
    ConvergenceError,
    DomainError,
    ParseError,
    PaperLookupError,
    StageError,
    ValidationError,
)
from .graph import CitationGraph, load_graph, load_graph_files
from .indicators import (
    DisruptionScores,
    IndicatorConfig,
    NiStrategy,
    batch_compute,
    compute_all,
    default_configs,
)

__version__ = "0.1.0"

__all__ = [
    "CitationGraph",
    "CiteDisruptError",
    "ConvergenceError",
    "DisruptionScores",
    "DomainError",
    "IndicatorConfig",
    "NiStrategy",
    "PaperLookupError",
    "ParseError",
    "StageError",
    "ValidationError",
    "batch_compute",
    "compute_all",
    "default_configs",
    "load_graph",
    "load_graph_files",
]
