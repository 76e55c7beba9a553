from .correlation import CorrelationMatrix, correlation_matrix, pearson, spearman
from .factor import (
    FactorModel,
    factor_analysis,
    factor_scores,
    fit_from_data,
    varimax,
    varimax_criterion,
    varimax_sweeps,
)
from .grid import GridCell, expectation, regression_grid, select_best, tally, write_regress
from .poisson import RegressionFit, percentage_change, poisson_deviance, poisson_fit, score_gradient

__all__ = [
    "CorrelationMatrix",
    "FactorModel",
    "GridCell",
    "RegressionFit",
    "correlation_matrix",
    "expectation",
    "factor_analysis",
    "factor_scores",
    "fit_from_data",
    "pearson",
    "percentage_change",
    "poisson_deviance",
    "poisson_fit",
    "regression_grid",
    "score_gradient",
    "select_best",
    "spearman",
    "tally",
    "varimax",
    "varimax_criterion",
    "varimax_sweeps",
    "write_regress",
]
