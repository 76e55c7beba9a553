"""Spearman and Pearson correlation matrices with pairwise NA handling."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence, TextIO

import numpy as np

from ..errors import ValidationError
from ..normalize import average_ranks, log1p_transform
from ..tsvio import fmt_fixed, write_table


def _complete_pairs(x, y):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ValidationError(f"length mismatch: {x.size} vs {y.size}")
    ok = ~(np.isnan(x) | np.isnan(y))
    return x[ok], y[ok]


def pearson(x, y) -> float:
    x, y = _complete_pairs(x, y)
    if x.size < 2:
        return math.nan
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        warnings.warn("zero variance: correlation undefined", RuntimeWarning, stacklevel=2)
        return math.nan
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def spearman(x, y) -> float:
    """Pearson correlation of average ranks; ties are handled exactly.

    Pairs with a NaN on either side are dropped. Returns NaN (with a
    RuntimeWarning) when either side has no rank variance.
    """
    x, y = _complete_pairs(x, y)
    if x.size < 3:
        raise ValidationError(f"spearman needs at least 3 complete pairs, got {x.size}")
    return pearson(average_ranks(x), average_ranks(y))


@dataclass
class CorrelationMatrix:
    names: list
    values: np.ndarray
    method: str = "spearman"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        p = len(self.names)
        if self.values.shape != (p, p):
            raise ValidationError(f"correlation matrix shape {self.values.shape} does not match {p} names")

    def write(self, stream: TextIO) -> None:
        write_table(stream, ["variable", *self.names], (
            [name, *(fmt_fixed(v) for v in row)] for name, row in zip(self.names, self.values)
        ))


def _columns(data, variables):
    if isinstance(data, Mapping):
        return [np.asarray(data[v], dtype=np.float64) for v in variables]
    if hasattr(data, "column"):
        return [np.asarray(data.column(v), dtype=np.float64) for v in variables]
    arr = np.asarray(data, dtype=np.float64)
    return [arr[:, j] for j in range(arr.shape[1])]


def transformed_columns(data, variables: Sequence[str], transform: bool = True):
    cols = _columns(data, variables)
    if transform:
        cols = [log1p_transform(c, shift_boundary=True) for c in cols]
    return cols


def correlation_matrix(data, variables: Sequence[str], transform: bool = True,
                       method: str = "spearman") -> CorrelationMatrix:
    """Pairwise correlations over complete cases of each pair of columns.

    ``data`` is an :class:`~citedisrupt.ingest.AnalysisMatrix`, a mapping of
    name -> column, or a 2-D array whose columns follow ``variables``. With
    ``transform`` the columns pass through log(x+1) first.
    """
    if method not in ("spearman", "pearson"):
        raise ValidationError(f"unknown correlation method {method!r}")
    fn = spearman if method == "spearman" else pearson
    cols = transformed_columns(data, variables, transform)
    p = len(cols)
    values = np.eye(p)
    for i in range(p):
        for j in range(i + 1, p):
            values[i, j] = values[j, i] = fn(cols[i], cols[j])
    return CorrelationMatrix(list(variables), values, method)
