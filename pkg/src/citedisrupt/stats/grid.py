"""Grids of Poisson regressions (tags x predictor sets) and expectation tallies.

A tag classed ``newness`` is expected to rise with disruption, a
``non-newness`` tag to fall (or stay flat); ``unclassified`` tags carry no
expectation. Predictors whose high values mean *less* disruption (DeIn)
get orientation -1, which flips the expected sign.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, TextIO

import numpy as np

from ..errors import CiteDisruptError
from ..tsvio import fmt_fixed, write_table
from .poisson import CONSTANT, RegressionFit, poisson_fit

DEFAULT_ORIENTATION = {"dein": -1}

MET = "met"
VIOLATED = "violated"
NO_EXPECTATION = "none"


@dataclass
class GridCell:
    grid: str
    model: str
    response: str
    predictors: list
    fit: Optional[RegressionFit] = None
    error: Optional[str] = None


def expectation(tag_class: str, pct_change: float, orientation: int = 1) -> str:
    if tag_class == "unclassified":
        return NO_EXPECTATION
    if pct_change is None or math.isnan(pct_change):
        return "NA"
    signed = orientation * pct_change
    if tag_class == "newness":
        return MET if signed > 0 else VIOLATED
    return MET if signed <= 0 else VIOLATED


def regression_grid(data: Mapping[str, Sequence[float]], responses: Sequence[str],
                    predictor_sets: Sequence[tuple], exposure="exposure_years",
                    grid: str = "grid") -> list[GridCell]:
    """One Poisson fit per (response, predictor set).

    ``predictor_sets`` holds ``(label, [column, ...])`` pairs. A failing fit
    is recorded in its cell and the grid carries on.
    """
    exp = np.asarray(data[exposure], dtype=np.float64) if isinstance(exposure, str) else exposure
    cells = []
    for response in responses:
        y = np.asarray(data[response], dtype=np.float64)
        for label, cols in predictor_sets:
            cols = list(cols)
            cell = GridCell(grid, label, response, cols)
            x = np.column_stack([np.asarray(data[c], dtype=np.float64) for c in cols]) if cols else None
            try:
                cell.fit = poisson_fit(y, x, exposure=exp, names=cols)
            except CiteDisruptError as err:
                cell.error = str(err)
            cells.append(cell)
    return cells


def cell_expectations(cell: GridCell, tag_classes: Mapping[str, str],
                      orientation: Optional[Mapping[str, int]] = None) -> dict:
    orientation = DEFAULT_ORIENTATION if orientation is None else orientation
    if cell.fit is None:
        return {p: "NA" for p in cell.predictors}
    out = {}
    for p in cell.predictors:
        k = cell.fit.names.index(p)
        out[p] = expectation(tag_classes[cell.response], float(cell.fit.percentage_change[k]),
                             orientation.get(p, 1))
    return out


def tally(cells: Sequence[GridCell], tag_classes: Mapping[str, str],
          orientation: Optional[Mapping[str, int]] = None) -> dict:
    """Number of cells meeting expectations, per predictor, in first-seen order."""
    counts = {}
    for cell in cells:
        for p, flag in cell_expectations(cell, tag_classes, orientation).items():
            counts.setdefault(p, 0)
            counts[p] += flag == MET
    return counts


def select_best(cells: Sequence[GridCell], tag_classes: Mapping[str, str],
                orientation: Optional[Mapping[str, int]] = None) -> str:
    """Predictor with the highest tally.

    Ties go to the larger mean t statistic in the expected direction (the
    more consistent evidence), then to the earlier predictor.
    """
    orientation = DEFAULT_ORIENTATION if orientation is None else orientation
    counts = tally(cells, tag_classes, orientation)
    strength = {p: [] for p in counts}
    for cell in cells:
        if cell.fit is None:
            continue
        direction = {"newness": 1.0, "non-newness": -1.0}.get(tag_classes[cell.response])
        if direction is None:
            continue
        t = cell.fit.t
        for p in cell.predictors:
            strength[p].append(direction * orientation.get(p, 1) * float(t[cell.fit.names.index(p)]))
    order = list(counts)
    return max(order, key=lambda p: (counts[p], float(np.mean(strength[p])) if strength[p] else -math.inf,
                                     -order.index(p)))


REGRESS_COLUMNS = (
    "row_type", "grid", "model", "response", "predictor",
    "coefficient", "robust_se", "t", "percentage_change", "expectation", "status",
)


def regress_rows(cells: Sequence[GridCell], tag_classes: Mapping[str, str],
                 orientation: Optional[Mapping[str, int]] = None):
    for cell in cells:
        if cell.fit is None:
            yield ["coef", cell.grid, cell.model, cell.response, "*",
                   "NA", "NA", "NA", "NA", "NA", f"error: {cell.error}"]
            continue
        flags = cell_expectations(cell, tag_classes, orientation)
        fit = cell.fit
        t = fit.t
        for k, name in enumerate(fit.names):
            flag = "NA" if name == CONSTANT else flags[name]
            yield ["coef", cell.grid, cell.model, cell.response, name,
                   fmt_fixed(fit.coef[k]), fmt_fixed(fit.robust_se[k]), fmt_fixed(t[k]),
                   fmt_fixed(fit.percentage_change[k]), flag, "ok"]


def tally_rows(cells: Sequence[GridCell], tag_classes: Mapping[str, str],
               orientation: Optional[Mapping[str, int]] = None):
    if not cells:
        return
    grid = cells[0].grid
    for p, count in tally(cells, tag_classes, orientation).items():
        yield ["tally", grid, "expectations_met", "*", p, "NA", "NA", "NA", "NA", str(count), "ok"]


def write_regress(stream: TextIO, grids: Sequence[Sequence[GridCell]], tag_classes: Mapping[str, str],
                  orientation: Optional[Mapping[str, int]] = None) -> None:
    rows = []
    for cells in grids:
        rows.extend(regress_rows(cells, tag_classes, orientation))
        rows.extend(tally_rows(cells, tag_classes, orientation))
    write_table(stream, REGRESS_COLUMNS, rows)
