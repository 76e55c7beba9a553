import io
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from citedisrupt.errors import DomainError
from citedisrupt.graph import CitationGraph
from citedisrupt.normalize import (
    PaperMetadata,
    average_ranks,
    eligible_papers,
    log1p_transform,
    metadata_from_graph,
    percentiles,
    read_percentiles,
    write_percentiles,
)


def meta(pid, refs, cites, year, field="bio"):
    return PaperMetadata(pid, year, field, cites, refs)


@pytest.mark.parametrize("refs,cites,year,ok", [
    (9, 100, 2005, False),
    (10, 10, 2000, True),
    (10, 9, 2005, False),
    (50, 50, 2016, True),
    (50, 50, 2017, False),
    (50, 50, 1999, False),
    (50, 50, None, False),
])
def test_eligibility_filters(refs, cites, year, ok):
    assert (eligible_papers([meta("p", refs, cites, year)]) == {"p"}) is ok


def _pct(cites, field="bio", year=2005):
    rows = [meta(f"p{i:03d}", 10, c, year, field) for i, c in enumerate(cites)]
    return [r.percentile for r in percentiles(rows)]


def test_hazen_examples():
    assert _pct(range(10)) == pytest.approx([5, 15, 25, 35, 45, 55, 65, 75, 85, 95], abs=1e-12)
    assert _pct([3, 10, 10, 50]) == [12.5, 50.0, 50.0, 87.5]
    assert _pct([7]) == [50.0]


def test_groups_are_field_and_year():
    rows = [meta("a", 1, 5, 2005, "x"), meta("b", 1, 1, 2005, "x"), meta("c", 1, 1, 2006, "x"),
            meta("d", 1, 100, 2005, "y")]
    got = {r.paper: r.percentile for r in percentiles(rows)}
    assert got == {"a": 75.0, "b": 25.0, "c": 50.0, "d": 50.0}


def test_missing_field_is_skipped_and_reported():
    skipped = []
    out = percentiles([meta("a", 1, 5, 2005, None), meta("b", 1, 5, 2005)], skipped)
    assert [r.paper for r in out] == ["b"]
    assert skipped == ["a"]


counts = st.lists(st.integers(0, 40), min_size=1, max_size=30)


@settings(max_examples=200, deadline=None)
@given(counts)
def test_percentile_properties(cites):
    pct = np.array(_pct(cites))
    c = np.array(cites)
    assert ((pct > 0) & (pct < 100)).all()
    order = np.argsort(c, kind="stable")
    assert (np.diff(pct[order]) >= 0).all()
    for v in set(cites):
        assert len(set(pct[c == v])) == 1
    assert pct.mean() == pytest.approx(50.0, abs=1e-9)
    rescaled = np.array(_pct([3 * x * x + 7 for x in cites]))
    np.testing.assert_array_equal(pct, rescaled)


def test_average_ranks_ties():
    np.testing.assert_array_equal(average_ranks([3, 10, 10, 50]), [1, 2.5, 2.5, 4])


def test_log1p_values():
    out = log1p_transform([0.0, math.e - 1, math.nan])
    assert out[0] == 0.0
    assert out[1] == pytest.approx(1.0, abs=1e-15)
    assert math.isnan(out[2])


def test_log1p_domain():
    with pytest.raises(DomainError, match="row 1"):
        log1p_transform([0.0, -1.0])
    with pytest.raises(DomainError, match="row q"):
        log1p_transform([0.0, -2.0], shift_boundary=True, names=["p", "q"])
    with pytest.warns(RuntimeWarning, match="shifted"):
        out = log1p_transform([-1.0, 0.5], shift_boundary=True)
    assert out[0] == pytest.approx(math.log(1e-9), rel=1e-6)
    assert out[1] == math.log1p(0.5)


def test_log1p_no_warning_without_boundary():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        log1p_transform([-0.5, 3.0], shift_boundary=True)


def test_metadata_counts_respect_window():
    graph = CitationGraph.from_edges(
        [("A", "F"), ("B", "F"), ("F", "R")],
        years={"A": 2010, "B": 2020, "F": 2005, "R": 2000}, fields={"F": "bio"},
    )
    m = {x.paper: x for x in metadata_from_graph(graph, window_end=2018)}
    assert (m["F"].citations, m["F"].reference_count, m["F"].field) == (1, 1, "bio")
    m = {x.paper: x for x in metadata_from_graph(graph)}
    assert m["F"].citations == 2


def test_percentiles_tsv_roundtrip():
    rows = percentiles([meta("a", 1, 3, 2005), meta("b", 1, 9, 2005), meta("c", 1, 9, 2005)])
    buf = io.StringIO()
    write_percentiles(buf, rows)
    assert buf.getvalue().splitlines()[0] == "paper_id\tfield\tyear\tcitations\tpercentile"
    buf.seek(0)
    back = read_percentiles(buf)
    assert [(r.paper, r.field, r.year, r.citations) for r in back] == \
        [(r.paper, r.field, r.year, r.citations) for r in rows]
    assert [r.percentile for r in back] == pytest.approx([r.percentile for r in rows], rel=5e-6)
