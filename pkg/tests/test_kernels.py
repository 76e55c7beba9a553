import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from citedisrupt.kernels import (
    COL_CITERS,
    COL_COUPLING_SUM,
    COL_NK,
    COL_UNKNOWN,
    COL_ZERO,
    ENV_FLAG,
    N_FIXED_COLS,
    available_backends,
    get_backend,
)
from citedisrupt.testkit import random_small_graph
from citedisrupt.graph import CitationGraph


def _args(graph):
    return (graph.out_indptr, graph.out_indices, graph.in_indptr, graph.in_indices, graph.years)


sorted_sets = st.lists(st.integers(0, 200), max_size=40, unique=True).map(sorted)


@settings(max_examples=200, deadline=None)
@given(sorted_sets, sorted_sets)
def test_merge_count_is_intersection_size(a, b):
    for name in available_backends():
        k = get_backend(name)
        got = k.merge_count(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))
        assert got == len(set(a) & set(b))


def test_g1_counts(g1, backend):
    k = get_backend(backend)
    fp = g1.index_of("FP")
    citers, couplings, unknown = k.citer_couplings(*_args(g1), fp, 0, False)
    assert sorted(zip((g1.ids[c] for c in citers), couplings.tolist())) == [("A", 0), ("B", 1)]
    assert unknown == 0
    assert k.count_nk(*_args(g1), fp, 0, False) == 1
    out = k.batch_counts(*_args(g1), np.array([fp]), np.array([1, 5]), 0, False)
    row = out[0]
    assert row[COL_CITERS] == 2 and row[COL_ZERO] == 1 and row[COL_COUPLING_SUM] == 1
    assert row[COL_NK] == 1 and row[COL_UNKNOWN] == 0
    assert list(row[N_FIXED_COLS:]) == [1, 0]


def test_unknown_year_citers_counted_under_window(backend):
    edges = [("F", "R"), ("A", "F"), ("B", "F")]
    graph = CitationGraph.from_edges(edges, years={"F": 2000, "R": 1990, "A": 2005, "B": None})
    k = get_backend(backend)
    out = k.batch_counts(*_args(graph), np.array([graph.index_of("F")]), np.array([1]), 2018, True)
    assert out[0, COL_CITERS] == 1
    assert out[0, COL_UNKNOWN] == 1


@pytest.mark.skipif(len(available_backends()) < 2, reason="numba not installed")
@pytest.mark.parametrize("seed", range(40))
def test_backends_agree_on_random_graphs(seed):
    rng = np.random.default_rng(seed)
    edges, years = random_small_graph(rng, max_nodes=50)
    graph = CitationGraph.from_edges(edges, years=years)
    focal = np.arange(graph.node_count, dtype=np.int64)
    thresholds = np.array([1, 2, 3, 5], dtype=np.int64)
    for window, use in ((0, False), (2008, True)):
        a = get_backend("numpy").batch_counts(*_args(graph), focal, thresholds, window, use)
        b = get_backend("numba").batch_counts(*_args(graph), focal, thresholds, window, use)
        assert a.dtype == b.dtype == np.int64
        np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("flag,expected", [("0", "numpy"), ("1", None)])
def test_env_flag_selects_backend(flag, expected):
    env = dict(os.environ, **{ENV_FLAG: flag})
    out = subprocess.run(
        [sys.executable, "-c", "from citedisrupt.kernels import BACKEND; print(BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    ).stdout.strip()
    if expected is None:
        expected = "numba" if "numba" in available_backends() else "numpy"
    assert out == expected


def test_unknown_backend_name():
    with pytest.raises(ValueError):
        get_backend("fortran")
