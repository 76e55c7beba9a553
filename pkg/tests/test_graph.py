import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from citedisrupt.errors import PaperLookupError, ParseError
from citedisrupt.graph import CitationGraph, graph_from_text, load_graph

NODES = "paper_id\tyear\tfield\nFP\t2005\tbio\nR1\t2001\tbio\nA\t2007\tchem\n"


def test_coupling_examples(g1):
    assert g1.coupling_strength("FP", "B") == 1
    assert g1.coupling_strength("FP", "A") == 0
    assert g1.coupling_strength("FP", "FP") == 3


def test_adjacency_queries(g1):
    assert g1.cited_references("FP") == ("R1", "R2", "R3")
    assert g1.citing_papers("FP") == ("A", "B")
    assert g1.citing_papers("R1") == ("B", "C", "FP")
    with pytest.raises(PaperLookupError):
        g1.cited_references("nope")


def test_self_loops_and_duplicates_reported():
    graph, report = graph_from_text(NODES, "citing_id\tcited_id\nA\tFP\nA\tFP\nFP\tFP\nFP\tR1\n")
    assert graph.edge_count == 2
    assert report.self_loops == 1
    assert report.deduped == 1
    assert report.warnings


def test_edge_endpoints_missing_from_nodes_are_added():
    graph, report = graph_from_text(NODES, "citing_id\tcited_id\nX\tFP\n")
    assert "X" in graph
    assert graph.year("X") is None
    assert report.added_nodes == 1


def test_bad_year_is_recorded_absent():
    graph, report = graph_from_text("paper_id\tyear\tfield\nA\tabc\tbio\n", "citing_id\tcited_id\n")
    assert graph.year("A") is None
    assert report.bad_years == 1


@pytest.mark.parametrize("nodes,edges,line", [
    ("paper\tyear\tfield\n", "citing_id\tcited_id\n", 1),
    (NODES, "citing_id\tcited_id\nA\tFP\nA\n", 3),
    (NODES + "FP\t2005\tbio\n", "citing_id\tcited_id\n", 5),
    ("", "citing_id\tcited_id\n", 1),
])
def test_parse_errors_carry_line(nodes, edges, line):
    with pytest.raises(ParseError) as info:
        graph_from_text(nodes, edges)
    assert info.value.line == line


def test_citation_window_excludes_unknown_years(caplog):
    graph, _ = graph_from_text(
        "paper_id\tyear\tfield\nFP\t2000\tx\nA\t2010\tx\nB\t2020\tx\nC\t\tx\n",
        "citing_id\tcited_id\nA\tFP\nB\tFP\nC\tFP\n",
    )
    assert graph.citing_papers("FP") == ("A", "B", "C")
    with caplog.at_level("INFO"):
        assert graph.citing_papers("FP", window_end=2018) == ("A",)


def test_arrays_are_read_only(g1):
    with pytest.raises(ValueError):
        g1.out_indices[0] = 0


def test_tsv_roundtrip(g1):
    nodes, edges = io.StringIO(), io.StringIO()
    g1.write_nodes(nodes)
    g1.write_edges(edges)
    nodes.seek(0)
    edges.seek(0)
    again, _ = load_graph(nodes, edges)
    assert again.same_as(g1)


def test_from_arrays_requires_sorted_ids():
    with pytest.raises(ValueError):
        CitationGraph.from_arrays(["b", "a"], [0], [1])


edge_lists = st.lists(st.tuples(st.integers(0, 12), st.integers(0, 12)), max_size=60)


@settings(max_examples=150, deadline=None)
@given(edge_lists)
def test_csr_matches_edge_set(pairs):
    ids = [f"p{i:02d}" for i in range(13)]
    graph = CitationGraph.from_edges([(ids[u], ids[v]) for u, v in pairs], nodes=ids)
    expected = {(ids[u], ids[v]) for u, v in pairs if u != v}
    assert set(graph.edges()) == expected
    assert graph.edge_count == len(expected)
    assert graph.out_degrees().sum() == graph.in_degrees().sum() == len(expected)
    for pid in ids:
        assert set(graph.cited_references(pid)) == {v for u, v in expected if u == pid}
        assert set(graph.citing_papers(pid)) == {u for u, v in expected if v == pid}
    for i in range(graph.node_count):
        assert np.all(np.diff(graph.out_row(i)) > 0)
