import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from citedisrupt.errors import PaperLookupError, ValidationError
from citedisrupt.graph import CitationGraph
from citedisrupt.indicators import (
    CiterPartition,
    IndicatorConfig,
    NiStrategy,
    batch_compute,
    bu_ratio,
    classify_citers,
    compute_all,
    count_nk,
    default_configs,
    dependence_score,
    disruption_score,
    read_scores,
    write_scores,
)
from citedisrupt.testkit import random_small_graph

from conftest import toy_g1, toy_g2, toy_g3

ZC = NiStrategy.ZERO_COUPLING
CP = NiStrategy.COMPLEMENT


def test_g1_partition_l1(g1, backend):
    p = classify_citers(g1, "FP", IndicatorConfig(1), backend)
    assert (p.n_i, p.n_j, p.citer_total) == (1, 1, 2)
    assert p.coupling_histogram == {0: 1, 1: 1}


@pytest.mark.parametrize("strategy,n_i", [(ZC, 1), (CP, 2)])
def test_g1_partition_l5(g1, strategy, n_i):
    p = classify_citers(g1, "FP", IndicatorConfig(5, ni_strategy=strategy))
    assert (p.n_i, p.n_j) == (n_i, 0)


def test_count_nk_counts_each_paper_once(backend):
    assert count_nk(toy_g1(), "FP", IndicatorConfig(), backend) == 1
    assert count_nk(toy_g1([("D", "R1"), ("D", "R2")]), "FP", IndicatorConfig(), backend) == 2
    assert count_nk(toy_g3(), "FP", IndicatorConfig(), backend) == 0


@pytest.mark.parametrize("n_i,n_j,n_k,with_k,without_k", [
    (2, 0, 0, 1.0, 1.0),
    (0, 2, 0, -1.0, -1.0),
    (1, 1, 1, 0.0, 0.0),
    (1, 0, 1, 0.5, 1.0),
])
def test_disruption_score_formula(n_i, n_j, n_k, with_k, without_k):
    p = CiterPartition(n_i, n_j, n_i + n_j)
    assert disruption_score(p, n_k, True) == with_k
    assert disruption_score(p, n_k, False) == without_k


def test_zero_denominator_is_nan():
    assert math.isnan(disruption_score(CiterPartition(0, 0, 0), 0, True))
    assert math.isnan(bu_ratio(CiterPartition(0, 0, 0)))
    assert bu_ratio(CiterPartition(2, 0, 2)) == 1.0
    assert bu_ratio(CiterPartition(0, 3, 3)) == 0.0


def test_g1_compute_all(g1, backend):
    s = compute_all(g1, "FP", default_configs(), backend)
    assert s.di == {(1, True): 0.0, (1, False): 0.0, (5, True): 0.5, (5, False): 1.0}
    assert (s.dein, s.bu_ratio, s.n_k, s.citer_count) == (0.5, 0.5, 1, 2)
    assert s.bu_ratio == (1 + s.get(1, False)) / 2
    cp = compute_all(g1, "FP", default_configs(ni_strategy=CP), backend)
    assert cp.get(5, True) == pytest.approx(2 / 3, abs=1e-15)


def test_boundary_networks(backend):
    s2 = compute_all(toy_g2(), "FP", backend=backend)
    assert (s2.get(1, True), s2.get(1, False), s2.dein, s2.n_k) == (1.0, 1.0, 0.0, 0)
    s3 = compute_all(toy_g3(), "FP", backend=backend)
    assert (s3.get(1, True), s3.dein) == (-1.0, 1.0)


def test_uncited_paper_is_all_nan():
    graph = CitationGraph.from_edges([("Z", "R9")], nodes=["FP"])
    s = compute_all(graph, "Z")
    assert s.citer_count == 0 and s.n_k == 0
    assert all(math.isnan(v) for v in s.di.values())
    assert math.isnan(s.dein) and math.isnan(s.bu_ratio)
    assert math.isnan(dependence_score(graph, "Z", IndicatorConfig()))


def test_uncited_paper_with_nk_scores_zero(g1):
    # only the no-k denominator vanishes
    s = compute_all(g1, "C")
    assert s.citer_count == 0 and s.n_k == 2
    assert s.get(1, True) == 0.0
    assert math.isnan(s.get(1, False))


def test_unknown_focal(g1):
    with pytest.raises(PaperLookupError):
        compute_all(g1, "ZZ")
    with pytest.raises(PaperLookupError):
        batch_compute(g1, ["FP", "ZZ"])


def test_config_validation():
    with pytest.raises(ValidationError):
        IndicatorConfig(0)
    with pytest.raises(ValidationError):
        compute_all(toy_g1(), "FP", [IndicatorConfig(1, ni_strategy=ZC), IndicatorConfig(5, ni_strategy=CP)])


def test_record_equals_single_operations(backend):
    rng = np.random.default_rng(3)
    edges, years = random_small_graph(rng, 40)
    graph = CitationGraph.from_edges(edges, years=years)
    for strategy in (ZC, CP):
        configs = [IndicatorConfig(lv, k, strategy, 2010) for lv in (1, 2, 5) for k in (True, False)]
        for pid in graph.ids:
            rec = compute_all(graph, pid, configs, backend)
            nk = count_nk(graph, pid, configs[0], backend)
            assert rec.n_k == nk
            for c in configs:
                part = classify_citers(graph, pid, c, backend)
                expected = disruption_score(part, nk, c.include_k)
                got = rec.get(c.l, c.include_k)
                assert got == expected or (math.isnan(got) and math.isnan(expected))
            d = dependence_score(graph, pid, configs[0], backend)
            assert rec.dein == d or (math.isnan(d) and math.isnan(rec.dein))


def test_strategies_agree_at_l1():
    rng = np.random.default_rng(11)
    for _ in range(20):
        edges, years = random_small_graph(rng, 30)
        graph = CitationGraph.from_edges(edges, years=years)
        a = batch_compute(graph, graph.ids, default_configs((1,), ZC))
        b = batch_compute(graph, graph.ids, default_configs((1,), CP))
        for x, y in zip(a, b):
            assert np.array_equal([x.di[k] for k in sorted(x.di)], [y.di[k] for k in sorted(y.di)],
                                  equal_nan=True)


def test_batch_edges(g1):
    assert batch_compute(g1, []) == []
    one = batch_compute(g1, ["FP"])
    assert len(one) == 1 and one[0].di == compute_all(g1, "FP").di
    rows = batch_compute(g1, {"FP", "B", "A"})
    assert [r.focal for r in rows] == ["A", "B", "FP"]


def _dump(rows):
    out = io.StringIO()
    write_scores(out, rows)
    return out.getvalue()


def test_batch_output_independent_of_workers_and_chunks():
    rng = np.random.default_rng(5)
    edges, years = random_small_graph(rng, 60)
    graph = CitationGraph.from_edges(edges, years=years)
    base = _dump(batch_compute(graph, graph.ids, worker_count=1))
    for workers, chunk in ((2, None), (8, 1), (3, 7)):
        assert _dump(batch_compute(graph, graph.ids, worker_count=workers, chunk_size=chunk)) == base


def test_scores_tsv_layout_and_roundtrip(g1):
    text = _dump(batch_compute(g1, ["FP", "C"]))
    lines = text.splitlines()
    assert lines[0].split("\t") == ["paper_id", "citer_count", "n_i", "n_j_l1", "n_j_l5", "n_k",
                                    "di_1", "di_5", "di_1_nok", "di_5_nok", "dein", "bu_ratio"]
    assert lines[1] == "C\t0\t0\t0\t0\t2\t0\t0\tNA\tNA\tNA\tNA"
    assert lines[2] == "FP\t2\t1\t1\t0\t1\t0\t0.5\t0\t1\t0.5\t0.5"
    back = read_scores(io.StringIO(text))
    assert _dump(back) == text


def test_six_significant_digits():
    graph = CitationGraph.from_edges([("F", "R"), ("A", "F"), ("B", "F"), ("C", "F"), ("C", "R")])
    line = _dump(batch_compute(graph, ["F"])).splitlines()[1]
    assert "0.333333" in line.split("\t")


@st.composite
def small_graphs(draw):
    n = draw(st.integers(2, 14))
    pairs = draw(st.lists(st.tuples(st.integers(1, n - 1), st.integers(0, n - 2)), max_size=50))
    ids = [f"p{i:02d}" for i in range(n)]
    return CitationGraph.from_edges([(ids[u], ids[v]) for u, v in pairs if u > v], nodes=ids)


@settings(max_examples=120, deadline=None)
@given(small_graphs())
def test_range_and_ordering_properties(graph):
    configs = default_configs((1, 2, 3, 5))
    for s in batch_compute(graph, graph.ids, configs):
        for (lv, with_k), v in s.di.items():
            if not math.isnan(v):
                assert -1.0 <= v <= 1.0
        if not math.isnan(s.dein):
            assert s.dein >= 0
        if not math.isnan(s.bu_ratio):
            assert 0 <= s.bu_ratio <= 1
            assert s.bu_ratio == pytest.approx((1 + s.get(1, False)) / 2, abs=1e-15)
        nok = [s.get(lv, False) for lv in (1, 2, 3, 5)]
        defined = [v for v in nok if not math.isnan(v)]
        assert defined == sorted(defined)
        for lv in (1, 2, 3, 5):
            a, b = s.get(lv, True), s.get(lv, False)
            if math.isnan(b):
                assert math.isnan(a) or a == 0.0
            elif not math.isnan(a):
                assert abs(a) <= abs(b)
                assert (abs(a) == abs(b)) == (s.n_k == 0 or b == 0)


@settings(max_examples=60, deadline=None)
@given(small_graphs())
def test_zero_coupling_citer_pushes_towards_disruption(graph):
    for pid in graph.ids:
        if not graph.cited_references(pid):
            continue
        before = compute_all(graph, pid)
        extended = CitationGraph.from_edges([*graph.edges(), ("zz_new", pid)], nodes=graph.ids)
        after = compute_all(extended, pid)
        for key, v in before.di.items():
            if not math.isnan(v):
                assert after.di[key] >= v
        if not math.isnan(before.dein):
            assert after.dein <= before.dein
