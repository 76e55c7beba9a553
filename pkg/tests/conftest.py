from importlib import resources
from pathlib import Path

import pytest

from citedisrupt.graph import CitationGraph
from citedisrupt.kernels import available_backends

GOLDEN = Path(__file__).parent / "golden" / "v1"


def toy_g1(extra=()):
    """FP cites R1..R3; A cites FP; B cites FP and R1; C cites R1."""
    edges = [("FP", "R1"), ("FP", "R2"), ("FP", "R3"),
             ("A", "FP"), ("B", "FP"), ("B", "R1"), ("C", "R1"), *extra]
    return CitationGraph.from_edges(edges)


def toy_g2():
    return CitationGraph.from_edges([("FP", "R1"), ("A", "FP"), ("B", "FP")])


def toy_g3():
    return CitationGraph.from_edges([("FP", "R1"), ("A", "FP"), ("A", "R1"), ("B", "FP"), ("B", "R1")])


@pytest.fixture
def g1():
    return toy_g1()


@pytest.fixture(params=available_backends())
def backend(request):
    return request.param


@pytest.fixture(scope="session")
def bundled():
    root = resources.files("citedisrupt") / "data" / "synthetic_v1"
    return {name: Path(str(root / f"{name}.tsv")) for name in ("nodes", "edges", "reviews")}


ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
