"""Immutable citation graph with sorted CSR adjacency in both directions.

Paper ids are opaque strings. Internally every paper gets a dense index
assigned in sorted-id order, so "sorted by index" and "sorted by id" are the
same thing and every adjacency row is ascending.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, TextIO

import numpy as np

from . import kernels
from .errors import ParseError, PaperLookupError
from .kernels import YEAR_MISSING

log = logging.getLogger(__name__)

NODES_HEADER = ("paper_id", "year", "field")
EDGES_HEADER = ("citing_id", "cited_id")


@dataclass
class IngestReport:
    node_rows: int = 0
    edge_rows: int = 0
    self_loops: int = 0
    deduped: int = 0
    bad_years: int = 0
    added_nodes: int = 0
    warnings: list = field(default_factory=list)

    def as_dict(self):
        return {
            "node_rows": self.node_rows,
            "edge_rows": self.edge_rows,
            "self_loops": self.self_loops,
            "deduped": self.deduped,
            "bad_years": self.bad_years,
            "added_nodes": self.added_nodes,
        }


def _frozen(arr):
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


def _csr(n, src, dst):
    order = np.lexsort((dst, src))
    indices = dst[order].astype(np.int64)
    counts = np.bincount(src, minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, indices


class CitationGraph:
    """Directed citation graph; an edge (u, v) means u cites v.

    Do not construct directly from arrays unless they already satisfy the
    invariants; use :meth:`from_edges` or :func:`load_graph`.
    """

    def __init__(self, ids, years, fields, out_indptr, out_indices, in_indptr, in_indices):
        self.ids = tuple(ids)
        self._index = {pid: i for i, pid in enumerate(self.ids)}
        self.years = _frozen(np.asarray(years, dtype=np.int32))
        self.fields = tuple(fields)
        self.out_indptr = _frozen(out_indptr)
        self.out_indices = _frozen(out_indices)
        self.in_indptr = _frozen(in_indptr)
        self.in_indices = _frozen(in_indices)

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[tuple[str, str]],
        years: Optional[Mapping[str, Optional[int]]] = None,
        fields: Optional[Mapping[str, Optional[str]]] = None,
        nodes: Iterable[str] = (),
        report: Optional[IngestReport] = None,
    ) -> "CitationGraph":
        """Build a graph from id pairs. Self-loops are dropped, duplicates merged."""
        years = dict(years or {})
        fields = dict(fields or {})
        edges = list(edges)
        known = set(nodes) | set(years) | set(fields)
        all_ids = set(known)
        for u, v in edges:
            all_ids.add(u)
            all_ids.add(v)
        ids = sorted(all_ids)
        index = {pid: i for i, pid in enumerate(ids)}
        n = len(ids)

        if edges:
            pairs = np.array([(index[u], index[v]) for u, v in edges], dtype=np.int64)
        else:
            pairs = np.zeros((0, 2), dtype=np.int64)
        loops = pairs[:, 0] == pairs[:, 1]
        n_loops = int(loops.sum())
        pairs = pairs[~loops]
        keys = np.unique(pairs[:, 0] * max(n, 1) + pairs[:, 1])
        n_dupes = int(pairs.shape[0] - keys.size)
        src = keys // max(n, 1)
        dst = keys % max(n, 1)

        if report is not None:
            report.self_loops += n_loops
            report.deduped += n_dupes
        if n_loops:
            log.warning("dropped %d self-citation edge(s)", n_loops)

        year_arr = np.full(n, YEAR_MISSING, dtype=np.int32)
        for pid, y in years.items():
            if y is not None:
                year_arr[index[pid]] = int(y)
        field_list = [fields.get(pid) or None for pid in ids]

        out_indptr, out_indices = _csr(n, src, dst)
        in_indptr, in_indices = _csr(n, dst, src)
        return cls(ids, year_arr, field_list, out_indptr, out_indices, in_indptr, in_indices)

    @classmethod
    def from_arrays(cls, ids, src, dst, years=None, fields=None) -> "CitationGraph":
        """Build from dense index arrays; ``ids`` must already be sorted."""
        ids = list(ids)
        if any(a >= b for a, b in zip(ids, ids[1:])):
            raise ValueError("ids must be strictly increasing")
        n = len(ids)
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        keep = src != dst
        keys = np.unique(src[keep] * max(n, 1) + dst[keep])
        src, dst = keys // max(n, 1), keys % max(n, 1)
        if years is None:
            years = np.full(n, YEAR_MISSING, dtype=np.int32)
        if fields is None:
            fields = [None] * n
        out_indptr, out_indices = _csr(n, src, dst)
        in_indptr, in_indices = _csr(n, dst, src)
        return cls(ids, years, fields, out_indptr, out_indices, in_indptr, in_indices)

    # --- sizes and lookup -------------------------------------------------

    @property
    def node_count(self) -> int:
        return len(self.ids)

    @property
    def edge_count(self) -> int:
        return int(self.out_indices.size)

    def __contains__(self, pid) -> bool:
        return pid in self._index

    def __len__(self) -> int:
        return len(self.ids)

    def __repr__(self) -> str:
        return f"CitationGraph(nodes={self.node_count}, edges={self.edge_count})"

    def index_of(self, pid: str) -> int:
        try:
            return self._index[pid]
        except KeyError:
            raise PaperLookupError(pid) from None

    def year(self, pid: str) -> Optional[int]:
        y = int(self.years[self.index_of(pid)])
        return None if y == YEAR_MISSING else y

    def field_of(self, pid: str) -> Optional[str]:
        return self.fields[self.index_of(pid)]

    # --- adjacency --------------------------------------------------------

    def out_row(self, i: int) -> np.ndarray:
        return self.out_indices[self.out_indptr[i]:self.out_indptr[i + 1]]

    def in_row(self, i: int) -> np.ndarray:
        return self.in_indices[self.in_indptr[i]:self.in_indptr[i + 1]]

    def out_degrees(self) -> np.ndarray:
        return np.diff(self.out_indptr)

    def in_degrees(self) -> np.ndarray:
        return np.diff(self.in_indptr)

    def cited_references(self, pid: str) -> tuple[str, ...]:
        """Papers cited by ``pid`` in ascending order."""
        return tuple(self.ids[j] for j in self.out_row(self.index_of(pid)))

    def citing_papers(self, pid: str, window_end: Optional[int] = None) -> tuple[str, ...]:
        """Papers citing ``pid``.

        With ``window_end`` set, only citers with a known year <= window_end
        are kept; citers of unknown year are dropped and logged.
        """
        row = self.in_row(self.index_of(pid))
        if window_end is None:
            return tuple(self.ids[j] for j in row)
        y = self.years[row]
        unknown = int(np.count_nonzero(y == YEAR_MISSING))
        if unknown:
            log.warning("%s: %d citer(s) of unknown year excluded by the citation window", pid, unknown)
        keep = row[(y != YEAR_MISSING) & (y <= window_end)]
        return tuple(self.ids[j] for j in keep)

    def coupling_strength(self, focal: str, other: str) -> int:
        """Number of cited references shared by the two papers."""
        a = self.out_row(self.index_of(focal))
        b = self.out_row(self.index_of(other))
        return int(kernels.get_backend().merge_count(a, b))

    def edges(self) -> Iterable[tuple[str, str]]:
        src = np.repeat(np.arange(self.node_count), self.out_degrees())
        for u, v in zip(src.tolist(), self.out_indices.tolist()):
            yield self.ids[u], self.ids[v]

    def same_as(self, other: "CitationGraph") -> bool:
        return (
            self.ids == other.ids
            and self.fields == other.fields
            and np.array_equal(self.years, other.years)
            and np.array_equal(self.out_indptr, other.out_indptr)
            and np.array_equal(self.out_indices, other.out_indices)
            and np.array_equal(self.in_indptr, other.in_indptr)
            and np.array_equal(self.in_indices, other.in_indices)
        )

    # --- export -----------------------------------------------------------

    def write_nodes(self, stream: TextIO) -> None:
        stream.write("\t".join(NODES_HEADER) + "\n")
        for i, pid in enumerate(self.ids):
            y = int(self.years[i])
            ystr = "" if y == YEAR_MISSING else str(y)
            stream.write(f"{pid}\t{ystr}\t{self.fields[i] or ''}\n")

    def write_edges(self, stream: TextIO) -> None:
        stream.write("\t".join(EDGES_HEADER) + "\n")
        for u, v in self.edges():
            stream.write(f"{u}\t{v}\n")


# --- TSV ingestion --------------------------------------------------------


def _rows(stream: TextIO, header: Sequence[str], source: str):
    reader = csv.reader(stream, delimiter="\t", quoting=csv.QUOTE_NONE)
    first = next(reader, None)
    if first is None:
        raise ParseError("empty file, header row required", line=1, source=source)
    if tuple(c.strip() for c in first) != tuple(header):
        raise ParseError(
            f"bad header {first!r}, expected {'<TAB>'.join(header)}", line=1, source=source
        )
    for row in reader:
        line = reader.line_num
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(header):
            raise ParseError(
                f"expected {len(header)} tab-separated columns, got {len(row)}",
                line=line, source=source,
            )
        yield line, row


def read_nodes(stream: TextIO, report: IngestReport, source: str = "nodes"):
    years: dict[str, Optional[int]] = {}
    fields: dict[str, Optional[str]] = {}
    for line, (pid, ystr, fstr) in _rows(stream, NODES_HEADER, source):
        pid = pid.strip()
        if not pid:
            raise ParseError("empty paper_id", line=line, source=source)
        if pid in years:
            raise ParseError(f"duplicate paper_id {pid!r}", line=line, source=source)
        year = None
        ystr = ystr.strip()
        if ystr:
            try:
                year = int(ystr)
            except ValueError:
                report.bad_years += 1
                report.warnings.append(f"{source}:{line}: non-integer year {ystr!r} recorded as absent")
                log.warning("%s:%d: non-integer year %r recorded as absent", source, line, ystr)
        years[pid] = year
        fields[pid] = fstr.strip() or None
        report.node_rows += 1
    return years, fields


def read_edges(stream: TextIO, report: IngestReport, source: str = "edges"):
    edges = []
    for line, (u, v) in _rows(stream, EDGES_HEADER, source):
        u = u.strip()
        v = v.strip()
        if not u or not v:
            raise ParseError("empty paper id in edge", line=line, source=source)
        edges.append((u, v))
        report.edge_rows += 1
    return edges


def load_graph(nodes_source: TextIO, edges_source: TextIO) -> tuple[CitationGraph, IngestReport]:
    """Parse ``nodes.tsv`` and ``edges.tsv`` streams into a graph plus report."""
    report = IngestReport()
    years, fields = read_nodes(nodes_source, report, getattr(nodes_source, "name", "nodes"))
    edges = read_edges(edges_source, report, getattr(edges_source, "name", "edges"))
    missing = {pid for e in edges for pid in e} - set(years)
    report.added_nodes = len(missing)
    graph = CitationGraph.from_edges(edges, years=years, fields=fields, report=report)
    if report.self_loops:
        report.warnings.append(f"dropped {report.self_loops} self-citation edge(s)")
    return graph, report


def load_graph_files(nodes_path, edges_path) -> tuple[CitationGraph, IngestReport]:
    with open(nodes_path, encoding="utf-8", newline="") as nf, \
            open(edges_path, encoding="utf-8", newline="") as ef:
        return load_graph(nf, ef)


def graph_from_text(nodes_text: str, edges_text: str) -> tuple[CitationGraph, IngestReport]:
    return load_graph(io.StringIO(nodes_text), io.StringIO(edges_text))
