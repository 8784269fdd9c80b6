"""Weighted labeled directed multigraphs, induced subgraphs and edge-list I/O."""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .errors import InvalidVertex, IoError, ParseError, ValidationError


@dataclass(frozen=True, slots=True)
class Edge:
    id: int
    src: int
    dst: int
    weight: float | None = None


class SensitiveAttributes(NamedTuple):
    label: str
    in_degree: int
    out_degree: int


class Graph:
    """Immutable labeled directed multigraph with optional edge weights in [0, 1].

    Vertex ids are opaque integers; labels are strings and need not be unique.
    Parallel edges and self-loops are allowed.  ``weighted=False`` means every
    edge weight is ``None``.
    """

    def __init__(
        self,
        vertices: Iterable[int],
        edges: Iterable[Edge],
        labels: Mapping[int, str],
        *,
        weighted: bool = True,
    ):
        vs = tuple(sorted(set(vertices)))
        vset = frozenset(vs)
        es = tuple(sorted(edges, key=lambda e: e.id))
        seen: set[int] = set()
        for e in es:
            if e.id in seen:
                raise ValidationError(f"duplicate edge id {e.id}")
            seen.add(e.id)
            if e.src not in vset or e.dst not in vset:
                raise ValidationError(f"edge {e.id} has an endpoint outside the vertex set")
            if weighted:
                if e.weight is None or not (0.0 <= e.weight <= 1.0):
                    raise ValidationError(f"edge {e.id} weight {e.weight!r} outside [0, 1]")
            elif e.weight is not None:
                raise ValidationError(f"edge {e.id} carries a weight in an unweighted graph")
        missing = [v for v in vs if v not in labels]
        if missing:
            raise ValidationError(f"vertices without a label: {missing[:5]}")
        self._vertices = vs
        self._vset = vset
        self._edges = es
        self._labels = MappingProxyType({v: str(labels[v]) for v in vs})
        self._weighted = bool(weighted)

    @property
    def vertices(self) -> tuple[int, ...]:
        return self._vertices

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self._edges

    @property
    def labels(self) -> Mapping[int, str]:
        return self._labels

    @property
    def weighted(self) -> bool:
        return self._weighted

    @cached_property
    def label_universe(self) -> frozenset[str]:
        return frozenset(self._labels.values())

    @property
    def num_vertices(self) -> int:
        return len(self._vertices)

    @property
    def num_edges(self) -> int:
        return len(self._edges)

    def __contains__(self, v: object) -> bool:
        return v in self._vset

    def __len__(self) -> int:
        return len(self._vertices)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self._vertices == other._vertices
            and self._edges == other._edges
            and dict(self._labels) == dict(other._labels)
            and self._weighted == other._weighted
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        kind = "weighted" if self._weighted else "unweighted"
        return f"<Graph {kind} n={self.num_vertices} m={self.num_edges}>"

    def _check(self, v: int) -> None:
        if v not in self._vset:
            raise InvalidVertex(f"unknown vertex {v!r}")

    @cached_property
    def _edge_index(self) -> dict[int, Edge]:
        return {e.id: e for e in self._edges}

    def edge(self, eid: int) -> Edge:
        return self._edge_index[eid]

    def has_edge_id(self, eid: int) -> bool:
        return eid in self._edge_index

    @cached_property
    def _incidence(self) -> tuple[dict[int, list[Edge]], dict[int, list[Edge]]]:
        out: dict[int, list[Edge]] = {v: [] for v in self._vertices}
        inc: dict[int, list[Edge]] = {v: [] for v in self._vertices}
        for e in self._edges:
            out[e.src].append(e)
            inc[e.dst].append(e)
        return out, inc

    def out_edges(self, v: int) -> list[Edge]:
        self._check(v)
        return self._incidence[0][v]

    def in_edges(self, v: int) -> list[Edge]:
        self._check(v)
        return self._incidence[1][v]

    def in_degree(self, v: int) -> int:
        return len(self.in_edges(v))

    def out_degree(self, v: int) -> int:
        return len(self.out_edges(v))

    @cached_property
    def _undirected(self) -> dict[int, frozenset[int]]:
        nbrs: dict[int, set[int]] = {v: set() for v in self._vertices}
        for e in self._edges:
            if e.src != e.dst:
                nbrs[e.src].add(e.dst)
                nbrs[e.dst].add(e.src)
        return {v: frozenset(s) for v, s in nbrs.items()}

    def undirected_neighbors(self, v: int) -> frozenset[int]:
        self._check(v)
        return self._undirected[v]

    @cached_property
    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(src, dst, weight)`` arrays in edge-id order; weight is NaN when unweighted."""
        src = np.fromiter((e.src for e in self._edges), dtype=np.int64, count=len(self._edges))
        dst = np.fromiter((e.dst for e in self._edges), dtype=np.int64, count=len(self._edges))
        w = np.fromiter(
            (math.nan if e.weight is None else e.weight for e in self._edges),
            dtype=np.float64,
            count=len(self._edges),
        )
        return src, dst, w

    def with_weights(self, weights: Mapping[int, float]) -> Graph:
        """Copy of the graph with the weights of the given edge ids replaced."""
        edges = [
            Edge(e.id, e.src, e.dst, float(weights[e.id])) if e.id in weights else e
            for e in self._edges
        ]
        return Graph(self._vertices, edges, self._labels, weighted=self._weighted)

    def relabeled(self, labels: Mapping[int, str]) -> Graph:
        return Graph(self._vertices, self._edges, labels, weighted=self._weighted)

    @classmethod
    def from_edge_list(
        cls,
        edges: Iterable[tuple],
        vertices: Iterable = (),
    ) -> Graph:
        """Build a graph whose vertices are identified by their labels.

        ``edges`` holds ``(src, dst)`` or ``(src, dst, weight)`` tuples; ids are
        assigned in order of first appearance, extra ``vertices`` last.
        """
        ids: dict[str, int] = {}

        def vid(label) -> int:
            key = str(label)
            if key not in ids:
                ids[key] = len(ids)
            return ids[key]

        rows = [tuple(e) for e in edges]
        widths = {len(r) for r in rows}
        if len(widths) > 1:
            raise ValidationError("mixed weighted and unweighted edges")
        weighted = not rows or widths == {3}
        es = []
        for i, r in enumerate(rows):
            w = float(r[2]) if weighted else None
            es.append(Edge(i, vid(r[0]), vid(r[1]), w))
        for v in vertices:
            vid(v)
        labels = {i: lab for lab, i in ids.items()}
        return cls(labels.keys(), es, labels, weighted=weighted)


def induced_subgraph(g: Graph, x_set: Iterable[int]) -> Graph:
    xs = set(x_set)
    for v in xs:
        if v not in g:
            raise InvalidVertex(f"unknown vertex {v!r}")
    edges = [e for e in g.edges if e.src in xs and e.dst in xs]
    return Graph(xs, edges, {v: g.labels[v] for v in xs}, weighted=g.weighted)


def weakly_connected_components(g: Graph) -> list[set[int]]:
    """Vertex sets of the weak components, ordered by their smallest vertex id."""
    seen: set[int] = set()
    parts = []
    for start in g.vertices:
        if start in seen:
            continue
        comp = {start}
        seen.add(start)
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in g.undirected_neighbors(u):
                if w not in seen:
                    seen.add(w)
                    comp.add(w)
                    queue.append(w)
        parts.append(comp)
    return parts


def is_weakly_connected(g: Graph) -> bool:
    # empty graph counts as connected
    return len(weakly_connected_components(g)) <= 1


def degrees(g: Graph, v: int) -> tuple[int, int]:
    """``(in_degree, out_degree)`` counting parallel edges; a self-loop adds one to each."""
    return g.in_degree(v), g.out_degree(v)


def sensitive_attributes(g: Graph, v: int) -> SensitiveAttributes:
    d_in, d_out = degrees(g, v)
    return SensitiveAttributes(g.labels[v], d_in, d_out)


def is_diverse(a: SensitiveAttributes, b: SensitiveAttributes) -> bool:
    """True only when label, in-degree and out-degree all differ."""
    return a.label != b.label and a.in_degree != b.in_degree and a.out_degree != b.out_degree


# --- edge-list files ------------------------------------------------------

def nodes_file_for(path: str | Path) -> Path:
    p = Path(path)
    return p.with_name(p.stem + ".nodes.csv")


def _parse_weight(text: str, lineno: int) -> float:
    try:
        w = float(text)
    except ValueError:
        raise ParseError(f"weight {text!r} is not a number", lineno) from None
    if math.isnan(w):
        raise ParseError("weight is NaN", lineno)
    if not 0.0 <= w <= 1.0:
        raise ValidationError(f"line {lineno}: weight {w} outside [0, 1]")
    return w


def load_graph(path: str | Path, nodes_path: str | Path | None = None) -> Graph:
    """Read an edge CSV (``src,dst[,weight]``, header optional).

    Endpoint strings are vertex labels.  Isolated vertices come from an
    optional ``id,label`` node file, by default the ``<stem>.nodes.csv``
    sibling written by :func:`save_graph`.
    """
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise IoError(str(exc)) from exc
    ids: dict[str, int] = {}
    labels: dict[int, str] = {}
    edges: list[Edge] = []
    width = None
    with fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            row = [c.strip() for c in row]
            if lineno == 1 and row[:2] == ["src", "dst"]:
                if row[2:] not in ([], ["weight"]):
                    raise ParseError(f"unexpected header {row}", lineno)
                width = len(row)
                continue
            if len(row) not in (2, 3):
                raise ParseError(f"expected 2 or 3 fields, got {len(row)}", lineno)
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(f"expected {width} fields, got {len(row)}", lineno)
            if not row[0] or not row[1]:
                raise ParseError("empty vertex label", lineno)
            ends = []
            for lab in row[:2]:
                if lab not in ids:
                    ids[lab] = len(ids)
                    labels[ids[lab]] = lab
                ends.append(ids[lab])
            w = _parse_weight(row[2], lineno) if len(row) == 3 else None
            edges.append(Edge(len(edges), ends[0], ends[1], w))

    if nodes_path is None and nodes_file_for(path).exists():
        nodes_path = nodes_file_for(path)
    if nodes_path is not None:
        try:
            nfh = Path(nodes_path).open(newline="", encoding="utf-8")
        except OSError as exc:
            raise IoError(str(exc)) from exc
        with nfh:
            for lineno, row in enumerate(csv.reader(nfh), start=1):
                if not row:
                    continue
                row = [c.strip() for c in row]
                if lineno == 1 and row == ["id", "label"]:
                    continue
                if len(row) != 2:
                    raise ParseError(f"node file: expected 2 fields, got {len(row)}", lineno)
                lab = row[1]
                if lab in ids:
                    continue
                # duplicate labels among isolated vertices stay distinct vertices
                vid = len(labels)
                labels[vid] = lab
                ids.setdefault(lab, vid)
    weighted = width != 2 if width is not None else True
    return Graph(labels.keys(), edges, labels, weighted=weighted)


def canonical_edges(g: Graph) -> list[Edge]:
    """Edges in release order: by (src label, dst label, weight, id)."""
    lab = g.labels
    if g.weighted:
        return sorted(g.edges, key=lambda e: (lab[e.src], lab[e.dst], e.weight, e.id))
    return sorted(g.edges, key=lambda e: (lab[e.src], lab[e.dst], e.id))


def save_graph(g: Graph, path: str | Path) -> list[Edge]:
    """Write ``g`` canonically and return the edges in the order written."""
    path = Path(path)
    order = canonical_edges(g)
    lab = g.labels
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["src", "dst", "weight"] if g.weighted else ["src", "dst"])
            for e in order:
                row = [lab[e.src], lab[e.dst]]
                if g.weighted:
                    row.append(repr(float(e.weight)))
                w.writerow(row)
        isolated = sorted(
            (lab[v] for v in g.vertices if not g.out_edges(v) and not g.in_edges(v))
        )
        npath = nodes_file_for(path)
        if isolated:
            with npath.open("w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["id", "label"])
                for i, name in enumerate(isolated):
                    w.writerow([i, name])
        elif npath.exists():
            npath.unlink()
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return order
