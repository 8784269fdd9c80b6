"""Mutable graph used while an anonymizer grows the release."""

from __future__ import annotations

from typing import Iterable, Mapping

from ..graph import Edge, Graph


class WorkGraph:
    def __init__(self, g: Graph):
        self.weighted = g.weighted
        self.labels: dict[int, str] = dict(g.labels)
        self.vertices: list[int] = list(g.vertices)
        self.edges: dict[int, list] = {e.id: [e.src, e.dst, e.weight] for e in g.edges}
        self.next_vertex = (max(g.vertices) + 1) if g.vertices else 0
        self.next_edge = (max(self.edges) + 1) if self.edges else 0
        self.succ: dict[int, set[int]] = {v: set() for v in self.vertices}
        self.pred: dict[int, set[int]] = {v: set() for v in self.vertices}
        self.din: dict[int, int] = {v: 0 for v in self.vertices}
        self.dout: dict[int, int] = {v: 0 for v in self.vertices}
        for s, d, _ in self.edges.values():
            self._link(s, d)

    def _link(self, s: int, d: int) -> None:
        self.succ[s].add(d)
        self.pred[d].add(s)
        self.dout[s] += 1
        self.din[d] += 1

    def add_vertex(self, label: str | None = None) -> int:
        v = self.next_vertex
        self.next_vertex += 1
        self.vertices.append(v)
        self.labels[v] = label if label is not None else f"_tmp{v}"
        self.succ[v] = set()
        self.pred[v] = set()
        self.din[v] = 0
        self.dout[v] = 0
        return v

    def add_edge(self, s: int, d: int, weight: float | None = None) -> int:
        eid = self.next_edge
        self.next_edge += 1
        if self.weighted and weight is None:
            weight = 0.0  # placeholder until the final noising pass
        self.edges[eid] = [s, d, weight if self.weighted else None]
        self._link(s, d)
        return eid

    def in_degree(self, v: int) -> int:
        return self.din[v]

    def out_degree(self, v: int) -> int:
        return self.dout[v]

    def degree(self, v: int, direction: str) -> int:
        return self.din[v] if direction == "in" else self.dout[v]

    def neighbors(self, v: int, direction: str) -> set[int]:
        """In-neighbours for ``in``, out-neighbours for ``out``."""
        return self.pred[v] if direction == "in" else self.succ[v]

    def freeze(self, labels: Mapping[int, str] | None = None) -> Graph:
        edges = [Edge(eid, s, d, w) for eid, (s, d, w) in self.edges.items()]
        return Graph(self.vertices, edges, labels or self.labels, weighted=self.weighted)

    def set_weights(self, weights: Mapping[int, float]) -> None:
        for eid, w in weights.items():
            self.edges[eid][2] = float(w)

    def copy_edges(self, eids: Iterable[int], vertex_map: Mapping[int, int]) -> list[int]:
        """Duplicate edges onto mapped endpoints, keeping their weights."""
        out = []
        for eid in eids:
            s, d, w = self.edges[eid]
            out.append(self.add_edge(vertex_map[s], vertex_map[d], w))
        return out
