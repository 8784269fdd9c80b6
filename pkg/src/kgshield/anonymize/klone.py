"""KLONE: k noised copies of the graph plus synthetic edges for degree diversity."""

from __future__ import annotations

import numpy as np

from ..distributions import DegreeDistribution
from ._work import WorkGraph
from .degrees import bump_until_free


class KloneBuilder:
    """Adds the copies, bridges and diversity edges for one component at a time.

    The processed set and the pool of minted vertices are shared by all
    components of one release.
    """

    def __init__(self, work: WorkGraph, k: int, p_in: DegreeDistribution, p_out: DegreeDistribution,
                 rng: np.random.Generator):
        self.work = work
        self.k = k
        self.dist = {"in": p_in, "out": p_out}
        self.rng = rng
        self.processed: set[int] = set()
        self.minted: list[int] = []
        self.base_edges: set[int] = set(work.edges)
        self.copy_tag: dict[int, tuple[int, int]] = {}
        self.bridges: list[int] = []

    def add_component(self, comp: list[int], comp_edges: list[int], index: int) -> None:
        work, rng, k = self.work, self.rng, self.k
        copies = [list(comp)]
        for v in comp:
            self.copy_tag[v] = (index, 1)
        for j in range(2, k + 1):
            vmap = {v: work.add_vertex() for v in comp}
            self.base_edges.update(work.copy_edges(comp_edges, vmap))
            copies.append([vmap[v] for v in comp])
            for v in copies[-1]:
                self.copy_tag[v] = (index, j)
        copy_sets = [set(c) for c in copies]

        for j in range(k - 1):
            u = copies[j][int(rng.integers(len(comp)))]
            w = copies[j + 1][int(rng.integers(len(comp)))]
            if rng.random() < 0.5:
                u, w = w, u
            self.bridges.append(work.add_edge(u, w))

        for i in range(len(comp)):
            first = copies[0][i]
            self.processed.add(first)
            chosen = {"in": [work.in_degree(first)], "out": [work.out_degree(first)]}
            for j in range(1, k):
                v = copies[j][i]
                for phi in ("in", "out"):
                    current = work.degree(v, phi)
                    target = bump_until_free(current, chosen[phi], self.dist[phi], rng)
                    chosen[phi].append(target)
                    self._connect(v, phi, target - current, copy_sets[j])
                self.processed.add(v)

    def _connect(self, v: int, phi: str, delta: int, own_copy: set[int]) -> None:
        if delta <= 0:
            return
        work = self.work
        nbrs = work.neighbors(v, phi)
        cands = [u for u in work.vertices
                 if u not in self.processed and u not in own_copy and u not in nbrs]
        while len(cands) < delta:
            u = work.add_vertex()
            self.minted.append(u)
            cands.append(u)
        picks = self.rng.choice(len(cands), size=delta, replace=False)
        for t in sorted(int(p) for p in picks):
            c = cands[t]
            if phi == "in":
                work.add_edge(c, v)
            else:
                work.add_edge(v, c)
