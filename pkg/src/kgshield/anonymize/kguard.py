"""KGUARD: reuse isomorphic subgraphs already present, clone only when short."""

from __future__ import annotations

from collections import defaultdict

import numpy as np

from ..distributions import DegreeDistribution
from ..graph import Graph, induced_subgraph, weakly_connected_components
from ..reasoner import RuleProgram
from ..subiso import BucketSet, bucket_graph
from ._work import WorkGraph
from .degrees import bump_until_free


class KguardBuilder:
    """Bucket selection and cloning per component, then one joint diversity pass.

    Every connected x-subset X of a component gets k-1 partners that are
    vertex-disjoint from X and from each other.  Partners come from a greedily
    chosen disjoint family of X's bucket; when that is short, X's image in a
    copy of the region G[U_j] fills the gap, where U_j collects every subset
    still needing j or more partners.  Vertices matched to each other through a partner map must end up
    with different in- and out-degrees; those constraints form cliques.
    """

    def __init__(self, work: WorkGraph, g_noised: Graph, sigma: RuleProgram, k: int, x: int,
                 p_in: DegreeDistribution, p_out: DegreeDistribution, rng: np.random.Generator):
        self.work = work
        self.g = g_noised
        self.sigma = sigma
        self.k = k
        self.x = x
        self.dist = {"in": p_in, "out": p_out}
        self.rng = rng
        self.base_edges: set[int] = set(work.edges)
        self.clone_vertices: list[int] = []
        self.minted: list[int] = []
        self.bridges: list[int] = []
        self.synthetic: list[int] = []
        # vertices that must never be joined to a given vertex
        self.excluded: dict[int, set[int]] = defaultdict(set)
        self.cliques: list[list[int]] = []
        self.partners: set[int] = set()
        # per bucket: its first member and that member's partners, position-aligned
        self.retained: list[list[tuple[int, ...]]] = []
        self.bucket_sets: list[BucketSet] = []
        self.targets: dict[str, dict[int, int]] = {"in": {}, "out": {}}

    # -- (b), (c): buckets, disjoint families, region clones ----------------

    def add_component(self, comp: list[int], sub: Graph) -> None:
        xc = min(self.x, len(comp))
        bs = bucket_graph(sub, xc, self.sigma)
        self.bucket_sets.append(bs)
        for row in bs.subsets.tolist():
            for v in row:
                self.excluded[v].update(row)

        # per member: partners from the bucket's disjoint family, and how many clones it still needs
        plans = []
        regions: list[set[int]] = [set() for _ in range(self.k - 1)]
        for mem in bs.members:
            family: list[tuple[int, ...]] = []
            used: set[int] = set()
            for t in mem:
                verts = bs.subsets[t].tolist()
                if used.isdisjoint(verts):
                    family.append(self._aligned(bs, int(t)))
                    used.update(verts)
            for t in mem:
                own = self._aligned(bs, int(t))
                own_set = set(own)
                chosen = [f for f in family if own_set.isdisjoint(f)][: self.k - 1]
                need = self.k - 1 - len(chosen)
                for j in range(need):
                    regions[j].update(own)
                plans.append((own, chosen, t == mem[0]))

        # one copy of G[U_j] serves every member needing at least j clones
        copies = [self._clone_region(sorted(r), sub, comp) for r in regions if r]
        for own, chosen, first in plans:
            # prefer images in the copies: they keep each vertex's conflict set small
            clones = []
            for vmap in copies:
                if all(v in vmap for v in own):
                    clones.append(tuple(vmap[v] for v in own))
                else:
                    break
            clones = clones[: self.k - 1]
            chosen = chosen[: self.k - 1 - len(clones)]
            for c in clones:
                for v in c:
                    self.excluded[v].update(c)
            partners = chosen + clones
            if first:
                self.retained.append([own] + partners)
            for r in partners:
                self.partners.update(r)
            for p in range(len(own)):
                self.cliques.append([own[p]] + [r[p] for r in partners])

    @staticmethod
    def _aligned(bs: BucketSet, t: int) -> tuple[int, ...]:
        """Member ``t``'s vertices listed by representative position."""
        out = [0] * bs.x
        for i, p in enumerate(bs.to_rep[t]):
            out[int(p)] = int(bs.subsets[t][i])
        return tuple(out)

    def _clone_region(self, region: list[int], sub: Graph, comp: list[int]) -> dict[int, int]:
        work = self.work
        vmap = {v: work.add_vertex() for v in region}
        inside = set(region)
        eids = [e.id for e in sub.edges if e.src in inside and e.dst in inside]
        self.base_edges.update(work.copy_edges(eids, vmap))
        self.clone_vertices.extend(vmap.values())
        # keep the release weakly connected: tie each piece of the copy to the source component
        for piece in weakly_connected_components(induced_subgraph(sub, region)):
            piece = sorted(piece)
            u = vmap[piece[int(self.rng.integers(len(piece)))]]
            w = comp[int(self.rng.integers(len(comp)))]
            if self.rng.random() < 0.5:
                u, w = w, u
            self.bridges.append(work.add_edge(u, w))
        return vmap

    # -- (d), (e): distinct degrees and synthetic edges ----------------------

    def finish(self) -> None:
        conflicts: dict[int, set[int]] = defaultdict(set)
        for clique in self.cliques:
            for v in clique:
                conflicts[v].update(clique)
        for v, s in conflicts.items():
            s.discard(v)
        prescribed = set(conflicts)
        # partner vertices go last so that only they absorb the collisions
        order = sorted(prescribed - self.partners) + sorted(prescribed & self.partners)
        for phi in ("in", "out"):
            target = self.targets[phi]
            for v in order:
                taken = {target[u] for u in conflicts[v] if u in target}
                target[v] = bump_until_free(self.work.degree(v, phi), taken, self.dist[phi], self.rng)

        work = self.work
        spare = {
            phi: {v for v in prescribed if self.targets[phi][v] > work.degree(v, phi)}
            for phi in ("in", "out")
        }
        for phi in ("in", "out"):
            other = "out" if phi == "in" else "in"
            # largest deficits first, while many partners still have spare demand
            for v in sorted(prescribed, key=lambda u: (work.degree(u, phi) - self.targets[phi][u], u)):
                delta = self.targets[phi][v] - work.degree(v, phi)
                if delta <= 0:
                    continue
                nbrs = work.neighbors(v, phi)
                excl = self.excluded.get(v, set())
                cands = sorted(u for u in spare[other]
                               if u != v and u not in excl and u not in nbrs)
                if len(cands) >= delta:
                    picks = [cands[int(i)] for i in sorted(self.rng.choice(len(cands), size=delta, replace=False))]
                else:
                    picks = list(cands)
                    fillers = [u for u in work.vertices
                               if u not in prescribed and u != v and u not in excl and u not in nbrs]
                    m = min(delta - len(picks), len(fillers))
                    if m:
                        idx = sorted(int(i) for i in self.rng.choice(len(fillers), size=m, replace=False))
                        picks.extend(fillers[i] for i in idx)
                    while len(picks) < delta:
                        u = work.add_vertex()
                        self.minted.append(u)
                        picks.append(u)
                for c in picks:
                    eid = work.add_edge(c, v) if phi == "in" else work.add_edge(v, c)
                    self.synthetic.append(eid)
                    if c in prescribed and self.targets[other][c] <= work.degree(c, other):
                        spare[other].discard(c)
                spare[phi].discard(v)
