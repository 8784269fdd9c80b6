"""Split & merge: bisect large graphs, anonymize the parts, join them back up."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import networkx as nx
import numpy as np
from networkx.algorithms.community import kernighan_lin_bisection

from ..distributions import sample_distinct_weights
from ..errors import InvalidParameter
from ..graph import Edge, Graph, induced_subgraph, weakly_connected_components
from ..reasoner import RuleProgram
from .core import anonymize
from .params import STAGE_LABELS, STAGE_SPLIT, AnonymizationParams, AnonymizationResult, rng_for


def bisect_parts(g: Graph, max_component: int, seed: int) -> list[list[int]]:
    """Recursively halve weak components larger than ``max_component``."""
    parts: list[list[int]] = []
    stack = [sorted(c) for c in weakly_connected_components(g)]
    counter = 0
    while stack:
        comp = stack.pop()
        if len(comp) <= max_component:
            parts.append(comp)
            continue
        und = nx.Graph()
        und.add_nodes_from(comp)
        inside = set(comp)
        for e in g.edges:
            if e.src in inside and e.dst in inside and e.src != e.dst:
                if und.has_edge(e.src, e.dst):
                    und[e.src][e.dst]["weight"] += 1
                else:
                    und.add_edge(e.src, e.dst, weight=1)
        half_a, half_b = kernighan_lin_bisection(und, weight="weight", seed=seed + counter)
        counter += 1
        for half in (half_a, half_b):
            sub = induced_subgraph(g, half)
            stack.extend(sorted(c) for c in weakly_connected_components(sub))
    return sorted(parts, key=min)


def _run_part(args):
    g, sigma, params, algo = args
    return anonymize(g, sigma, params, algo)


def split_and_merge(g: Graph, sigma: RuleProgram, params: AnonymizationParams, algo: str,
                    max_component: int) -> AnonymizationResult:
    x = params.x or 1
    if max_component < x:
        raise InvalidParameter(f"max_component={max_component} is smaller than x={x}")
    parts = bisect_parts(g, max_component, params.seed)
    part_of = {v: i for i, p in enumerate(parts) for v in p}
    cut = [e for e in g.edges if part_of[e.src] != part_of[e.dst]]
    if not cut:
        return anonymize(g, sigma, params, algo)

    cut_ids = {e.id for e in cut}
    g_cut = Graph(g.vertices, [e for e in g.edges if e.id not in cut_ids], g.labels, weighted=g.weighted)
    seeds = rng_for(params.seed, STAGE_SPLIT).integers(0, 2**63 - 1, size=len(parts))
    jobs = [(induced_subgraph(g_cut, p), sigma, replace(params, seed=int(s)), algo)
            for p, s in zip(parts, seeds)]
    if params.workers > 1:
        with ProcessPoolExecutor(max_workers=params.workers) as pool:
            results = list(pool.map(_run_part, jobs))
    else:
        results = [_run_part(j) for j in jobs]

    next_vertex = max(g.vertices) + 1
    next_edge = max(e.id for e in g.edges) + 1
    vertices: list[int] = []
    edges: list[Edge] = []
    synthetic_vertices: set[int] = set()
    synthetic_edges: set[int] = set()
    minted_by_part: list[list[int]] = []
    members_by_part: list[list[int]] = []
    for res in results:
        vmap = {}
        for v in res.released.vertices:
            if v in res.identity_map:
                vmap[v] = v
            else:
                vmap[v] = next_vertex
                synthetic_vertices.add(next_vertex)
                next_vertex += 1
        vertices.extend(vmap.values())
        members_by_part.append(sorted(vmap.values()))
        minted_by_part.append(sorted(vmap[v] for v in res.synthetic_vertices))
        for e in res.released.edges:
            if e.id in res.edge_map:
                edges.append(Edge(e.id, vmap[e.src], vmap[e.dst], e.weight))
            else:
                edges.append(Edge(next_edge, vmap[e.src], vmap[e.dst], e.weight))
                synthetic_edges.add(next_edge)
                next_edge += 1

    # merge bridges between consecutive parts, preferring synthetic endpoints
    rng = rng_for(params.seed, STAGE_SPLIT, 1)
    bridge_ids = []
    for i in range(len(results) - 1):
        left = minted_by_part[i] or members_by_part[i]
        right = minted_by_part[i + 1] or members_by_part[i + 1]
        u = left[int(rng.integers(len(left)))]
        w = right[int(rng.integers(len(right)))]
        if rng.random() < 0.5:
            u, w = w, u
        edges.append(Edge(next_edge, u, w, 0.0 if g.weighted else None))
        bridge_ids.append(next_edge)
        synthetic_edges.add(next_edge)
        next_edge += 1
    if g.weighted and bridge_ids:
        resolved = params.resolved(g)
        ws = sample_distinct_weights(resolved.weight_dist, rng, np.full(len(bridge_ids), np.nan))
        wmap = dict(zip(bridge_ids, ws.tolist()))
        edges = [Edge(e.id, e.src, e.dst, wmap[e.id]) if e.id in wmap else e for e in edges]

    fresh = params.fresh_labels.take(len(vertices), g.label_universe)
    perm = rng_for(params.seed, STAGE_SPLIT, STAGE_LABELS).permutation(len(fresh))
    labels = {v: fresh[int(p)] for v, p in zip(sorted(vertices), perm)}
    released = Graph(vertices, edges, labels, weighted=g.weighted)
    return AnonymizationResult(
        released=released,
        identity_map={v: v for v in g.vertices},
        edge_map={e.id: e.id for e in g.edges if e.id not in cut_ids},
        synthetic_edges=frozenset(synthetic_edges),
        synthetic_vertices=frozenset(synthetic_vertices),
        augmentation_intact=False,
        info={
            "algorithm": algo,
            "split": True,
            "heuristic": True,
            "parts": [len(p) for p in parts],
            "cut_edges": len(cut),
            "merge_bridges": len(bridge_ids),
            "vertices_in": g.num_vertices,
            "vertices_out": released.num_vertices,
        },
        trace={"parts": parts, "part_results": results, "cut_edges": sorted(cut_ids)},
    )
