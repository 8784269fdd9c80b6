"""Seeded random graphs for experiments."""

from __future__ import annotations

import enum
import math

import numpy as np

from .errors import InvalidParameter
from .graph import Edge, Graph


class WeightMode(enum.Enum):
    NONE = "none"
    UNIFORM = "uniform"
    ECONOMIC = "economic"


def _labels(n: int) -> dict[int, str]:
    return {i: f"n{i}" for i in range(n)}


def _rng(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & (2**64 - 1), tag])


def default_edge_count(n: int) -> int:
    """n ln(n) / 2 rounded up (231 edges at n = 100)."""
    return int(math.ceil(n * math.log(n) / 2)) if n > 1 else 0


def erdos_renyi_directed(n: int, m: int | None = None, seed: int = 0, self_loops: bool = True) -> Graph:
    """D(n, M): ``m`` distinct ordered pairs drawn uniformly; unweighted."""
    if n < 2:
        raise InvalidParameter(f"n must be >= 2, got {n}")
    slots = n * n if self_loops else n * (n - 1)
    if m is None:
        m = min(default_edge_count(n), slots)
    if m < 0 or m > slots:
        raise InvalidParameter(f"m={m} outside [0, {slots}]")
    picks = np.sort(_rng(seed, 1).choice(slots, size=m, replace=False))
    if self_loops:
        src, dst = picks // n, picks % n
    else:
        src = picks // (n - 1)
        rest = picks % (n - 1)
        dst = rest + (rest >= src)
    edges = [Edge(i, int(s), int(d), None) for i, (s, d) in enumerate(zip(src, dst))]
    return Graph(range(n), edges, _labels(n), weighted=False)


def power_law_pmf(n: int, alpha: float) -> np.ndarray:
    """P(d) proportional to d^-alpha on d = 1..n-1 (index 0 holds d = 1)."""
    d = np.arange(1, n, dtype=np.float64)
    p = d ** (-alpha)
    return p / p.sum()


def scale_free(n: int, alpha: float, seed: int = 0) -> Graph:
    """Out-degrees from the truncated power law, targets uniform among other vertices."""
    if n < 2:
        raise InvalidParameter(f"n must be >= 2, got {n}")
    if not alpha > 0:
        raise InvalidParameter(f"alpha must be positive, got {alpha}")
    rng = _rng(seed, 2)
    degs = rng.choice(np.arange(1, n), size=n, p=power_law_pmf(n, alpha))
    edges = []
    for v in range(n):
        others = np.delete(np.arange(n), v)
        for t in np.sort(rng.choice(others, size=int(degs[v]), replace=False)):
            edges.append(Edge(len(edges), v, int(t), None))
    return Graph(range(n), edges, _labels(n), weighted=False)


def assign_weights(g: Graph, mode: WeightMode | str, seed: int = 0) -> Graph:
    mode = WeightMode(mode)
    if mode is WeightMode.NONE:
        return Graph(g.vertices, [Edge(e.id, e.src, e.dst, None) for e in g.edges], g.labels, weighted=False)
    rng = _rng(seed, 3)
    w = rng.random(g.num_edges)
    if mode is WeightMode.ECONOMIC and g.num_edges:
        dst = g.arrays[1]
        ids = np.asarray(g.vertices)
        pos = np.searchsorted(ids, dst)
        insum = np.bincount(pos, weights=w, minlength=len(ids))
        # u in (0, 1]: 1 - U[0, 1)
        u = 1.0 - rng.random(len(ids))
        scale = np.where(insum > 1.0, u / np.where(insum > 0, insum, 1.0), 1.0)
        w = w * scale[pos]
        # rounding can leave a sum a hair above one; shave it off
        insum = np.bincount(pos, weights=w, minlength=len(ids))
        over = insum > 1.0
        if over.any():
            w = np.where(over[pos], w / insum[pos] * (1.0 - 1e-12), w)
    edges = [Edge(e.id, e.src, e.dst, float(x)) for e, x in zip(g.edges, w)]
    return Graph(g.vertices, edges, g.labels, weighted=True)
