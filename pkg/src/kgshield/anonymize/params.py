"""Parameters and results shared by the anonymizers."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

import numpy as np

from ..distributions import (
    DegreeDistribution,
    EmpiricalKde,
    Uniform01,
    WeightDistribution,
    fit_degree_distribution,
)
from ..errors import InvalidParameter
from ..graph import Graph
from ..reasoner import Query

# stream tags for seeded generators; every random step draws from its own stream
STAGE_BASE_NOISE = 1
STAGE_STRUCTURE = 2
STAGE_LABELS = 3
STAGE_FINAL_NOISE = 4
STAGE_SPLIT = 5


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & (2**64 - 1), *stream])


class FreshLabels:
    """Labels ``<prefix><i>`` that avoid a given set of taken labels."""

    def __init__(self, prefix: str = "v"):
        self.prefix = prefix

    def take(self, count: int, avoid: frozenset[str] | set[str]) -> list[str]:
        out = []
        i = 0
        while len(out) < count:
            lab = f"{self.prefix}{i}"
            if lab not in avoid:
                out.append(lab)
            i += 1
        return out


@dataclass
class AnonymizationParams:
    k: int
    x: int | None = None
    queries: Sequence[Query] = ()
    weight_dist: WeightDistribution | None = None
    in_degree_dist: DegreeDistribution | None = None
    out_degree_dist: DegreeDistribution | None = None
    fresh_labels: FreshLabels = field(default_factory=FreshLabels)
    m: int = 20
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.k < 2:
            raise InvalidParameter(f"k must be >= 2, got {self.k}")
        if self.x is not None and self.x < 1:
            raise InvalidParameter(f"x must be >= 1, got {self.x}")
        if self.m < 1:
            raise InvalidParameter(f"M must be >= 1, got {self.m}")
        self.queries = tuple(self.queries)

    def resolved(self, g: Graph) -> AnonymizationParams:
        """Fill unset distributions by fitting them to ``g``."""
        n = max(g.num_vertices, 1)
        wd = self.weight_dist
        if wd is None:
            ws = [e.weight for e in g.edges if e.weight is not None]
            wd = EmpiricalKde.fit(ws) if ws else Uniform01()
        pin = self.in_degree_dist or fit_degree_distribution([g.in_degree(v) for v in g.vertices], n)
        pout = self.out_degree_dist or fit_degree_distribution([g.out_degree(v) for v in g.vertices], n)
        return replace(self, weight_dist=wd, in_degree_dist=pin, out_degree_dist=pout)

    def describe(self) -> dict[str, Any]:
        return {
            "k": self.k,
            "x": self.x,
            "queries": [str(q) for q in self.queries],
            "M": self.m,
            "seed": self.seed,
            "weight_dist": repr_dist(self.weight_dist),
            "in_degree_dist": repr_dist(self.in_degree_dist),
            "out_degree_dist": repr_dist(self.out_degree_dist),
        }


def repr_dist(d) -> Any:
    if d is None:
        return "fitted"
    if isinstance(d, EmpiricalKde):
        return {"kind": "kde", "bandwidth": d.bandwidth, "samples": len(d.samples)}
    return repr(d)


@dataclass
class AnonymizationResult:
    """The released graph plus private bookkeeping that must never be published."""

    released: Graph
    identity_map: Mapping[int, int]
    edge_map: Mapping[int, int]
    synthetic_edges: frozenset[int]
    synthetic_vertices: frozenset[int]
    augmentation_intact: bool = True
    info: dict[str, Any] = field(default_factory=dict)
    vertex_tags: Mapping[int, Any] = field(default_factory=dict)
    trace: dict[str, Any] = field(default_factory=dict, repr=False)

    @classmethod
    def identity(cls, g: Graph) -> AnonymizationResult:
        return cls(
            released=g,
            identity_map={v: v for v in g.vertices},
            edge_map={e.id: e.id for e in g.edges},
            synthetic_edges=frozenset(),
            synthetic_vertices=frozenset(),
        )
