"""Best-of-M weight resampling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from ..distributions import WeightDistribution, sample_distinct_weights
from ..errors import InvalidParameter
from ..graph import Graph
from ..reasoner import Query, RuleProgram
from ..utility import SymScorer
from .params import rng_for


@dataclass
class NoisingOutcome:
    graph: Graph
    scores: list[float]
    best: int


def noising_candidates(
    a: Graph, g: Graph, edge_subset: Iterable[int], p_w: WeightDistribution, m: int,
    seed: int, stream: Sequence[int] = (),
) -> Iterator[dict[int, float]]:
    """The ``m`` weight assignments tried by :func:`weight_noising`, in trial order.

    Trial ``i`` draws from its own generator, so the sequence can be replayed.
    Edges that exist in ``g`` always move away from their weight in ``g``.
    """
    eids = sorted(set(edge_subset))
    for eid in eids:
        if not a.has_edge_id(eid):
            raise InvalidParameter(f"edge {eid} is not part of the graph")
    anchors = np.asarray(
        [g.edge(e).weight if g.has_edge_id(e) and g.edge(e).weight is not None else np.nan for e in eids],
        dtype=np.float64,
    )
    for i in range(m):
        w = sample_distinct_weights(p_w, rng_for(seed, *stream, i), anchors)
        yield dict(zip(eids, w.tolist()))


def weight_noising_trials(
    a: Graph, g: Graph, sigma: RuleProgram, edge_subset: Iterable[int], queries: Sequence[Query],
    p_w: WeightDistribution, m: int, seed: int, stream: Sequence[int] = (),
    scorer: SymScorer | None = None,
) -> NoisingOutcome:
    if m < 1:
        raise InvalidParameter(f"M must be >= 1, got {m}")
    scorer = scorer or SymScorer(g, sigma, queries)
    edge_subset = sorted(set(edge_subset))
    if not a.weighted or not edge_subset:
        return NoisingOutcome(a, [scorer(a)], 0)
    best_graph, best_score, best_i = None, None, -1
    scores = []
    for i, weights in enumerate(noising_candidates(a, g, edge_subset, p_w, m, seed, stream)):
        cand = a.with_weights(weights)
        s = scorer(cand)
        scores.append(s)
        if best_score is None or s < best_score:
            best_graph, best_score, best_i = cand, s, i
    return NoisingOutcome(best_graph, scores, best_i)


def weight_noising(
    a: Graph, g: Graph, sigma: RuleProgram, edge_subset: Iterable[int], queries: Sequence[Query],
    p_w: WeightDistribution, m: int, seed: int, stream: Sequence[int] = (),
) -> Graph:
    """Resample the weights of ``edge_subset`` ``m`` times and keep the candidate
    with the lowest symmetric utility loss; ties go to the earliest trial."""
    return weight_noising_trials(a, g, sigma, edge_subset, queries, p_w, m, seed, stream).graph
