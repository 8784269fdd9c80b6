"""Query-answer discrepancy between an original and a released graph."""

from __future__ import annotations

from typing import Mapping, Sequence

from .graph import Graph
from .reasoner import Query, RuleProgram, answer_queries


def _translate(answer, identity_map: Mapping[int, int] | None):
    """Express released-graph answers in original ids; unmapped vertices stay distinct."""
    if identity_map is None:
        return set(answer)
    back = {a: o for o, a in identity_map.items()}
    return {back.get(v, ("released", v)) for v in answer}


def loss_terms(answers_g: Sequence[frozenset], answers_a: Sequence) -> list[float]:
    out = []
    for qg, qa in zip(answers_g, answers_a):
        out.append(len(qg - qa) / len(qg) if qg else 0.0)
    return out


def sym_terms(answers_g: Sequence[frozenset], answers_a: Sequence) -> list[float]:
    out = []
    for qg, qa in zip(answers_g, answers_a):
        union = len(qg | qa)
        out.append(len(qg ^ qa) / union if union else 0.0)
    return out


def _mean(xs: list[float]) -> float:
    return sum(xs) / len(xs) if xs else 0.0


def utility_loss_graphs(
    g: Graph, sigma: RuleProgram, a: Graph, queries: Sequence[Query],
    identity_map: Mapping[int, int] | None = None,
) -> float:
    ag = answer_queries(g, sigma, queries)
    aa = [_translate(x, identity_map) for x in answer_queries(a, sigma, queries)]
    return _mean(loss_terms(ag, aa))


def utility_sym_graphs(
    g: Graph, sigma: RuleProgram, a: Graph, queries: Sequence[Query],
    identity_map: Mapping[int, int] | None = None,
) -> float:
    ag = answer_queries(g, sigma, queries)
    aa = [_translate(x, identity_map) for x in answer_queries(a, sigma, queries)]
    return _mean(sym_terms(ag, aa))


class SymScorer:
    """Scores candidate releases against answers on ``g`` computed once."""

    def __init__(self, g: Graph, sigma: RuleProgram, queries: Sequence[Query]):
        self.sigma = sigma
        self.queries = list(queries)
        self.answers_g = answer_queries(g, sigma, self.queries)

    def __call__(self, a: Graph) -> float:
        if not self.queries:
            return 0.0
        # original vertex ids are kept in the release, so answers compare directly
        return _mean(sym_terms(self.answers_g, answer_queries(a, self.sigma, self.queries)))
