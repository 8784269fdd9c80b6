"""Fixpoint evaluation of the built-in rule programs and the query registry."""

from __future__ import annotations

import csv
import enum
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import InvalidParameter, IoError, QueryProgramMismatch, UnsupportedProgram
from .graph import Graph

CONTROL_THRESHOLD = 0.5

Pair = tuple[int, int]


class RuleProgram(enum.Enum):
    NONE = "none"
    REACHABILITY = "reach"
    CONTROL = "control"
    ULTIMATE = "ultimate"

    @classmethod
    def parse(cls, name: str) -> RuleProgram:
        key = name.strip().lower()
        aliases = {"reachability": "reach", "ultimate-controller": "ultimate", "ultimatecontroller": "ultimate"}
        key = aliases.get(key, key)
        for p in cls:
            if p.value == key:
                return p
        raise InvalidParameter(f"unknown rule program {name!r}")

    @property
    def needs_weights(self) -> bool:
        return self in (RuleProgram.CONTROL, RuleProgram.ULTIMATE)

    @property
    def code(self) -> int:
        # integer tag understood by the compiled kernels
        return _PROGRAM_CODES[self]


_PROGRAM_CODES = {
    RuleProgram.NONE: 0,
    RuleProgram.REACHABILITY: 1,
    RuleProgram.CONTROL: 2,
    RuleProgram.ULTIMATE: 3,
}


@dataclass(frozen=True)
class ReasonedGraph:
    ground: Graph
    program: RuleProgram
    derived: frozenset[Pair]


def _aggregate_out(g: Graph, positive_only: bool) -> dict[int, dict[int, float]]:
    """Per source, the summed weight towards each target, in edge-id order."""
    agg: dict[int, dict[int, float]] = {v: {} for v in g.vertices}
    for e in g.edges:
        w = 1.0 if e.weight is None else e.weight
        if positive_only and not w > 0.0:
            continue
        row = agg[e.src]
        row[e.dst] = row.get(e.dst, 0.0) + w
    return agg


def reach_closure(g: Graph) -> set[Pair]:
    """Pairs (x, y), x != y, joined by a directed path of positive-weight edges."""
    succ: dict[int, list[int]] = {v: [] for v in g.vertices}
    for e in g.edges:
        if e.weight is None or e.weight > 0.0:
            succ[e.src].append(e.dst)
    out: set[Pair] = set()
    for s in g.vertices:
        seen = {s}
        queue = deque(succ[s])
        while queue:
            u = queue.popleft()
            if u in seen:
                continue
            seen.add(u)
            queue.extend(succ[u])
        # s reaches itself only through a cycle, and reflexive pairs are dropped anyway
        out.update((s, t) for t in seen if t != s)
    return out


def _control_from(agg: dict[int, dict[int, float]], source: int) -> list[int]:
    """Controlled set of ``source`` (excluding itself), in order of discovery.

    Vertices join the set FIFO; when one step pushes several targets over the
    threshold they join in increasing id order.  The compiled kernel follows the
    same order so both produce identical sums.
    """
    controlled = {source}
    order = [source]
    acc: dict[int, float] = {}
    head = 0
    while head < len(order):
        y = order[head]
        head += 1
        fresh = []
        for z, w in agg[y].items():
            acc[z] = acc.get(z, 0.0) + w
            if z not in controlled and acc[z] > CONTROL_THRESHOLD:
                fresh.append(z)
        for z in sorted(set(fresh)):
            controlled.add(z)
            order.append(z)
    return order[1:]


def control_closure(g: Graph) -> set[Pair]:
    if not g.weighted:
        raise UnsupportedProgram("the control program needs edge weights")
    agg = _aggregate_out(g, positive_only=False)
    return {(s, z) for s in g.vertices for z in _control_from(agg, s)}


def ultimate_controller(g: Graph) -> set[Pair]:
    if not g.weighted:
        raise UnsupportedProgram("the ultimate-controller program needs edge weights")
    ctrl = control_closure(g)
    controlled = {y for _, y in ctrl}
    return {(x, y) for x, y in ctrl if x not in controlled}


def reason(g: Graph, sigma: RuleProgram) -> ReasonedGraph:
    if sigma is RuleProgram.NONE:
        derived: set[Pair] = set()
    elif sigma is RuleProgram.REACHABILITY:
        derived = reach_closure(g)
    elif sigma is RuleProgram.CONTROL:
        derived = control_closure(g)
    elif sigma is RuleProgram.ULTIMATE:
        derived = ultimate_controller(g)
    else:  # pragma: no cover
        raise InvalidParameter(f"unknown rule program {sigma!r}")
    return ReasonedGraph(g, sigma, frozenset(derived))


# --- queries --------------------------------------------------------------

class QueryKind(enum.Enum):
    TWO_OWNS = "two-owns"
    TWO_Q_OWNS = "two-q-owns"
    HOLDING = "holding"


@dataclass(frozen=True)
class Query:
    kind: QueryKind
    q: float = 0.0
    k: int = 1

    def __post_init__(self):
        if self.kind is QueryKind.TWO_Q_OWNS and not 0.0 <= self.q <= 1.0:
            raise InvalidParameter(f"q must lie in [0, 1], got {self.q}")
        if self.kind is QueryKind.HOLDING and self.k < 1:
            raise InvalidParameter(f"K must be >= 1, got {self.k}")

    @classmethod
    def two_owns(cls) -> Query:
        return cls(QueryKind.TWO_OWNS)

    @classmethod
    def two_q_owns(cls, q: float) -> Query:
        return cls(QueryKind.TWO_Q_OWNS, q=float(q))

    @classmethod
    def holding(cls, k: int) -> Query:
        return cls(QueryKind.HOLDING, k=int(k))

    @classmethod
    def parse(cls, text: str) -> Query:
        """Parse ``two-owns``, ``two-q-owns:<q>`` or ``holding:<K>``."""
        name, _, arg = text.strip().lower().partition(":")
        try:
            if name == "two-owns" and not arg:
                return cls.two_owns()
            if name == "two-q-owns":
                return cls.two_q_owns(float(arg) if arg else 0.0)
            if name == "holding" and arg:
                return cls.holding(int(arg))
        except ValueError:
            pass
        raise InvalidParameter(f"bad query spec {text!r}")

    def __str__(self) -> str:
        if self.kind is QueryKind.TWO_OWNS:
            return "two-owns"
        if self.kind is QueryKind.TWO_Q_OWNS:
            return f"two-q-owns:{self.q:g}"
        return f"holding:{self.k}"

    @property
    def needs_weights(self) -> bool:
        return self.kind is QueryKind.TWO_Q_OWNS


def _two_owns(g: Graph, threshold: float | None) -> frozenset[int]:
    # a vertex qualifies through at least two distinct targets other than itself
    src, dst, w = g.arrays
    keep = src != dst
    if threshold is not None:
        keep &= w > threshold
    if not keep.any():
        return frozenset()
    pairs = np.unique(np.stack([src[keep], dst[keep]], axis=1), axis=0)
    ids, counts = np.unique(pairs[:, 0], return_counts=True)
    return frozenset(int(v) for v in ids[counts >= 2])


def evaluate_query(rg: ReasonedGraph, q: Query) -> frozenset[int]:
    g = rg.ground
    if q.kind is QueryKind.TWO_OWNS:
        return _two_owns(g, None)
    if q.kind is QueryKind.TWO_Q_OWNS:
        if not g.weighted:
            raise UnsupportedProgram("two-q-owns needs edge weights")
        return _two_owns(g, q.q)
    if rg.program is not RuleProgram.CONTROL:
        raise QueryProgramMismatch(
            f"holding:{q.k} needs the control program, graph was reasoned with {rg.program.value!r}"
        )
    counts: dict[int, int] = {}
    for x, y in rg.derived:
        if x != y:
            counts[x] = counts.get(x, 0) + 1
    return frozenset(x for x, c in counts.items() if c >= q.k)


def answer_queries(g: Graph, sigma: RuleProgram, queries: Iterable[Query]) -> list[frozenset[int]]:
    """Answer every query, reasoning over ``g`` only when some query needs it."""
    queries = list(queries)
    rg = None
    out = []
    for q in queries:
        if q.kind is QueryKind.HOLDING:
            if rg is None:
                rg = reason(g, sigma)
            out.append(evaluate_query(rg, q))
        else:
            out.append(evaluate_query(ReasonedGraph(g, sigma, frozenset()), q))
    return out


# --- export ---------------------------------------------------------------

def write_derived_csv(rg: ReasonedGraph, path: str | Path) -> int:
    """Write ``src,dst,kind`` rows sorted by labels; returns the row count."""
    lab = rg.ground.labels
    rows = sorted((lab[u], lab[v]) for u, v in rg.derived)
    try:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["src", "dst", "kind"])
            for s, d in rows:
                w.writerow([s, d, rg.program.value])
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return len(rows)


def write_query_result(g: Graph, answer: Iterable[int], path: str | Path) -> None:
    names = sorted(g.labels[v] for v in answer)
    try:
        Path(path).write_text("".join(n + "\n" for n in names), encoding="utf-8")
    except OSError as exc:
        raise IoError(str(exc)) from exc
