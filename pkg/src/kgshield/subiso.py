"""Connected induced subgraphs, two-layer isomorphism and isomorphism buckets.

Subgraphs are reasoned in isolation: the derived layer of a handle on X is the
rule program applied to G[X], not the global derived edges restricted to X.
Both layers are packed into one integer matrix per subgraph,
``code[i, j] = 2 * ground_multiplicity(i, j) + derived(i, j)``, over the
vertices of X in ascending id order.  Two subgraphs are isomorphic exactly when
some permutation maps one code matrix onto the other.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import InvalidParameter, InvalidVertex, UnsupportedProgram
from .graph import Graph, induced_subgraph
from .reasoner import ReasonedGraph, RuleProgram, reason

_PAIR_SHIFT = np.uint64(1 << 21)
_HASH_MUL = np.uint64(0x9E3779B97F4A7C15)


class GraphIndex:
    """Array views of a graph used by the kernels; positions follow ``g.vertices``."""

    def __init__(self, g: Graph):
        self.graph = g
        self.ids = np.asarray(g.vertices, dtype=np.int64)
        n = len(self.ids)
        self.n = n
        src, dst, w = g.arrays
        s = np.searchsorted(self.ids, src)
        d = np.searchsorted(self.ids, dst)
        # undirected simple projection for weak connectivity
        keep = s != d
        und = np.unique(np.concatenate([s[keep] * n + d[keep], d[keep] * n + s[keep]]))
        self.und_indptr = np.searchsorted(und // max(n, 1), np.arange(n + 1)).astype(np.int64)
        self.und_indices = (und % max(n, 1)).astype(np.int64)
        # ordered pairs with multiplicity, summed weight and a positive-weight flag
        key = s * n + d
        pairs, inv, mult = np.unique(key, return_inverse=True, return_counts=True)
        wsum = np.zeros(len(pairs), dtype=np.float64)
        weights = np.nan_to_num(w, nan=1.0) if not g.weighted else w
        np.add.at(wsum, inv, weights)  # sequential in edge-id order
        pos = np.zeros(len(pairs), dtype=bool)
        np.logical_or.at(pos, inv, weights > 0.0)
        self.out_indptr = np.searchsorted(pairs // max(n, 1), np.arange(n + 1)).astype(np.int64)
        self.out_indices = (pairs % max(n, 1)).astype(np.int64)
        self.out_mult = mult.astype(np.int64)
        self.out_wsum = wsum
        self.out_pos = pos

    def positions(self, vertices: Iterable[int]) -> np.ndarray:
        vs = np.asarray(sorted(vertices), dtype=np.int64)
        pos = np.searchsorted(self.ids, vs)
        if len(vs) and (np.any(pos >= self.n) or np.any(self.ids[np.minimum(pos, self.n - 1)] != vs)):
            raise InvalidVertex("vertex set contains unknown vertices")
        return pos

    def connected_positions(self, x: int) -> np.ndarray:
        """Sorted position rows of every connected x-subset, in lexicographic order."""
        rows = kernels.connected_subsets(self.und_indptr, self.und_indices, x)
        rows = np.sort(rows, axis=1)
        if len(rows):
            rows = rows[np.lexsort(rows.T[::-1])]
        return rows

    def codes(self, positions: np.ndarray, program: RuleProgram) -> np.ndarray:
        if positions.shape[0] == 0:
            return np.zeros((0, positions.shape[1], positions.shape[1]), dtype=np.int32)
        return np.asarray(
            kernels.local_layers(
                positions,
                self.out_indptr,
                self.out_indices,
                self.out_mult,
                self.out_wsum,
                self.out_pos,
                program.code,
            ),
            dtype=np.int32,
        )


def _check_program(g: Graph, program: RuleProgram) -> None:
    if program.needs_weights and not g.weighted:
        raise UnsupportedProgram(f"the {program.value} program needs edge weights")


def vertex_keys(codes: np.ndarray) -> np.ndarray:
    """Permutation-invariant hash of each vertex's row and column in its code matrix."""
    n_sub, x, _ = codes.shape
    if n_sub == 0 or x == 0:
        return np.zeros((n_sub, x), dtype=np.int64)
    c = codes.astype(np.uint64)
    pair = c * _PAIR_SHIFT + np.swapaxes(c, 1, 2)
    off = ~np.eye(x, dtype=bool)
    rows = np.sort(pair[:, off].reshape(n_sub, x, x - 1), axis=2)
    diag = np.diagonal(c, axis1=1, axis2=2)
    h = diag * _HASH_MUL + np.uint64(x)
    with np.errstate(over="ignore"):
        for t in range(x - 1):
            h = (h ^ rows[:, :, t]) * _HASH_MUL + np.uint64(t + 1)
            h ^= h >> np.uint64(29)
    return h.view(np.int64)


def signature_groups(vkeys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Group subsets by their sorted vertex keys.

    Returns ``(order, group_ptr)``: members of group ``g`` are
    ``order[group_ptr[g]:group_ptr[g+1]]``, ascending.
    """
    n_sub = vkeys.shape[0]
    if n_sub == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(1, dtype=np.int64)
    sig = np.sort(vkeys, axis=1)
    _, inv = np.unique(sig, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    order = np.argsort(inv, kind="stable").astype(np.int64)
    counts = np.bincount(inv)
    group_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return order, group_ptr


@dataclass(frozen=True)
class IsoMap:
    mapping: Mapping[int, int]

    def __getitem__(self, v: int) -> int:
        return self.mapping[v]

    def inverse(self) -> IsoMap:
        return IsoMap({b: a for a, b in self.mapping.items()})

    def compose(self, other: IsoMap) -> IsoMap:
        """``other`` after ``self``."""
        return IsoMap({a: other.mapping[b] for a, b in self.mapping.items()})


@dataclass(eq=False)
class SubgraphHandle:
    """A connected x-subset of a graph with its locally reasoned layers."""

    graph: Graph
    program: RuleProgram
    vertices: tuple[int, ...]
    codes: np.ndarray = field(repr=False)

    @property
    def vertex_set(self) -> frozenset[int]:
        return frozenset(self.vertices)

    @property
    def size(self) -> int:
        return len(self.vertices)

    @cached_property
    def reasoned(self) -> ReasonedGraph:
        return reason(induced_subgraph(self.graph, self.vertices), self.program)

    @cached_property
    def vkeys(self) -> np.ndarray:
        return vertex_keys(self.codes[None])[0]


def make_handle(g: Graph, x_set: Iterable[int], program: RuleProgram, index: GraphIndex | None = None) -> SubgraphHandle:
    _check_program(g, program)
    idx = index or GraphIndex(g)
    pos = idx.positions(x_set)
    codes = idx.codes(pos[None], program)[0]
    return SubgraphHandle(g, program, tuple(int(v) for v in idx.ids[pos]), codes)


def reasoned_codes(rg: ReasonedGraph) -> tuple[tuple[int, ...], np.ndarray]:
    """Code matrix of a whole reasoned graph, vertices in ascending id order."""
    vs = rg.ground.vertices
    at = {v: i for i, v in enumerate(vs)}
    x = len(vs)
    codes = np.zeros((x, x), dtype=np.int32)
    for e in rg.ground.edges:
        codes[at[e.src], at[e.dst]] += 2
    for u, v in rg.derived:
        if u != v:
            codes[at[u], at[v]] += 1
    return vs, codes


def _operand(obj) -> tuple[tuple[int, ...], np.ndarray]:
    if isinstance(obj, SubgraphHandle):
        return obj.vertices, obj.codes
    if isinstance(obj, ReasonedGraph):
        return reasoned_codes(obj)
    raise TypeError(f"expected SubgraphHandle or ReasonedGraph, got {type(obj).__name__}")


def code_isomorphisms(a: np.ndarray, b: np.ndarray, first_only: bool = False) -> np.ndarray:
    """Position permutations ``p`` with ``a[i, j] == b[p[i], p[j]]``."""
    va = vertex_keys(a[None])[0]
    vb = vertex_keys(b[None])[0]
    if not np.array_equal(np.sort(va), np.sort(vb)):
        return np.zeros((0, a.shape[0]), dtype=np.int64)
    if first_only:
        # a two-member group: b becomes the representative, a is matched onto it
        both = np.stack([b, a]).astype(np.int32)
        rep, perm = kernels.bucketize(
            both, np.stack([vb, va]), np.asarray([0, 1], dtype=np.int64), np.asarray([0, 2], dtype=np.int64)
        )
        if rep[1] != 0:
            return np.zeros((0, a.shape[0]), dtype=np.int64)
        return perm[1:2]
    return np.asarray(kernels.all_matches(a, b, va, vb), dtype=np.int64)


def kg_isomorphic(a, b) -> IsoMap | None:
    """A bijection preserving ground and derived multiplicities, or ``None``."""
    va, ca = _operand(a)
    vb, cb = _operand(b)
    if len(va) != len(vb):
        return None
    if len(va) == 0:
        return IsoMap({})
    perms = code_isomorphisms(ca, cb, first_only=True)
    if len(perms) == 0:
        return None
    return IsoMap({va[i]: vb[int(j)] for i, j in enumerate(perms[0])})


def kg_isomorphisms(a, b) -> list[IsoMap]:
    va, ca = _operand(a)
    vb, cb = _operand(b)
    if len(va) != len(vb):
        return []
    if len(va) == 0:
        return [IsoMap({})]
    return [IsoMap({va[i]: vb[int(j)] for i, j in enumerate(p)}) for p in code_isomorphisms(ca, cb)]


def verify_iso_map(a, b, phi: IsoMap) -> bool:
    """Check the ground and derived multiplicity conditions directly."""
    va, ca = _operand(a)
    vb, cb = _operand(b)
    if len(va) != len(vb) or set(phi.mapping) != set(va) or set(phi.mapping.values()) != set(vb):
        return False
    at_b = {v: i for i, v in enumerate(vb)}
    p = [at_b[phi.mapping[v]] for v in va]
    return bool(np.array_equal(ca, cb[np.ix_(p, p)]))


# --- enumeration ----------------------------------------------------------

def connected_subset_array(g: Graph, x: int, index: GraphIndex | None = None) -> np.ndarray:
    """(N, x) array of vertex ids, one sorted connected x-subset per row."""
    if not 1 <= x <= g.num_vertices:
        raise InvalidParameter(f"x must lie in [1, {g.num_vertices}], got {x}")
    idx = index or GraphIndex(g)
    return idx.ids[idx.connected_positions(x)]


def enumerate_connected_induced_subgraphs(g: Graph, x: int) -> list[frozenset[int]]:
    return [frozenset(int(v) for v in row) for row in connected_subset_array(g, x)]


def iter_connected_induced_subgraphs(
    g: Graph, x: int, consumer: Callable[[tuple[int, ...]], None] | None = None
) -> Iterator[tuple[int, ...]] | None:
    """Stream the subsets as sorted tuples, or feed them to ``consumer``."""
    rows = connected_subset_array(g, x)

    def gen():
        for row in rows:
            yield tuple(int(v) for v in row)

    if consumer is None:
        return gen()
    for t in gen():
        consumer(t)
    return None


# --- bucketing ------------------------------------------------------------

class BucketSet:
    """Isomorphism classes of equal-size subgraphs.

    Every member stores a position map onto its class representative, so a
    map between any two members of a class is a composition of two stored maps.
    """

    def __init__(self, graph: Graph | None, program: RuleProgram, subsets: np.ndarray,
                 codes: np.ndarray, bucket_of: np.ndarray, to_rep: np.ndarray,
                 handles: Sequence[SubgraphHandle] | None = None):
        self.graph = graph
        self.program = program
        self.subsets = subsets
        self.codes = codes
        self.bucket_of = bucket_of
        self.to_rep = to_rep
        self._handles = list(handles) if handles is not None else None
        n_b = int(bucket_of.max()) + 1 if len(bucket_of) else 0
        order = np.argsort(bucket_of, kind="stable")
        bounds = np.searchsorted(bucket_of[order], np.arange(n_b + 1))
        self.members: list[np.ndarray] = [order[bounds[b]:bounds[b + 1]] for b in range(n_b)]

    @property
    def x(self) -> int:
        return self.subsets.shape[1] if self.subsets.ndim == 2 else 0

    def __len__(self) -> int:
        return len(self.members)

    def handle(self, t: int) -> SubgraphHandle:
        if self._handles is not None:
            return self._handles[t]
        return SubgraphHandle(self.graph, self.program, tuple(int(v) for v in self.subsets[t]), self.codes[t])

    @property
    def buckets(self) -> list[list[SubgraphHandle]]:
        return [[self.handle(int(t)) for t in mem] for mem in self.members]

    def map_between(self, s: int, t: int) -> IsoMap:
        """Witnessed map from member ``s`` to member ``t`` of the same bucket."""
        if self.bucket_of[s] != self.bucket_of[t]:
            raise InvalidParameter("subgraphs lie in different buckets")
        inv_t = np.empty(self.x, dtype=np.int64)
        inv_t[self.to_rep[t]] = np.arange(self.x)
        return IsoMap({int(self.subsets[s][i]): int(self.subsets[t][inv_t[self.to_rep[s][i]]])
                       for i in range(self.x)})

    @property
    def iso_maps(self) -> dict[tuple[int, int], IsoMap]:
        """Map from each member to its representative, keyed by (member, rep)."""
        out = {}
        for mem in self.members:
            r = int(mem[0])
            for t in mem:
                out[(int(t), r)] = self.map_between(int(t), r)
        return out

    def stats(self) -> dict:
        sizes = [len(m) for m in self.members]
        hist: dict[int, int] = {}
        for s in sizes:
            hist[s] = hist.get(s, 0) + 1
        return {"subgraphs": int(len(self.subsets)), "buckets": len(sizes),
                "size_histogram": {str(k): v for k, v in sorted(hist.items())}}


def _bucketize_codes(codes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n_sub = codes.shape[0]
    if n_sub == 0:
        return np.zeros(0, dtype=np.int64), np.zeros((0, codes.shape[1] if codes.ndim == 3 else 0), dtype=np.int64)
    vk = vertex_keys(codes)
    order, ptr = signature_groups(vk)
    rep, perm = kernels.bucketize(np.ascontiguousarray(codes, dtype=np.int32), vk, order, ptr)
    rep = np.asarray(rep)
    # number classes by their representative, i.e. their smallest member
    reps = np.unique(rep)
    bucket_of = np.searchsorted(reps, rep).astype(np.int64)
    return bucket_of, np.asarray(perm, dtype=np.int64)


def isomorphism_bucketing(subgraphs: Sequence[SubgraphHandle]) -> BucketSet:
    subgraphs = list(subgraphs)
    if not subgraphs:
        return BucketSet(None, RuleProgram.NONE, np.zeros((0, 0), dtype=np.int64),
                         np.zeros((0, 0, 0), dtype=np.int32), np.zeros(0, dtype=np.int64),
                         np.zeros((0, 0), dtype=np.int64), [])
    sizes = {h.size for h in subgraphs}
    if len(sizes) != 1:
        raise InvalidParameter("all subgraphs must have the same size")
    codes = np.stack([h.codes for h in subgraphs]).astype(np.int32)
    subsets = np.asarray([h.vertices for h in subgraphs], dtype=np.int64)
    bucket_of, to_rep = _bucketize_codes(codes)
    return BucketSet(subgraphs[0].graph, subgraphs[0].program, subsets, codes, bucket_of, to_rep, subgraphs)


def bucket_graph(g: Graph, x: int, program: RuleProgram, index: GraphIndex | None = None) -> BucketSet:
    """Enumerate, locally reason and bucket every connected x-subset of ``g``."""
    _check_program(g, program)
    idx = index or GraphIndex(g)
    if not 1 <= x <= g.num_vertices:
        raise InvalidParameter(f"x must lie in [1, {g.num_vertices}], got {x}")
    pos = idx.connected_positions(x)
    codes = idx.codes(pos, program)
    bucket_of, to_rep = _bucketize_codes(codes)
    return BucketSet(g, program, idx.ids[pos] if len(pos) else np.zeros((0, x), dtype=np.int64),
                     codes, bucket_of, to_rep)


def isomorphism_partitioning(vertex_pool: Iterable[int], bucket_set: BucketSet) -> list[set[int]]:
    """Classes of the equivalence closure of the stored maps, restricted to the pool."""
    pool = sorted(set(vertex_pool))
    parent: dict = {v: v for v in pool}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb, key=_uf_key)] = min(ra, rb, key=_uf_key)

    for b, mem in enumerate(bucket_set.members):
        for t in mem:
            for i, v in enumerate(bucket_set.subsets[t]):
                v = int(v)
                if v not in parent:
                    continue
                node = ("rep", b, int(bucket_set.to_rep[t][i]))
                parent.setdefault(node, node)
                union(v, node)
    classes: dict = {}
    for v in pool:
        classes.setdefault(find(v), set()).add(v)
    return sorted(classes.values(), key=min)


def _uf_key(node):
    # real vertices sort before the virtual representative-position nodes
    return (1, node) if isinstance(node, tuple) else (0, (node,))
