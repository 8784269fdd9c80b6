"""Distinct degree assignment by collision resampling."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..distributions import DegreeDistribution
from ..errors import InvalidParameter
from .params import rng_for


def bump_until_free(start: int, taken, p: DegreeDistribution, rng: np.random.Generator) -> int:
    """Raise ``start`` by ``d <- max(d + 1, draw)`` until it avoids ``taken``."""
    d = start
    while d in taken:
        d = max(d + 1, p.draw(rng))
    return d


def choose_deg(a, direction: str, p: DegreeDistribution, vertices: Sequence[int], seed) -> list[int]:
    """Pairwise distinct target degrees, each at least the vertex's current degree.

    ``a`` is anything with ``in_degree``/``out_degree``; ``seed`` is an int or a
    ``numpy.random.Generator``.
    """
    if direction not in ("in", "out"):
        raise InvalidParameter(f"direction must be 'in' or 'out', got {direction!r}")
    if not vertices:
        raise InvalidParameter("choose_deg needs at least one vertex")
    rng = seed if isinstance(seed, np.random.Generator) else rng_for(seed)
    deg = a.in_degree if direction == "in" else a.out_degree
    out: list[int] = []
    taken: set[int] = set()
    for v in vertices:
        d = bump_until_free(deg(v), taken, p, rng)
        out.append(d)
        taken.add(d)
    return out
