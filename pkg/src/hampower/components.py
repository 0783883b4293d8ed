"""Connected components of the friendship graph on dense cells."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

from .classification import CellClassification
from .geometry import CellGrid, ParamSet


class DisjointSet:
    """Union-find with path halving; the root of a set is its smallest member."""

    def __init__(self, items=()):
        self.parent = {x: x for x in items}

    def add(self, x) -> None:
        self.parent.setdefault(x, x)

    def find(self, x):
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        lo, hi = (ra, rb) if ra < rb else (rb, ra)
        self.parent[hi] = lo
        return lo


@dataclass(eq=False)
class ComponentGraph:
    """Dense cells joined when they are friends.

    Each component is labelled by its smallest cell id; ``components`` maps
    label to the sorted list of its cells.
    """

    vertices: frozenset
    adjacency: dict = field(repr=False)
    component_id: dict = field(repr=False)
    components: dict

    @property
    def n_components(self) -> int:
        return len(self.components)

    def max_degree(self) -> int:
        return max((len(v) for v in self.adjacency.values()), default=0)

    def component_of(self, cid: int) -> list:
        return self.components[self.component_id[cid]]


def build_gamma(classification: CellClassification, grid: CellGrid) -> ComponentGraph:
    dense = classification.dense
    adjacency = {c: [f for f in grid.friend_ids(c) if f in dense] for c in sorted(dense)}
    ds = DisjointSet(dense)
    for c, nbrs in adjacency.items():
        for f in nbrs:
            if f > c:
                ds.union(c, f)
    component_id = {c: ds.find(c) for c in adjacency}
    components: dict = {}
    for c in sorted(dense):
        components.setdefault(component_id[c], []).append(c)
    return ComponentGraph(vertices=frozenset(dense), adjacency=adjacency,
                          component_id=component_id, components=components)


@dataclass
class ComponentStats:
    components: int
    large: int
    small: int
    large_cutoff: float
    paper_bound: float

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def component_stats(gamma: ComponentGraph, params: ParamSet) -> ComponentStats:
    """Component counts split at ``1/(6s)`` cells, with the ``e^{-K/3} n`` bound."""
    cutoff = 1 / (6 * params.s)
    sizes = [len(c) for c in gamma.components.values()]
    large = sum(1 for s in sizes if s >= cutoff)
    return ComponentStats(components=len(sizes), large=large, small=len(sizes) - large,
                          large_cutoff=cutoff, paper_bound=math.exp(-params.K / 3) * params.n)
