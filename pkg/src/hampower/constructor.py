"""Building the k-th power of a Hamilton cycle in ``H ∪ G``.

The run has four phases:

1. every vertex of a sparse cell gets an *absorber*: ``2k`` of its
   H-neighbours inside one unused dense cell, later split around it;
2. components of the dense-cell friendship graph are joined into a tree by
   *connectors*: pairs of ``2k``-sets in two cells spanning a complete
   bipartite graph of H;
3. inside each component a doubled depth-first walk over a spanning tree of
   its cells produces a cycle whose k-th power lies in G, with every
   reserved ``2k``-set laid out as two consecutive halves;
4. absorbed vertices are dropped between their halves and the component
   cycles are spliced together at the connector halves.

Every choice the argument leaves open is resolved smallest-id first, so a run
is fully determined by its inputs.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from .classification import (CellClassification, CommonKSetError, classify_cells,
                             find_common_kset, neighbor_cell_counts, sparse_vertices,
                             witness_cell_counts)
from .components import ComponentGraph, DisjointSet, build_gamma
from .geometry import CellGrid, ParamSet
from .graph import Graph, UnionGraph
from .verification import CyclicOrder, verify_kth_power


class Stage(str, Enum):
    ABSORBER_CELL = "absorber_cell"
    CONNECTOR_CELL = "connector_cell"
    COMMON_KSET = "common_kset"
    TRAVERSAL_RESERVE = "traversal_reserve"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class FailureReport:
    stage: Stage
    detail: str
    context: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"stage": self.stage.value, "detail": self.detail, "context": self.context}


class ConstructionFailure(Exception):
    """A precondition of the construction does not hold for this instance."""

    def __init__(self, stage: Stage, detail: str, **context):
        super().__init__(f"[{Stage(stage).value}] {detail}")
        self.report = FailureReport(Stage(stage), detail, context)

    @property
    def stage(self) -> Stage:
        return self.report.stage


class SoundnessError(AssertionError):
    """The assembled order failed verification; indicates a bug, never bad luck."""


# forbidden cells -------------------------------------------------------------

class ForbiddenState:
    """The forbidden cell sets and the merging components of the augmented graph.

    ``F`` is every sparse cell plus the dense cells already holding a reserved
    set; only the latter are stored. ``F_star`` holds, for each component with
    exactly one cell outside ``F``, that cell.
    """

    def __init__(self, classification: CellClassification, gamma: ComponentGraph):
        self.dense = classification.dense
        self.n_cells = classification.n_cells
        self.used: set = set()
        self.F_star: set = {cells[0] for cells in gamma.components.values() if len(cells) == 1}
        self._gamma = gamma
        self._ds = DisjointSet(gamma.components)
        self._labels = {lab: [lab] for lab in gamma.components}
        self._free = {lab: len(cells) for lab, cells in gamma.components.items()}

    initial = classmethod(lambda cls, classification, gamma: cls(classification, gamma))

    @property
    def F_cells(self) -> frozenset:
        return frozenset(c for c in range(self.n_cells) if self.in_F(c))

    def in_F(self, c: int) -> bool:
        return c not in self.dense or c in self.used

    def blocked(self, c: int) -> bool:
        return self.in_F(c) or c in self.F_star

    @property
    def size(self) -> int:
        """``|F ∪ F*|``."""
        return self.n_cells - len(self.dense) + len(self.used) + len(self.F_star)

    def root(self, c: int) -> int:
        return self._ds.find(self._gamma.component_id[c])

    def roots(self) -> list:
        return sorted(self._labels)

    def cells(self, root: int) -> list:
        out = []
        for lab in self._labels[root]:
            out.extend(self._gamma.components[lab])
        return sorted(out)

    def n_cells_of(self, root: int) -> int:
        return sum(len(self._gamma.components[lab]) for lab in self._labels[root])

    def free_count(self, root: int) -> int:
        return self._free[root]

    def mark(self, c: int) -> None:
        """Put dense cell ``c`` into ``F`` (and take it out of ``F*``)."""
        if self.in_F(c):
            raise AssertionError(f"cell {c} is already forbidden")
        self.F_star.discard(c)
        self.used.add(c)
        self._free[self.root(c)] -= 1

    def merge(self, a: int, b: int) -> int:
        ra, rb = self.root(a), self.root(b)
        new = self._ds.union(ra, rb)
        old = rb if new == ra else ra
        self._labels[new].extend(self._labels.pop(old))
        self._free[new] += self._free.pop(old)
        return new

    def refresh(self, root: int) -> None:
        """If exactly one cell of the component is outside ``F``, put it in ``F*``."""
        if self._free[root] == 1:
            last = next(c for c in self.cells(root) if not self.in_F(c))
            self.F_star.add(last)

    def check(self) -> None:
        if any(self.in_F(c) for c in self.F_star):
            raise AssertionError("F and F* intersect")
        per_root = {}
        for c in self.F_star:
            r = self.root(c)
            if r in per_root:
                raise AssertionError(f"component {r} has two cells in F*")
            per_root[r] = c


# plan records ------------------------------------------------------------------

@dataclass(frozen=True)
class Absorber:
    v: int
    host_cell: int
    T_v: tuple
    T1: tuple
    T2: tuple


@dataclass(frozen=True)
class Connector:
    c: int
    c_prime: int
    T_c: tuple
    T_cp: tuple
    T_c1: tuple
    T_c2: tuple
    T_cp1: tuple
    T_cp2: tuple
    joins: tuple
    votes: int = 0


@dataclass
class ConstructionPlan:
    absorbers: list
    connectors: list
    tree: list
    F_used: list
    F_star: list
    forbidden_size: int
    n_components: int

    @property
    def blocks(self) -> dict:
        """Cell id to its two reserved halves ``(first, second)``."""
        out = {a.host_cell: (a.T1, a.T2) for a in self.absorbers}
        for con in self.connectors:
            out[con.c] = (con.T_c1, con.T_c2)
            out[con.c_prime] = (con.T_cp1, con.T_cp2)
        return out

    @property
    def absorber_cells(self) -> set:
        return {a.host_cell for a in self.absorbers}

    @property
    def connector_cells(self) -> set:
        return {c for con in self.connectors for c in (con.c, con.c_prime)}

    def marked_vertices(self) -> set:
        out = set()
        for first, second in self.blocks.values():
            out.update(first)
            out.update(second)
        return out

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ConstructionPlan":
        raw = json.loads(text)
        tup = lambda d: {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
        raw["absorbers"] = [Absorber(**tup(a)) for a in raw["absorbers"]]
        raw["connectors"] = [Connector(**tup(c)) for c in raw["connectors"]]
        raw["tree"] = [tuple(e) for e in raw["tree"]]
        return cls(**raw)


# step 1 ------------------------------------------------------------------------

def step1_absorbers(H: Graph, grid: CellGrid, cls: CellClassification, params: ParamSet,
                    state: ForbiddenState) -> list:
    """One absorber per vertex of a sparse cell, in increasing vertex order."""
    k2 = 2 * params.k
    absorbers = []
    for v in sparse_vertices(grid, cls).tolist():
        counts = neighbor_cell_counts(H, v, grid)
        host = next((c for c in sorted(counts) if counts[c] >= k2 and not state.blocked(c)), None)
        if host is None:
            raise ConstructionFailure(
                Stage.ABSORBER_CELL, f"vertex {v} has no admissible cell with {k2} of its neighbours",
                vertex=v, forbidden_size=state.size)
        cell_vs = grid.vertices(host)
        nbrs = cell_vs[H.has_edges(np.full(len(cell_vs), v), cell_vs)][:k2]
        T = tuple(int(x) for x in nbrs)
        absorbers.append(Absorber(v=v, host_cell=host, T_v=T, T1=T[:params.k], T2=T[params.k:]))
        state.mark(host)
        state.refresh(state.root(host))
        state.check()
    return absorbers


# step 2 ------------------------------------------------------------------------

def step2_connectors(H: Graph, grid: CellGrid, gamma: ComponentGraph, params: ParamSet,
                     state: ForbiddenState, retries: int = 5) -> tuple:
    """Join the components into one; returns ``(connectors, tree_edges)``."""
    k, k2 = params.k, 2 * params.k
    connectors, tree = [], []
    for _ in range(gamma.n_components - 1):
        root = min(state.roots(), key=lambda r: (state.n_cells_of(r), r))
        cells = state.cells(root)
        c = next((x for x in cells if not state.in_F(x)), None)
        if c is None:
            raise AssertionError(f"component {root} lies entirely inside F")
        S = grid.vertices(c)[:params.L]
        chosen = None
        tried = 0
        for attempt in range(retries + 1):
            try:
                T = find_common_kset(H, S, k2, rank=attempt)
            except CommonKSetError as exc:
                if attempt == 0:
                    raise ConstructionFailure(Stage.COMMON_KSET, str(exc), cell=c, component=root) from None
                break
            tried += 1
            counts = witness_cell_counts(T, grid)
            cp = next((x for x in sorted(counts) if counts[x] >= k2 and not state.blocked(x)
                       and state.root(x) != root), None)
            if cp is not None:
                chosen = (T, cp)
                break
        if chosen is None:
            raise ConstructionFailure(
                Stage.CONNECTOR_CELL, f"no admissible cell holds {k2} common neighbours of a subset of cell {c}",
                cell=c, component=root, attempts=tried, forbidden_size=state.size)
        T, cp = chosen
        w = T.witnesses
        T_cp = tuple(int(x) for x in w[grid.cell_of[w] == cp][:k2])
        T_c = tuple(T.T)
        joins = (gamma.component_id[c], gamma.component_id[cp])
        connectors.append(Connector(c=c, c_prime=cp, T_c=T_c, T_cp=T_cp, T_c1=T_c[:k], T_c2=T_c[k:],
                                    T_cp1=T_cp[:k], T_cp2=T_cp[k:], joins=joins, votes=T.votes))
        tree.append(joins)
        state.mark(c)
        state.mark(cp)
        merged = state.merge(c, cp)
        state.refresh(merged)
        state.check()
    return connectors, tree


# step 3 ------------------------------------------------------------------------

def _spanning_tree(cells: list, grid: CellGrid) -> dict:
    cellset = set(cells)
    root = cells[0]
    children = {root: []}
    queue = deque([root])
    while queue:
        c = queue.popleft()
        for f in grid.friend_ids(c):
            if f in cellset and f not in children:
                children[f] = []
                children[c].append(f)
                queue.append(f)
    if len(children) != len(cellset):
        raise AssertionError("component is not connected under friendship")
    return children


def _double_traversal(root: int, children: dict) -> list:
    """Cells met by a depth-first walk crossing every tree edge twice."""
    walk = [root]
    stack = [(root, iter(children[root]))]
    while stack:
        node, it = stack[-1]
        child = next(it, None)
        if child is None:
            stack.pop()
            if stack:
                walk.append(stack[-1][0])
        else:
            walk.append(child)
            stack.append((child, iter(children[child])))
    return walk


def step3_component_cycle(component: list, plan: ConstructionPlan, grid: CellGrid,
                          params: ParamSet, G=None) -> list:
    """Directed cycle through every vertex of a component's cells.

    Any ``k + 1`` cyclically consecutive vertices lie in one cell or in two
    friend cells, so the k-th power of the cycle is a subgraph of G. Each
    reserved set appears as its first half followed directly by its second.
    """
    k = params.k
    cells = sorted(component)
    blocks = plan.blocks
    marked = plan.marked_vertices()
    taken: set = set()

    def leftovers(c: int) -> list:
        rest = [int(v) for v in grid.vertices(c) if v not in taken and v not in marked]
        if c in blocks:
            first, second = blocks[c]
            rest += list(first) + list(second)
        return rest

    def fresh(c: int, count: int, step: int) -> list:
        out = []
        for v in grid.vertices(c):
            if len(out) == count:
                break
            v = int(v)
            if v not in taken and v not in marked:
                out.append(v)
        if len(out) < count:
            raise ConstructionFailure(Stage.TRAVERSAL_RESERVE,
                                      f"cell {c} ran out of free vertices at walk step {step}",
                                      cell=c, step=step, needed=count, available=len(out))
        taken.update(out)
        return out

    children = _spanning_tree(cells, grid)
    walk = _double_traversal(cells[0], children)
    m = len(walk) - 1
    root = walk[0]

    if m == 0:
        if plan.n_components > 1 and root not in plan.connector_cells:
            raise ConstructionFailure(Stage.DEGENERATE,
                                      f"single-cell component {root} carries no connector",
                                      cell=root)
        cycle = leftovers(root)
    else:
        last_visit = {c: i for i, c in enumerate(walk)}
        cycle = fresh(root, 1, 0)
        for i in range(1, m + 1):
            here, nxt = walk[i - 1], walk[i]
            if last_visit[here] == i - 1:
                segment = leftovers(here)
                taken.update(segment)
            else:
                segment = fresh(here, k - 1, i)
            cycle.extend(segment)
            cycle.extend(fresh(nxt, 1, i))
        closing = leftovers(root)
        taken.update(closing)
        cycle.extend(closing)

    if G is not None:
        seq = np.asarray(cycle, dtype=np.int64)
        for j in range(1, min(k, len(seq) - 1) + 1):
            if not G.has_edges(seq, np.roll(seq, -j)).all():
                raise SoundnessError(f"component cycle from cell {root} is not a k-th power in G")
    return cycle


# assembly ------------------------------------------------------------------------

def _tree_order(tree: list, labels: list) -> list:
    """Tree edges as ``(parent, child, edge index)`` in depth-first discovery order."""
    adj = {lab: [] for lab in labels}
    for idx, (a, b) in enumerate(tree):
        adj[a].append((b, idx))
        adj[b].append((a, idx))
    root = min(labels)
    seen = {root}
    out = []
    stack = [root]
    while stack:
        node = stack.pop()
        for nb, idx in sorted(adj[node], reverse=True):
            if nb not in seen:
                seen.add(nb)
                out.append((node, nb, idx))
                stack.append(nb)
    if len(seen) != len(labels):
        raise AssertionError("connector tree does not span the components")
    return out


def insert_and_graft(cycles: dict, plan: ConstructionPlan, gamma: ComponentGraph | None = None) -> CyclicOrder:
    """Drop absorbed vertices between their halves, then splice the component cycles."""
    n = sum(len(c) for c in cycles.values()) + len(plan.absorbers)
    succ = np.full(n, -1, dtype=np.int64)
    for cyc in cycles.values():
        arr = np.asarray(cyc, dtype=np.int64)
        succ[arr] = np.roll(arr, -1)

    def seam(first: tuple, second: tuple, what: str) -> int:
        a = first[-1]
        if succ[a] != second[0]:
            raise AssertionError(f"{what}: halves {first} and {second} are not adjacent")
        return a

    for ab in plan.absorbers:
        a = seam(ab.T1, ab.T2, f"absorber of {ab.v}")
        succ[a] = ab.v
        succ[ab.v] = ab.T2[0]

    if plan.connectors:
        side_of = {}
        for con in plan.connectors:
            side_of[con.c] = (con.T_c1, con.T_c2)
            side_of[con.c_prime] = (con.T_cp1, con.T_cp2)
        for parent, child, idx in _tree_order(plan.tree, list(cycles)):
            con = plan.connectors[idx]
            lab_c, lab_cp = con.joins
            if {lab_c, lab_cp} != {parent, child}:
                raise AssertionError(f"connector {idx} does not join {parent} and {child}")
            child_cell, parent_cell = (con.c, con.c_prime) if lab_c == child else (con.c_prime, con.c)
            a_par = seam(*side_of[parent_cell], what=f"connector {idx} parent side")
            a_chi = seam(*side_of[child_cell], what=f"connector {idx} child side")
            succ[a_par], succ[a_chi] = succ[a_chi], succ[a_par]

    if (succ < 0).any():
        raise AssertionError("some vertex was never placed")
    start = cycles[min(cycles)][0]
    order = np.empty(n, dtype=np.int64)
    v = start
    for i in range(n):
        order[i] = v
        v = succ[v]
    if v != start:
        raise AssertionError("assembled successor map is not a single cycle")
    return CyclicOrder(order)


# pipeline ------------------------------------------------------------------------

def build_plan(H: Graph, grid: CellGrid, params: ParamSet, retries: int = 5) -> tuple:
    """Run steps 1 and 2; returns ``(plan, gamma)``."""
    cls = classify_cells(grid, params.R)
    gamma = build_gamma(cls, grid)
    state = ForbiddenState(cls, gamma)
    absorbers = step1_absorbers(H, grid, cls, params, state)
    connectors, tree = step2_connectors(H, grid, gamma, params, state, retries=retries)
    plan = ConstructionPlan(absorbers=absorbers, connectors=connectors, tree=tree,
                            F_used=sorted(state.used), F_star=sorted(state.F_star),
                            forbidden_size=state.size, n_components=gamma.n_components)
    return plan, gamma


def construct(H: Graph, G, grid: CellGrid, params: ParamSet, *, retries: int = 5,
              return_plan: bool = False):
    """Cyclic order whose k-th power lies in ``H ∪ G``.

    Raises :class:`ConstructionFailure` when the instance violates a
    precondition; a returned order has always passed verification.
    """
    if H.n != G.n or H.n != params.n or len(grid.cell_of) != params.n:
        raise ValueError("H, G, grid and params must agree on n")
    plan, gamma = build_plan(H, grid, params, retries=retries)
    cycles = {lab: step3_component_cycle(cells, plan, grid, params)
              for lab, cells in gamma.components.items()}
    order = insert_and_graft(cycles, plan, gamma)
    check = verify_kth_power(order, UnionGraph(H, G), params.k)
    if not check:
        raise SoundnessError(f"assembled order fails verification at {check.violation}")
    return (order, plan) if return_plan else order
