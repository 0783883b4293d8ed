"""Dense host graphs and colouring data of small pattern graphs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .graph import Graph, read_edge_list

# ceil(alpha * n) with a small allowance for binary fractions such as 0.3*100
_EPS = 1e-9


def _ceil(x: float) -> int:
    return math.ceil(x - _EPS)


def gen_min_degree_random(n: int, alpha: float, seed: int) -> Graph:
    """Random graph with minimum degree at least ``ceil(alpha * n)``.

    Starts from G(n, p) with ``p = min(1, alpha + 10/sqrt(n))`` and then, in
    increasing vertex order, joins each deficient vertex to uniformly random
    non-neighbours until it meets the bound.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    target = _ceil(alpha * n)
    if target >= n:
        raise ValueError(f"minimum degree {target} is impossible on {n} vertices")
    rng = np.random.default_rng(seed)
    p = min(1.0, alpha + 10 / math.sqrt(n))
    adj = np.zeros((n, n), dtype=bool)
    block = max(1, 2_000_000 // max(n, 1))
    for start in range(0, n, block):
        stop = min(n, start + block)
        adj[start:stop] = rng.random((stop - start, n), dtype=np.float32) < p
    adj = np.triu(adj, 1)
    adj |= adj.T
    deg = adj.sum(axis=1)
    for v in np.flatnonzero(deg < target):
        short = target - deg[v]
        if short <= 0:
            continue
        cand = np.flatnonzero(~adj[v])
        cand = cand[cand != v]
        pick = rng.permutation(cand)[:short]
        adj[v, pick] = adj[pick, v] = True
        deg[v] += len(pick)
        deg[pick] += 1
    return Graph.from_dense(adj, meta={"kind": "random", "alpha": alpha, "seed": seed,
                                       "min_degree": int(deg.min())})


def _even_split(total: int, parts: int) -> list:
    q, rem = divmod(total, parts)
    return [q + 1] * rem + [q] * (parts - rem)


def complete_multipartite(sizes, *, meta=None) -> Graph:
    labels = np.repeat(np.arange(len(sizes)), sizes)
    adj = labels[:, None] != labels[None, :]
    return Graph.from_dense(adj, meta=meta)


def _multipartite_meta(kind: str, sizes: list, names: list, **extra) -> dict:
    bounds = np.cumsum([0] + list(sizes))
    parts = {nm: list(range(int(bounds[i]), int(bounds[i + 1]))) for i, nm in enumerate(names)}
    n = int(bounds[-1])
    delta = n - max(sizes) if sizes else 0
    return {"kind": kind, "part_sizes": dict(zip(names, map(int, sizes))), "parts": parts,
            "min_degree": int(delta), **extra}


def gen_extremal_power(n: int, k: int, alpha: float) -> Graph:
    """Complete (k+1)-partite host with no k-th power of a Hamilton cycle.

    Part ``B`` has ``round(max(0, (alpha-1)k + 1) n)`` vertices and the other
    ``n - |B|`` are split as evenly as possible over ``A_1..A_k``.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if not 0 < alpha < k / (k + 1):
        raise ValueError(f"alpha must lie in (0, {k}/{k + 1})")
    b = int(round(max(0.0, (alpha - 1) * k + 1) * n))
    sizes = _even_split(n - b, k) + [b]
    names = [f"A{i + 1}" for i in range(k)] + ["B"]
    meta = _multipartite_meta("extremal-power", sizes, names, k=k, alpha=alpha)
    return complete_multipartite(sizes, meta=meta)


# pattern graphs ------------------------------------------------------------

@dataclass(frozen=True)
class PatternGraph:
    graph: Graph
    name: str = "F"

    def __post_init__(self):
        if self.graph.n < 1:
            raise ValueError("pattern graph needs at least one vertex")

    @property
    def n(self) -> int:
        return self.graph.n


def _builtin(name: str) -> Graph:
    if name in ("K2", "K3", "K4", "triangle"):
        return Graph.complete(3 if name == "triangle" else int(name[1]))
    if name in ("C4", "C5"):
        return Graph.cycle(int(name[1]))
    if name == "P3":
        return Graph.path(3)
    raise KeyError(name)


BUILTIN_PATTERNS = ("K2", "K3", "K4", "C4", "C5", "P3", "triangle")


def pattern(name: str) -> PatternGraph:
    """A built-in pattern by name, or ``file:PATH`` / a path to an edge list."""
    if name in BUILTIN_PATTERNS:
        return PatternGraph(_builtin(name), name)
    path = name[5:] if name.startswith("file:") else name
    try:
        return PatternGraph(read_edge_list(path), name)
    except FileNotFoundError:
        raise ValueError(f"unknown pattern {name!r}; built-ins are {', '.join(BUILTIN_PATTERNS)}") from None


class ChromaticData(NamedTuple):
    chi: int
    sigma: int
    chi_cr: Fraction


def _adjacency_lists(F: Graph) -> list:
    return [set(int(u) for u in F.neighbors(v)) for v in range(F.n)]


def _colourable(adj: list, order: list, c: int) -> bool:
    colour = {}

    def place(i: int, used: int) -> bool:
        if i == len(order):
            return True
        v = order[i]
        taken = {colour[u] for u in adj[v] if u in colour}
        # a fresh colour is only tried once (colours are interchangeable)
        for col in range(min(used + 1, c)):
            if col not in taken:
                colour[v] = col
                if place(i + 1, max(used, col + 1)):
                    return True
                del colour[v]
        return False

    return place(0, 0)


def _min_class_size(adj: list, order: list, chi: int) -> int:
    """Smallest colour class over all proper colourings with ``chi`` colours."""
    n = len(order)
    colour = {}
    sizes = [0] * chi
    best = [n]

    def place(i: int, used: int) -> None:
        if i == n:
            if used == chi:
                best[0] = min(best[0], min(sizes))
            return
        # every colour still unused needs at least one of the remaining vertices
        if chi - used > n - i:
            return
        v = order[i]
        taken = {colour[u] for u in adj[v] if u in colour}
        for col in range(min(used + 1, chi)):
            if col in taken:
                continue
            colour[v] = col
            sizes[col] += 1
            place(i + 1, max(used, col + 1))
            sizes[col] -= 1
            del colour[v]

    place(0, 0)
    return best[0]


def chromatic_number(F: Graph) -> int:
    adj = _adjacency_lists(F)
    order = sorted(range(F.n), key=lambda v: (-len(adj[v]), v))
    for c in range(1, F.n + 1):
        if _colourable(adj, order, c):
            return c
    return F.n


def chromatic_data(F, max_vertices: int = 12) -> ChromaticData:
    """Exact ``chi``, ``sigma`` and critical chromatic number of a small graph."""
    g = F.graph if isinstance(F, PatternGraph) else F
    if g.n > max_vertices:
        raise ValueError(f"exhaustive colouring limited to {max_vertices} vertices")
    chi = chromatic_number(g)
    if chi < 2:
        raise ValueError("critical chromatic number needs a graph with at least one edge")
    adj = _adjacency_lists(g)
    order = sorted(range(g.n), key=lambda v: (-len(adj[v]), v))
    sigma = _min_class_size(adj, order, chi)
    chi_cr = Fraction((chi - 1) * g.n, g.n - sigma)
    return ChromaticData(chi=chi, sigma=sigma, chi_cr=chi_cr)


def gen_extremal_factor(n: int, F, alpha: float) -> Graph:
    """Complete chi(F)-partite host whose largest F-tiling leaves many vertices uncovered.

    With ``g = min(1/(chi-1), 1-alpha)`` the parts are ``A_1..A_{chi-1}`` of
    ``g n`` vertices and ``B`` of ``(1 - (chi-1) g) n``.
    """
    pat = F if isinstance(F, PatternGraph) else PatternGraph(F)
    data = chromatic_data(pat)
    k = data.chi
    upper = 1 - 1 / data.chi_cr
    if not 0 < alpha < upper:
        raise ValueError(f"alpha must lie in (0, {float(upper):.6g}) for {pat.name}")
    part = min(1 / (k - 1), 1 - alpha)
    beta = 1 - (k - 1) * part
    b = int(round(beta * n))
    sizes = _even_split(n - b, k - 1) + [b]
    names = [f"A{i + 1}" for i in range(k - 1)] + ["B"]
    meta = _multipartite_meta("extremal-factor", sizes, names, pattern=pat.name, alpha=alpha,
                              chi=k, sigma=data.sigma, beta=beta, part_fraction=part)
    return complete_multipartite(sizes, meta=meta)
