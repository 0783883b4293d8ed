"""Certificates for k-th powers of Hamilton cycles and what can be read off them."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .graph import Graph
from .hosts import PatternGraph, chromatic_data


class CyclicOrder:
    """A permutation of ``0..n-1`` read cyclically."""

    __slots__ = ("order",)

    def __init__(self, order):
        arr = np.array(order, dtype=np.int64).reshape(-1)
        n = len(arr)
        if n == 0 or not np.array_equal(np.sort(arr), np.arange(n)):
            raise ValueError("order must be a permutation of 0..n-1")
        arr.setflags(write=False)
        self.order = arr

    def __len__(self) -> int:
        return len(self.order)

    def __iter__(self):
        return iter(self.order.tolist())

    def __eq__(self, other):
        return isinstance(other, CyclicOrder) and np.array_equal(self.order, other.order)

    def __repr__(self) -> str:
        head = " ".join(map(str, self.order[:8].tolist()))
        return f"CyclicOrder(n={len(self)}: {head}{' ...' if len(self) > 8 else ''})"

    def rotated(self, shift: int) -> "CyclicOrder":
        return CyclicOrder(np.roll(self.order, -shift))

    def reversed(self) -> "CyclicOrder":
        return CyclicOrder(self.order[::-1])

    def positions(self) -> np.ndarray:
        pos = np.empty(len(self), dtype=np.int64)
        pos[self.order] = np.arange(len(self))
        return pos

    def to_line(self) -> str:
        return " ".join(map(str, self.order.tolist()))

    @classmethod
    def from_line(cls, line: str) -> "CyclicOrder":
        return cls([int(x) for x in line.split()])

    def to_json(self) -> str:
        return json.dumps({"order": self.order.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "CyclicOrder":
        return cls(json.loads(text)["order"])


class KthPowerCheck(NamedTuple):
    ok: bool
    violation: tuple | None = None  # (position i, offset j) of the first missing edge

    def __bool__(self) -> bool:
        return self.ok


def _as_order(order) -> np.ndarray:
    return order.order if isinstance(order, CyclicOrder) else CyclicOrder(order).order


def verify_kth_power(order, graph, k: int) -> KthPowerCheck:
    """Is every vertex adjacent to the ``k`` vertices that follow it cyclically?"""
    if k < 1:
        raise ValueError("k must be positive")
    arr = _as_order(order)
    n = len(arr)
    if n != graph.n:
        raise ValueError(f"order has {n} vertices, graph has {graph.n}")
    ok = np.ones((n, k), dtype=bool)
    for j in range(1, k + 1):
        if j % n == 0:
            continue
        ok[:, j - 1] = graph.has_edges(arr, np.roll(arr, -j))
    if ok.all():
        return KthPowerCheck(True)
    flat = int(np.argmin(ok.reshape(-1)))
    i, j = divmod(flat, k)
    return KthPowerCheck(False, (i, j + 1))


def brute_force_kth_power_exists(graph: Graph, k: int, max_n: int = 11) -> bool:
    """Exhaustive search over cyclic orders, pruned as the order is built.

    Vertex 0 is fixed first and an order is only accepted when its second
    vertex is smaller than its last, which removes reflections.
    """
    n = graph.n
    if n > max_n:
        raise ValueError(f"brute force limited to {max_n} vertices, got {n}")
    if n == 0:
        return False
    dense = graph.dense()
    adj = [sum(1 << int(u) for u in np.flatnonzero(dense[v])) for v in range(n)]
    seq = [0]

    def closes() -> bool:
        for i in range(n):
            for j in range(1, k + 1):
                w = seq[(i + j) % n]
                if w != seq[i] and not (adj[seq[i]] >> w) & 1:
                    return False
        return n < 3 or seq[1] < seq[-1]

    def extend(used: int) -> bool:
        if len(seq) == n:
            return closes()
        need = ~0
        for j in range(1, min(k, len(seq)) + 1):
            need &= adj[seq[-j]]
        cand = need & ~used & ((1 << n) - 1)
        while cand:
            low = cand & -cand
            v = low.bit_length() - 1
            cand ^= low
            seq.append(v)
            if extend(used | low):
                return True
            seq.pop()
        return False

    return extend(1)


@dataclass
class Certificate:
    order: CyclicOrder
    k: int
    verified_against: str
    verified: bool = False

    def to_json(self) -> str:
        return json.dumps({"order": self.order.order.tolist(), "k": self.k,
                           "verified_against": self.verified_against, "verified": self.verified})

    @classmethod
    def from_json(cls, text: str) -> "Certificate":
        raw = json.loads(text)
        # the flag is never trusted from disk; re-run certify() to set it
        return cls(CyclicOrder(raw["order"]), raw["k"], raw["verified_against"])


def certify(order, graph, k: int, description: str = "") -> Certificate:
    order = order if isinstance(order, CyclicOrder) else CyclicOrder(order)
    cert = Certificate(order, k, description or repr(graph))
    cert.verified = verify_kth_power(order, graph, k).ok
    return cert


# corollary extractions -----------------------------------------------------

def _require_verified(order, graph, k):
    check = verify_kth_power(order, graph, k)
    if not check:
        raise ValueError(f"order is not a k-th power certificate (first violation {check.violation})")


def extract_f_factor(order, F: PatternGraph, k: int, graph) -> list:
    """Split the cycle into consecutive blocks of ``|V(F)|`` vertices.

    Each block induces a clique of the k-th power, so pattern vertex ``j``
    maps to the ``j``-th vertex of the block. Returns one tuple per copy.
    """
    arr = _as_order(order)
    n, f = len(arr), F.n
    if n % f:
        raise ValueError(f"|V(F)|={f} does not divide n={n}")
    if k < f - 1:
        raise ValueError(f"k={k} is too small: consecutive blocks of {f} are cliques only for k >= {f - 1}")
    _require_verified(arr, graph, k)
    fe = F.graph.edges()
    copies = []
    for b in range(n // f):
        block = arr[b * f:(b + 1) * f]
        if len(fe) and not graph.has_edges(block[fe[:, 0]], block[fe[:, 1]]).all():
            raise RuntimeError(f"block {b} does not contain a copy of {F.name}")
        copies.append(tuple(int(x) for x in block))
    return copies


def check_bandwidth(target: Graph, labelling, k: int) -> np.ndarray:
    lab = np.asarray(labelling, dtype=np.int64)
    if not np.array_equal(np.sort(lab), np.arange(target.n)):
        raise ValueError("labelling must be a bijection onto 0..n-1")
    e = target.edges()
    if len(e):
        span = np.abs(lab[e[:, 0]] - lab[e[:, 1]])
        bad = np.flatnonzero(span > k)
        if len(bad):
            u, v = e[bad[0]]
            raise ValueError(f"edge {u}-{v} spans labels {lab[u]} and {lab[v]}, more than {k}")
    return lab


def embed_bandwidth(order, target: Graph, k: int, graph, labelling) -> np.ndarray:
    """Map target vertex ``u`` to the cycle vertex at position ``labelling[u]``."""
    arr = _as_order(order)
    if target.n != len(arr):
        raise ValueError("target must have as many vertices as the cycle")
    lab = check_bandwidth(target, labelling, k)
    _require_verified(arr, graph, k)
    image = arr[lab]
    e = target.edges()
    if len(e) and not graph.has_edges(image[e[:, 0]], image[e[:, 1]]).all():
        raise RuntimeError("embedded edge missing from the host graph")
    return image


def path_labelling(length: int) -> list:
    return list(range(length))


def cycle_labelling(length: int) -> list:
    """Bandwidth-2 labelling of the cycle ``0-1-...-(length-1)-0``."""
    seq = [0]
    lo, hi = 1, length - 1
    while lo <= hi:
        seq.append(lo)
        if lo != hi:
            seq.append(hi)
        lo, hi = lo + 1, hi - 1
    lab = [0] * length
    for pos, v in enumerate(seq):
        lab[v] = pos
    return lab


def bandwidth_family(pieces) -> tuple:
    """Disjoint union of paths and cycles with a bandwidth-2 labelling.

    ``pieces`` is a sequence like ``[("cycle", 6), ("path", 4)]``.
    """
    edges, labels, offset = [], [], 0
    for kind, length in pieces:
        if kind == "cycle":
            g, lab = Graph.cycle(length), cycle_labelling(length)
        elif kind == "path":
            g, lab = Graph.path(length), path_labelling(length)
        else:
            raise ValueError(f"unknown piece {kind!r}")
        for u, v in g.edges():
            edges.append((u + offset, v + offset))
        labels.extend(x + offset for x in lab)
        offset += length
    return Graph.from_edges(offset, np.array(edges, dtype=np.int64).reshape(-1, 2)), labels


# tilings of complete multipartite hosts -------------------------------------

def _part_usages(F: Graph, parts: int) -> list:
    """Distinct vectors of per-part vertex counts over homomorphisms of F into K_parts."""
    adj = [set(int(u) for u in F.neighbors(v)) for v in range(F.n)]
    partitions = set()
    colour = [0] * F.n

    def place(i: int, used: int) -> None:
        if i == F.n:
            partitions.add(tuple(sorted(np.bincount(colour[:F.n], minlength=used)[:used].tolist())))
            return
        for c in range(min(used + 1, parts)):
            if all(colour[u] != c for u in adj[i] if u < i):
                colour[i] = c
                place(i + 1, max(used, c + 1))

    place(0, 0)
    out = set()
    for sizes in partitions:
        for assign in itertools.permutations(range(parts), len(sizes)):
            vec = [0] * parts
            for s, p in zip(sizes, assign):
                vec[p] += s
            out.add(tuple(vec))
    return sorted(out)


def exact_max_tiling_multipartite(part_sizes, F) -> int:
    """Largest number of disjoint copies of F in a complete multipartite graph."""
    g = F.graph if isinstance(F, PatternGraph) else F
    caps = tuple(int(x) for x in part_sizes)
    usages = _part_usages(g, len(caps))

    @lru_cache(maxsize=None)
    def best(c: tuple) -> int:
        top = 0
        for u in usages:
            if all(a >= b for a, b in zip(c, u)):
                top = max(top, 1 + best(tuple(a - b for a, b in zip(c, u))))
        return top

    return best(caps)


def max_tiling_upper_bound(H: Graph, F: PatternGraph) -> int:
    """``floor(|B| / sigma(F))`` for a host built by ``gen_extremal_factor``."""
    sizes = H.meta.get("part_sizes")
    if not sizes or "B" not in sizes:
        raise ValueError("host carries no part metadata; build it with gen_extremal_factor")
    data = chromatic_data(F)
    b = sizes["B"]
    if data.chi == 2 and b == 0:
        raise ValueError("bound is vacuous for bipartite patterns on a host without part B")
    bound = b // data.sigma
    if F.n <= 8 and H.n <= 24:
        exact = exact_max_tiling_multipartite(list(sizes.values()), F)
        if exact > bound:
            raise RuntimeError(f"exact tiling {exact} exceeds the part-counting bound {bound}")
    return bound
