"""Simple undirected graphs on vertex ids ``0..n-1``.

Two storage layouts sit behind one class. Up to ``bitset_threshold`` vertices
each row of the adjacency matrix is kept as a packed bitset, which makes
membership tests O(1) and common-neighbourhood intersection O(n/8). Larger
graphs fall back to a sorted, CSR-style neighbour array with binary-search
membership.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

#: Graphs with at most this many vertices use the packed-bitset layout.
DEFAULT_BITSET_THRESHOLD = 2**15

_BIT = np.array([128, 64, 32, 16, 8, 4, 2, 1], dtype=np.uint8)


def _as_index_array(values) -> np.ndarray:
    return np.asarray(values, dtype=np.int64).reshape(-1)


class Graph:
    """Immutable simple undirected graph.

    Build with :meth:`from_edges` or :meth:`from_dense`; the constructor is
    internal. ``meta`` carries free-form provenance such as the part
    structure of a complete multipartite host.
    """

    __slots__ = ("n", "meta", "_bits", "_indptr", "_indices", "_keys", "_degrees")

    def __init__(self, n: int, *, bits=None, indptr=None, indices=None, meta=None):
        self.n = int(n)
        self.meta = dict(meta or {})
        self._bits = bits
        self._indptr = indptr
        self._indices = indices
        self._keys = None
        self._degrees = None
        for arr in (bits, indptr, indices):
            if arr is not None:
                arr.setflags(write=False)

    # construction -------------------------------------------------------

    @classmethod
    def from_edges(cls, n: int, edges, *, meta=None,
                   bitset_threshold: int = DEFAULT_BITSET_THRESHOLD,
                   strict: bool = False) -> "Graph":
        """Build from an ``(m, 2)`` array-like of vertex pairs.

        With ``strict`` set, self-loops and repeated edges raise
        ``ValueError``; otherwise they are silently dropped.
        """
        if n < 0:
            raise ValueError("vertex count must be non-negative")
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ValueError("edge endpoint outside 0..n-1")
        loops = e[:, 0] == e[:, 1]
        if strict and loops.any():
            u = int(e[loops][0, 0])
            raise ValueError(f"self-loop at vertex {u}")
        e = e[~loops]
        lo = np.minimum(e[:, 0], e[:, 1])
        hi = np.maximum(e[:, 0], e[:, 1])
        keys = lo * n + hi
        uniq = np.unique(keys)
        if strict and len(uniq) != len(keys):
            _, counts = np.unique(keys, return_counts=True)
            dup = int(uniq[np.argmax(counts > 1)])
            raise ValueError(f"duplicate edge {dup // n} {dup % n}")
        lo, hi = np.divmod(uniq, max(n, 1))
        if n <= bitset_threshold:
            bits = np.zeros((n, (n + 7) // 8), dtype=np.uint8)
            np.bitwise_or.at(bits, (lo, hi >> 3), _BIT[hi & 7])
            np.bitwise_or.at(bits, (hi, lo >> 3), _BIT[lo & 7])
            return cls(n, bits=bits, meta=meta)
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(n, indptr=indptr, indices=dst, meta=meta)

    @classmethod
    def from_dense(cls, adjacency, *, meta=None,
                   bitset_threshold: int = DEFAULT_BITSET_THRESHOLD) -> "Graph":
        """Build from a symmetric boolean matrix with a zero diagonal."""
        a = np.asarray(adjacency, dtype=bool)
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError("adjacency matrix must be square")
        if np.any(np.diagonal(a)):
            raise ValueError("adjacency matrix has self-loops")
        if n <= bitset_threshold:
            if not np.array_equal(a, a.T):
                raise ValueError("adjacency matrix is not symmetric")
            return cls(n, bits=np.packbits(a, axis=1), meta=meta)
        u, v = np.nonzero(np.triu(a, 1))
        return cls.from_edges(n, np.column_stack([u, v]), meta=meta,
                              bitset_threshold=bitset_threshold)

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls.from_dense(~np.eye(n, dtype=bool))

    @classmethod
    def cycle(cls, n: int) -> "Graph":
        if n < 3:
            raise ValueError("a cycle needs at least 3 vertices")
        idx = np.arange(n)
        return cls.from_edges(n, np.column_stack([idx, (idx + 1) % n]))

    @classmethod
    def path(cls, n: int) -> "Graph":
        idx = np.arange(max(n - 1, 0))
        return cls.from_edges(n, np.column_stack([idx, idx + 1]))

    # queries ------------------------------------------------------------

    @property
    def uses_bitset(self) -> bool:
        return self._bits is not None

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.has_edges([u], [v])[0])

    def has_edges(self, us, vs) -> np.ndarray:
        """Vectorised adjacency test for paired vertex arrays."""
        us = _as_index_array(us)
        vs = _as_index_array(vs)
        if self._bits is not None:
            return (self._bits[us, vs >> 3] & _BIT[vs & 7]) != 0
        if self._keys is None:
            src = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self._indptr))
            self._keys = src * self.n + self._indices
        q = us * self.n + vs
        pos = np.searchsorted(self._keys, q)
        pos = np.minimum(pos, len(self._keys) - 1) if len(self._keys) else pos
        return (self._keys[pos] == q) if len(self._keys) else np.zeros(len(q), bool)

    def neighbor_mask(self, v: int) -> np.ndarray:
        """Boolean row of the adjacency matrix."""
        if self._bits is not None:
            return np.unpackbits(self._bits[v], count=self.n).astype(bool)
        mask = np.zeros(self.n, dtype=bool)
        mask[self._indices[self._indptr[v]:self._indptr[v + 1]]] = True
        return mask

    def neighbors(self, v: int) -> np.ndarray:
        """Sorted neighbour ids of ``v``."""
        if self._bits is not None:
            return np.flatnonzero(np.unpackbits(self._bits[v], count=self.n))
        return self._indices[self._indptr[v]:self._indptr[v + 1]]

    def degrees(self) -> np.ndarray:
        if self._degrees is None:
            if self._bits is not None:
                self._degrees = np.bitwise_count(self._bits).sum(axis=1, dtype=np.int64)
            else:
                self._degrees = np.diff(self._indptr)
        return self._degrees

    def degree(self, v: int) -> int:
        return int(self.degrees()[v])

    @property
    def num_edges(self) -> int:
        return int(self.degrees().sum()) // 2

    def edges(self) -> np.ndarray:
        """All edges as an ``(m, 2)`` array with ``u < v``, sorted."""
        if self._bits is not None:
            rows = []
            for u in range(self.n):
                nb = self.neighbors(u)
                nb = nb[nb > u]
                rows.append(np.column_stack([np.full(len(nb), u), nb]))
            return np.concatenate(rows).astype(np.int64) if rows else np.empty((0, 2), np.int64)
        src = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self._indptr))
        keep = src < self._indices
        return np.column_stack([src[keep], self._indices[keep]])

    def dense(self) -> np.ndarray:
        """Full boolean adjacency matrix (small graphs only)."""
        if self._bits is not None:
            return np.unpackbits(self._bits, axis=1, count=self.n).astype(bool)
        out = np.zeros((self.n, self.n), dtype=bool)
        e = self.edges()
        out[e[:, 0], e[:, 1]] = out[e[:, 1], e[:, 0]] = True
        return out

    def common_neighbor_mask(self, T: Sequence[int]) -> np.ndarray:
        T = list(T)
        if self._bits is not None:
            acc = np.bitwise_and.reduce(self._bits[T], axis=0)
            return np.unpackbits(acc, count=self.n).astype(bool)
        mask = self.neighbor_mask(T[0])
        for t in T[1:]:
            mask &= self.neighbor_mask(t)
        return mask

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.num_edges})"


class UnionGraph:
    """Edge-union view of two graphs on the same vertex set; never materialised."""

    def __init__(self, h, g):
        if h.n != g.n:
            raise ValueError(f"vertex counts differ: {h.n} vs {g.n}")
        self.h = h
        self.g = g
        self.n = h.n

    def has_edges(self, us, vs) -> np.ndarray:
        us = _as_index_array(us)
        vs = _as_index_array(vs)
        out = self.h.has_edges(us, vs)
        rest = ~out
        if rest.any():
            out[rest] = self.g.has_edges(us[rest], vs[rest])
        return out

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.has_edges([u], [v])[0])

    def neighbor_mask(self, v: int) -> np.ndarray:
        return self.h.neighbor_mask(v) | self.g.neighbor_mask(v)

    def neighbors(self, v: int) -> np.ndarray:
        return np.flatnonzero(self.neighbor_mask(v))


def min_degree(graph: Graph) -> int:
    if graph.n < 1:
        raise ValueError("min_degree needs at least one vertex")
    return int(graph.degrees().min())


def common_neighborhood(graph, T: Iterable[int]) -> np.ndarray:
    """Sorted ids of vertices adjacent to every member of ``T``."""
    T = sorted(set(int(t) for t in T))
    if not T:
        raise ValueError("common neighbourhood of an empty set is undefined")
    if isinstance(graph, Graph):
        return np.flatnonzero(graph.common_neighbor_mask(T))
    mask = graph.neighbor_mask(T[0])
    for t in T[1:]:
        mask &= graph.neighbor_mask(t)
    return np.flatnonzero(mask)


def is_complete_between(graph, A: Iterable[int], B: Iterable[int]) -> bool:
    A = _as_index_array(sorted(set(A)))
    B = _as_index_array(sorted(set(B)))
    if np.intersect1d(A, B).size:
        raise ValueError("vertex sets must be disjoint")
    if not len(A) or not len(B):
        return True
    us = np.repeat(A, len(B))
    vs = np.tile(B, len(A))
    return bool(graph.has_edges(us, vs).all())


# edge-list files ----------------------------------------------------------

def write_edge_list(graph: Graph, path) -> None:
    e = graph.edges()
    with open(path, "w") as fh:
        fh.write(f"{graph.n} {len(e)}\n")
        for u, v in e:
            fh.write(f"{u} {v}\n")


def parse_edge_list(text: str, *, bitset_threshold: int = DEFAULT_BITSET_THRESHOLD) -> Graph:
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines or len(lines[0]) != 2:
        raise ValueError("edge list must start with a 'n m' header")
    n, m = int(lines[0][0]), int(lines[0][1])
    body = lines[1:]
    if len(body) != m:
        raise ValueError(f"header promises {m} edges, found {len(body)}")
    edges = np.array([[int(a), int(b)] for a, b in body], dtype=np.int64).reshape(-1, 2)
    if m and not np.all(edges[:, 0] < edges[:, 1]):
        bad = edges[~(edges[:, 0] < edges[:, 1])][0]
        if bad[0] == bad[1]:
            raise ValueError(f"self-loop at vertex {bad[0]}")
        raise ValueError(f"edge {bad[0]} {bad[1]} is not written as u < v")
    return Graph.from_edges(n, edges, strict=True, bitset_threshold=bitset_threshold)


def read_edge_list(path, **kwargs) -> Graph:
    return parse_edge_list(Path(path).read_text(), **kwargs)
