"""Random geometric graphs on the unit hypercube and the cell grid over it."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import gamma as gamma_fn

from .graph import Graph

# Expansions of 2*sqrt(d)/r that land within this relative distance above an
# integer are treated as that integer; avoids 1/ceil(200.00000000000003).
_CEIL_RTOL = 1e-12

_PAIR_CHUNK = 4_000_000


def parse_norm(p) -> float:
    """Accept ``1, 2, ...`` or ``"inf"``/``math.inf``; return a float."""
    if isinstance(p, str):
        p = p.strip().lower()
        p = math.inf if p in ("inf", "infinity", "max") else float(p)
    p = float(p)
    if not (p >= 1):
        raise ValueError(f"p-norm must be >= 1, got {p}")
    return p


def unit_ball_volume(d: int, p_norm=2) -> float:
    """Volume of the unit ball of the l_p norm in R^d."""
    p = parse_norm(p_norm)
    if math.isinf(p):
        return 2.0**d
    return float((2 * gamma_fn(1 + 1 / p)) ** d / gamma_fn(1 + d / p))


def _safe_ceil(x: float) -> int:
    c = math.ceil(x)
    if c - 1 >= 1 and (x - (c - 1)) <= _CEIL_RTOL * x:
        return c - 1
    return c


@dataclass(frozen=True)
class ParamSet:
    n: int
    d: int
    k: int
    alpha: float
    C: float
    r: float
    s: float
    K: float
    L: int
    R: int
    gamma: float
    p_norm: float
    cells_per_axis: int

    @property
    def n_cells(self) -> int:
        return self.cells_per_axis**self.d

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["p_norm"] = "inf" if math.isinf(self.p_norm) else self.p_norm
        return out


def derive_params(n: int, d: int, k: int, alpha: float, C: float,
                  p_norm=2, L_override: int | None = None) -> ParamSet:
    """All constants of the construction for radius ``(C/n)^(1/d)``.

    The cell side is ``1/ceil(2 sqrt(d) / r)`` for the Euclidean norm and the
    more conservative ``1/ceil(2 d / r)`` otherwise, so that any two points
    in the same or neighbouring cells are within distance ``r``.
    """
    if n < 1 or d < 1 or k < 1:
        raise ValueError("n, d and k must be positive")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if not C > 0:
        raise ValueError("C must be positive")
    p = parse_norm(p_norm)
    r = (C / n) ** (1.0 / d)
    diameter = d ** (0.0 if math.isinf(p) else 1.0 / p)
    if r > diameter:
        raise ValueError(f"radius {r:.6g} exceeds the diameter {diameter:.6g} of the cube")
    spread = 2 * math.sqrt(d) if p == 2 else 2 * d
    m = _safe_ceil(spread / r)
    if m < 2:
        raise ValueError(f"cell side 1/{m} is degenerate; need at least two cells per axis")
    s = 1.0 / m
    K = s**d * n
    L = int(L_override) if L_override is not None else math.ceil(8 * k / alpha - 1e-9)
    if L < 2 * k:
        raise ValueError(f"L={L} is smaller than 2k={2 * k}")
    if L > n:
        raise ValueError(f"L={L} exceeds n={n}")
    R = L + k * 3**d
    gamma = alpha / (4 * math.comb(L, 2 * k))
    return ParamSet(n=n, d=d, k=k, alpha=alpha, C=C, r=r, s=s, K=K, L=L, R=R,
                    gamma=gamma, p_norm=p, cells_per_axis=m)


# points --------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PointSet:
    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=np.float64, copy=True)
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
            raise ValueError("coords must be a non-empty (n, d) array")
        if np.any(c < 0) or np.any(c > 1) or not np.all(np.isfinite(c)):
            raise ValueError("coordinates must lie in [0, 1]")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def d(self) -> int:
        return self.coords.shape[1]

    def __eq__(self, other):
        return isinstance(other, PointSet) and np.array_equal(self.coords, other.coords)

    def to_text(self) -> str:
        lines = [f"{self.n} {self.d}"]
        lines += [" ".join(f"{x:.17g}" for x in row) for row in self.coords]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PointSet":
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        n, d = int(rows[0][0]), int(rows[0][1])
        body = np.array([[float(x) for x in r] for r in rows[1:]], dtype=np.float64)
        if body.shape != (n, d):
            raise ValueError(f"expected {n} points of dimension {d}, got shape {body.shape}")
        return cls(body)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "PointSet":
        with open(path) as fh:
            return cls.from_text(fh.read())


def sample_points(n: int, d: int, rng_seed: int) -> PointSet:
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    rng = np.random.default_rng(rng_seed)
    return PointSet(rng.random((n, d)))


# distances -----------------------------------------------------------------

def _within(a: np.ndarray, b: np.ndarray, r: float, p: float) -> np.ndarray:
    diff = np.abs(a - b)
    if p == 2:
        return np.einsum("ij,ij->i", diff, diff) <= r * r
    if math.isinf(p):
        return diff.max(axis=1) <= r
    if p == 1:
        return diff.sum(axis=1) <= r
    return (diff**p).sum(axis=1) <= r**p


def _cell_coords(coords: np.ndarray, m: int) -> np.ndarray:
    return np.minimum(np.floor(coords * m).astype(np.int64), m - 1)


def _ravel(cells: np.ndarray, m: int) -> np.ndarray:
    flat = np.zeros(len(cells), dtype=np.int64)
    for j in range(cells.shape[1]):
        flat = flat * m + cells[:, j]
    return flat


def rgg_pairs(points: PointSet, r: float, p_norm=2) -> np.ndarray:
    """Edges ``u < v`` of the geometric graph, found by bucketing.

    Points are hashed into buckets of side at least ``r`` and only pairs in
    the same or adjacent buckets are compared.
    """
    if not r > 0:
        raise ValueError("radius must be positive")
    p = parse_norm(p_norm)
    X = points.coords
    n, d = X.shape
    m = max(1, int(math.floor(1.0 / r)))
    m = min(m, int(2 ** (62 / d)))
    bc = _cell_coords(X, m)
    keys = _ravel(bc, m)
    order = np.argsort(keys, kind="stable")
    skeys = keys[order]
    sbc = bc[order]
    Xs = X[order]
    pos = np.arange(n, dtype=np.int64)

    found = []
    offsets = [o for o in itertools.product((-1, 0, 1), repeat=d) if o > (0,) * d]
    # same bucket: candidates after the current position
    hi = np.searchsorted(skeys, skeys, side="right")
    found.append(_scan(Xs, pos + 1, hi, r, p))
    for o in offsets:
        tgt = sbc + np.asarray(o)
        ok = np.all((tgt >= 0) & (tgt < m), axis=1)
        tkey = _ravel(np.where(ok[:, None], tgt, 0), m)
        lo = np.searchsorted(skeys, tkey, side="left")
        hi = np.searchsorted(skeys, tkey, side="right")
        hi = np.where(ok, hi, lo)
        found.append(_scan(Xs, lo, hi, r, p))
    pairs = np.concatenate(found) if found else np.empty((0, 2), np.int64)
    pairs = order[pairs]
    pairs.sort(axis=1)
    return pairs


def _scan(Xs, lo, hi, r, p) -> np.ndarray:
    """Pairs ``(i, j)`` of sorted positions, ``j`` in ``[lo[i], hi[i])``, within ``r``."""
    counts = np.maximum(hi - lo, 0)
    out = []
    cum = np.cumsum(counts)
    start = 0
    n = len(counts)
    while start < n:
        base = cum[start - 1] if start else 0
        stop = int(np.searchsorted(cum, base + _PAIR_CHUNK, side="right"))
        stop = max(stop, start + 1)
        c = counts[start:stop]
        total = int(c.sum())
        if total:
            src = np.repeat(np.arange(start, stop, dtype=np.int64), c)
            first = np.cumsum(c) - c
            dst = np.repeat(lo[start:stop], c) + (np.arange(total) - np.repeat(first, c))
            keep = _within(Xs[src], Xs[dst], r, p)
            out.append(np.column_stack([src[keep], dst[keep]]))
        start = stop
    return np.concatenate(out) if out else np.empty((0, 2), np.int64)


def build_rgg(points: PointSet, r: float, p_norm=2, **graph_kwargs) -> Graph:
    """Materialise the geometric graph: edge iff l_p distance <= r."""
    return Graph.from_edges(points.n, rgg_pairs(points, r, p_norm), **graph_kwargs)


class GeometricGraph:
    """Adjacency of a geometric graph answered from coordinates.

    Equivalent to :func:`build_rgg` but never stores edges, which matters at
    the radii the construction uses (tens of millions of edges).
    """

    def __init__(self, points: PointSet, r: float, p_norm=2):
        if not r > 0:
            raise ValueError("radius must be positive")
        self.points = points
        self.r = float(r)
        self.p_norm = parse_norm(p_norm)
        self.n = points.n

    def has_edges(self, us, vs) -> np.ndarray:
        us = np.asarray(us, dtype=np.int64).reshape(-1)
        vs = np.asarray(vs, dtype=np.int64).reshape(-1)
        X = self.points.coords
        return _within(X[us], X[vs], self.r, self.p_norm) & (us != vs)

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.has_edges([u], [v])[0])

    def neighbor_mask(self, v: int) -> np.ndarray:
        X = self.points.coords
        mask = _within(X, np.broadcast_to(X[v], X.shape), self.r, self.p_norm)
        mask[v] = False
        return mask

    def neighbors(self, v: int) -> np.ndarray:
        return np.flatnonzero(self.neighbor_mask(v))

    @cached_property
    def num_edges(self) -> int:
        return len(rgg_pairs(self.points, self.r, self.p_norm))

    def to_graph(self, **graph_kwargs) -> Graph:
        return build_rgg(self.points, self.r, self.p_norm, **graph_kwargs)


# cell grid -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CellGrid:
    """Partition of the cube into ``cells_per_axis**d`` cells of side ``side``.

    Cells are addressed by flat row-major ids, whose integer order is the
    lexicographic order of the ``d``-tuples; :meth:`index` and :meth:`flat`
    convert. ``members`` only holds occupied cells.
    """

    side: float
    cells_per_axis: int
    d: int
    cell_of: np.ndarray
    members: dict = field(repr=False)

    @classmethod
    def from_points(cls, points: PointSet, cells_per_axis: int) -> "CellGrid":
        m = int(cells_per_axis)
        if m < 1:
            raise ValueError("need at least one cell per axis")
        flat = _ravel(_cell_coords(points.coords, m), m)
        flat.setflags(write=False)
        order = np.argsort(flat, kind="stable")
        ids, starts = np.unique(flat[order], return_index=True)
        groups = np.split(order, starts[1:])
        members = {int(c): g for c, g in zip(ids, groups)}
        return cls(side=1.0 / m, cells_per_axis=m, d=points.d, cell_of=flat, members=members)

    @classmethod
    def for_params(cls, points: PointSet, params: ParamSet) -> "CellGrid":
        return cls.from_points(points, params.cells_per_axis)

    @property
    def n_cells(self) -> int:
        return self.cells_per_axis**self.d

    def index(self, cid: int) -> tuple:
        out = []
        for _ in range(self.d):
            cid, rem = divmod(int(cid), self.cells_per_axis)
            out.append(rem)
        return tuple(reversed(out))

    def flat(self, cell) -> int:
        m = self.cells_per_axis
        if len(cell) != self.d or any(not 0 <= c < m for c in cell):
            raise ValueError(f"invalid cell index {cell}")
        cid = 0
        for c in cell:
            cid = cid * m + int(c)
        return cid

    def vertices(self, cid: int) -> np.ndarray:
        """Sorted vertex ids in cell ``cid`` (empty for unoccupied cells)."""
        return self.members.get(int(cid), np.empty(0, np.int64))

    def count(self, cid: int) -> int:
        return len(self.vertices(cid))

    @cached_property
    def _offsets(self) -> np.ndarray:
        offs = [o for o in itertools.product((-1, 0, 1), repeat=self.d) if any(o)]
        return np.array(offs, dtype=np.int64).reshape(-1, self.d)

    def friend_ids(self, cid: int) -> list:
        base = np.array(self.index(cid), dtype=np.int64)
        nb = base + self._offsets
        ok = np.all((nb >= 0) & (nb < self.cells_per_axis), axis=1)
        return sorted(int(x) for x in _ravel(nb[ok], self.cells_per_axis))

    def are_friends(self, a: int, b: int) -> bool:
        ia, ib = self.index(a), self.index(b)
        return a != b and all(abs(x - y) <= 1 for x, y in zip(ia, ib))


def friends(cell: tuple, grid: CellGrid) -> list:
    """Cells whose index differs from ``cell`` by at most one in every coordinate."""
    return [grid.index(c) for c in grid.friend_ids(grid.flat(cell))]
