"""Dense/sparse cells, neighbour-density tests and the common k-set finder."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .geometry import CellGrid, ParamSet
from .graph import Graph, common_neighborhood


class CommonKSetError(ValueError):
    """No t-subset of S has a non-empty common neighbourhood."""


@dataclass(frozen=True, eq=False)
class CellClassification:
    """Cells holding at least ``threshold`` vertices are dense.

    Only the dense set is stored; the sparse set is its complement in the
    grid, which can be very large for small radii.
    """

    dense: frozenset
    threshold: int
    n_cells: int

    def is_dense(self, cid: int) -> bool:
        return cid in self.dense

    @property
    def n_sparse(self) -> int:
        return self.n_cells - len(self.dense)

    @property
    def sparse(self) -> frozenset:
        return frozenset(range(self.n_cells)) - self.dense


def classify_cells(grid: CellGrid, R: int) -> CellClassification:
    if R < 1:
        raise ValueError("threshold R must be at least 1")
    dense = frozenset(c for c, vs in grid.members.items() if len(vs) >= R)
    return CellClassification(dense=dense, threshold=int(R), n_cells=grid.n_cells)


def sparse_vertices(grid: CellGrid, cls: CellClassification) -> np.ndarray:
    """Ids of vertices lying in sparse cells, increasing."""
    keep = [vs for c, vs in grid.members.items() if c not in cls.dense]
    return np.sort(np.concatenate(keep)) if keep else np.empty(0, np.int64)


def neighbor_cell_counts(H: Graph, v: int, grid: CellGrid) -> dict:
    """Number of H-neighbours of ``v`` in each occupied cell."""
    cells = grid.cell_of[H.neighbors(v)]
    ids, counts = np.unique(cells, return_counts=True)
    return dict(zip(ids.tolist(), counts.tolist()))


def is_v_dense(cell: int, v: int, H: Graph, grid: CellGrid, k: int) -> bool:
    members = grid.vertices(cell)
    if len(members) < 2 * k:
        return False
    return int(H.has_edges(np.full(len(members), v), members).sum()) >= 2 * k


@dataclass(frozen=True, eq=False)
class CommonKSet:
    T: tuple
    witnesses: np.ndarray
    votes: int
    n: int

    @property
    def fraction(self) -> float:
        return len(self.witnesses) / self.n


def rank_common_ksets(H: Graph, S, t: int, L: int | None = None) -> list:
    """Candidate t-subsets of ``S`` ordered by votes, most first.

    ``S`` is sorted and cut to its first ``L`` members. Every vertex outside
    ``S`` with at least ``t`` neighbours in ``S`` votes for the first ``t`` of
    them; ties between subsets go to the lexicographically smaller one.
    Returns ``(subset, votes)`` pairs.
    """
    S = np.unique(np.asarray(S, dtype=np.int64))
    if L is not None:
        S = S[:L]
    if len(S) < t or t < 1:
        raise ValueError(f"need |S| >= t >= 1, got |S|={len(S)}, t={t}")
    # |S| x n incidence, transposed to n x |S| (H is symmetric)
    inc = np.stack([H.neighbor_mask(int(s)) for s in S]).T
    inc[S] = False
    hits = inc.sum(axis=1)
    voters = np.flatnonzero(hits >= t)
    if not len(voters):
        return []
    rows = inc[voters]
    # column positions of the first t neighbours in S, per voter
    first = np.argsort(~rows, axis=1, kind="stable")[:, :t]
    subsets, counts = np.unique(first, axis=0, return_counts=True)
    ranking = sorted(zip(map(tuple, subsets.tolist()), counts.tolist()), key=lambda x: (-x[1], x[0]))
    return [(tuple(int(S[i]) for i in sub), int(c)) for sub, c in ranking]


def find_common_kset(H: Graph, S, t: int, L: int | None = None, rank: int = 0) -> CommonKSet:
    """A t-subset of ``S`` with a large common neighbourhood in ``H``.

    ``rank`` selects the next-best candidates, for callers that need to retry.
    """
    ranking = rank_common_ksets(H, S, t, L)
    if rank >= len(ranking):
        raise CommonKSetError(f"no {t}-subset of S with a common neighbour (rank {rank})")
    T, votes = ranking[rank]
    witnesses = common_neighborhood(H, T)
    if not len(witnesses):
        raise CommonKSetError(f"subset {T} has no common neighbours")
    return CommonKSet(T=T, witnesses=witnesses, votes=votes, n=H.n)


def witness_cell_counts(T: CommonKSet, grid: CellGrid) -> dict:
    ids, counts = np.unique(grid.cell_of[T.witnesses], return_counts=True)
    return dict(zip(ids.tolist(), counts.tolist()))


def is_S_dense(cell: int, T: CommonKSet, grid: CellGrid, k: int) -> bool:
    return int(np.count_nonzero(grid.cell_of[T.witnesses] == cell)) >= 2 * k


# statistics ----------------------------------------------------------------

def binomial_cdf_below(n: int, p: float, R: int) -> float:
    """``P[Bin(n, p) < R]`` summed term by term in log space."""
    if R <= 0:
        return 0.0
    if R > n:
        return 1.0
    if p <= 0:
        return 1.0
    if p >= 1:
        return 0.0
    lp, lq = math.log(p), math.log1p(-p)
    logs = [math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1) + i * lp + (n - i) * lq
            for i in range(R)]
    top = max(logs)
    return min(1.0, math.exp(top) * sum(math.exp(x - top) for x in logs))


def expected_sparse_cells(params: ParamSet) -> tuple:
    """Mean and (independent-cell) variance of the number of sparse cells."""
    q = binomial_cdf_below(params.n, params.s**params.d, params.R)
    m = params.n_cells
    return m * q, m * q * (1 - q)


@dataclass
class SparseStats:
    sparse_count: int
    paper_bound_i: float
    v_sparse_max: int
    paper_bound_ii: float
    s_sparse_max: int
    paper_bound_iii: float
    n: int
    K: float
    R: int
    L: int
    gamma: float
    witness_fraction_min: float
    below_gamma: bool

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "SparseStats":
        return cls(**json.loads(text))


def sparse_stats(H: Graph, grid: CellGrid, params: ParamSet, sample_vertices: int = 200,
                 sample_sets: int = 50, rng_seed: int = 0) -> SparseStats:
    """Empirical counterparts of the few-sparse-cells bounds, on samples."""
    if sample_vertices < 1 or sample_sets < 1:
        raise ValueError("sample sizes must be positive")
    rng = np.random.default_rng(rng_seed)
    n, k, ncells = params.n, params.k, grid.n_cells
    cls = classify_cells(grid, params.R)

    v_max = 0
    for v in rng.choice(n, size=min(sample_vertices, n), replace=False):
        dense_for_v = sum(1 for c in neighbor_cell_counts(H, int(v), grid).values() if c >= 2 * k)
        v_max = max(v_max, ncells - dense_for_v)

    s_max = 0
    frac_min = 1.0
    for _ in range(sample_sets):
        S = rng.choice(n, size=params.L, replace=False)
        try:
            T = find_common_kset(H, S, 2 * k)
        except CommonKSetError:
            s_max = ncells
            frac_min = 0.0
            continue
        frac_min = min(frac_min, T.fraction)
        dense_for_S = sum(1 for c in witness_cell_counts(T, grid).values() if c >= 2 * k)
        s_max = max(s_max, ncells - dense_for_S)

    K = params.K
    return SparseStats(
        sparse_count=cls.n_sparse,
        paper_bound_i=math.exp(-K / 2) * n,
        v_sparse_max=v_max,
        paper_bound_ii=math.exp(-params.alpha * K / 2) * n,
        s_sparse_max=s_max,
        paper_bound_iii=math.exp(-params.gamma * K / 2) * n,
        n=n, K=K, R=params.R, L=params.L, gamma=params.gamma,
        witness_fraction_min=frac_min,
        below_gamma=frac_min < params.gamma,
    )
