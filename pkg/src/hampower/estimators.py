"""Estimator-style wrappers around the functional API.

Points are passed as an ``(n, d)`` array in ``[0, 1]^d``; everything learned
from them ends in an underscore, as usual.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .constructor import construct
from .geometry import CellGrid, GeometricGraph, PointSet, derive_params, parse_norm, rgg_pairs
from .graph import Graph, UnionGraph
from .verification import verify_kth_power


def _points(X) -> PointSet:
    X = check_array(X, dtype=np.float64, ensure_min_samples=1)
    return PointSet(X)


def _radius(r, C, n: int, d: int) -> float:
    if (r is None) == (C is None):
        raise ValueError("set exactly one of r and C")
    return float(r) if r is not None else (C / n) ** (1 / d)


class RandomGeometricGraph(BaseEstimator):
    """Adjacency of the geometric graph on the given points."""

    def __init__(self, r=None, C=None, p_norm=2):
        self.r = r
        self.C = C
        self.p_norm = p_norm

    def fit(self, X, y=None):
        pts = _points(X)
        self.r_ = _radius(self.r, self.C, pts.n, pts.d)
        self.p_ = parse_norm(self.p_norm)
        self.n_features_in_ = pts.d
        self.edges_ = rgg_pairs(pts, self.r_, self.p_)
        self.n_vertices_ = pts.n
        return self

    def transform(self, X=None):
        """Sparse symmetric adjacency; ``X`` defaults to the fitted points."""
        check_is_fitted(self, "edges_")
        if X is None:
            n, e = self.n_vertices_, self.edges_
        else:
            pts = _points(X)
            if pts.d != self.n_features_in_:
                raise ValueError(f"expected {self.n_features_in_} coordinates, got {pts.d}")
            n, e = pts.n, rgg_pairs(pts, self.r_, self.p_)
        data = np.ones(2 * len(e), dtype=bool)
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


class PerturbedCycleConstructor(BaseEstimator):
    """Build a k-th power of a Hamilton cycle in ``host ∪ G(X, r)``.

    ``fit`` raises :class:`~hampower.constructor.ConstructionFailure` when the
    instance is outside what the construction can handle.
    """

    def __init__(self, k=1, alpha=0.5, C=None, r=None, p_norm=2, L=None, retries=5):
        self.k = k
        self.alpha = alpha
        self.C = C
        self.r = r
        self.p_norm = p_norm
        self.L = L
        self.retries = retries

    def fit(self, X, y=None, host: Graph | None = None):
        if host is None:
            raise ValueError("fit needs the dense host graph: fit(X, host=H)")
        pts = _points(X)
        if host.n != pts.n:
            raise ValueError(f"host has {host.n} vertices but X has {pts.n} rows")
        r = _radius(self.r, self.C, pts.n, pts.d)
        params = derive_params(pts.n, pts.d, self.k, self.alpha, r**pts.d * pts.n,
                               p_norm=self.p_norm, L_override=self.L)
        G = GeometricGraph(pts, params.r, params.p_norm)
        grid = CellGrid.for_params(pts, params)
        order, plan = construct(host, G, grid, params, retries=self.retries, return_plan=True)
        self.params_ = params
        self.grid_ = grid
        self.plan_ = plan
        self.order_ = order.order
        self.verified_ = bool(verify_kth_power(order, UnionGraph(host, G), params.k))
        self.n_features_in_ = pts.d
        return self

    def transform(self, X=None):
        """Position of each vertex in the cyclic order."""
        check_is_fitted(self, "order_")
        pos = np.empty(len(self.order_), dtype=np.int64)
        pos[self.order_] = np.arange(len(self.order_))
        return pos
