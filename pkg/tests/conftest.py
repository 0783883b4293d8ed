"""Shared oracles: slow, obviously-correct reimplementations used as references."""

import itertools
import math

import numpy as np
import pytest

from hampower.graph import Graph


def adjacency_sets(graph) -> list:
    return [set(int(u) for u in graph.neighbors(v)) for v in range(graph.n)]


def naive_kth_power(order, adj: list, k: int):
    """Quadratic reference: first (i, j) with order[i] not adjacent to order[i+j]."""
    n = len(order)
    for i in range(n):
        for j in range(1, k + 1):
            u, w = order[i], order[(i + j) % n]
            if u != w and w not in adj[u]:
                return (i, j)
    return None


def naive_rgg_edges(coords: np.ndarray, r: float, p: float) -> set:
    n = len(coords)
    out = set()
    for u in range(n):
        for v in range(u + 1, n):
            diff = np.abs(coords[u] - coords[v])
            dist = diff.max() if math.isinf(p) else (diff**p).sum() ** (1 / p)
            if dist <= r:
                out.add((u, v))
    return out


def random_graph(n: int, p: float, rng) -> Graph:
    pairs = [(u, v) for u, v in itertools.combinations(range(n), 2) if rng.random() < p]
    return Graph.from_edges(n, np.array(pairs, dtype=np.int64).reshape(-1, 2))


def brute_chromatic(graph) -> tuple:
    """(chi, sigma) by enumerating every colouring."""
    n = graph.n
    edges = [tuple(e) for e in graph.edges().tolist()]
    for c in range(1, n + 1):
        best = None
        for col in itertools.product(range(c), repeat=n):
            if len(set(col)) != c or any(col[u] == col[v] for u, v in edges):
                continue
            smallest = min(col.count(x) for x in range(c))
            best = smallest if best is None else min(best, smallest)
        if best is not None:
            return c, best
    raise AssertionError("unreachable")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance reporting ------------------------------------------------------

ACCEPTANCE_LINES: list = []


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} :: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
