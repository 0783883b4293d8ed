import dataclasses
import itertools
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from hampower.classification import classify_cells
from hampower.components import build_gamma
from hampower.constructor import (Absorber, ConstructionFailure, ConstructionPlan, Connector, ForbiddenState,
                                  Stage, build_plan, construct, insert_and_graft, step1_absorbers,
                                  step2_connectors, step3_component_cycle)
from hampower.geometry import CellGrid, GeometricGraph, PointSet, derive_params, sample_points
from hampower.graph import Graph, UnionGraph, is_complete_between
from hampower.hosts import gen_min_degree_random
from hampower.verification import CyclicOrder, brute_force_kth_power_exists, verify_kth_power


def lattice_instance(counts: dict, m: int, d: int, k: int, L: int):
    """Points spread inside chosen cells; vertices are numbered cell by cell."""
    coords = []
    for cell in sorted(counts):
        c = counts[cell]
        for i in range(c):
            frac = (i + 0.5) / c
            coords.append([(x + (frac if axis == 0 else 0.5)) / m for axis, x in enumerate(cell)])
    pts = PointSet(np.array(coords).reshape(-1, d))
    n = pts.n
    r = 2 * math.sqrt(d) / m
    base = derive_params(max(n, L), d, k, 0.5, 0.5**d * max(n, L), L_override=L)
    params = dataclasses.replace(base, n=n, cells_per_axis=m, s=1 / m, K=n / m**d, r=r)
    grid = CellGrid.from_points(pts, m)
    return pts, params, grid, GeometricGraph(pts, r)


def line_instance(counts: list, k: int, L: int):
    return lattice_instance({(i,): c for i, c in enumerate(counts) if c}, len(counts), 1, k, L)


def setup(grid, params):
    cls = classify_cells(grid, params.R)
    gamma = build_gamma(cls, grid)
    return cls, gamma, ForbiddenState(cls, gamma)


def empty_plan(**kw) -> ConstructionPlan:
    base = dict(absorbers=[], connectors=[], tree=[], F_used=[], F_star=[], forbidden_size=0, n_components=1)
    return ConstructionPlan(**(base | kw))


def runs(seq, grid):
    out = []
    for v in seq:
        c = int(grid.cell_of[v])
        if out and out[-1][0] == c:
            out[-1][1] += 1
        else:
            out.append([c, 1])
    return [tuple(x) for x in out]


# step 1 ----------------------------------------------------------------------

def test_step1_without_sparse_cells_is_a_no_op():
    pts, params, grid, G = line_instance([10, 10, 10], k=1, L=4)
    cls, gamma, state = setup(grid, params)
    before = (set(state.used), set(state.F_star))
    assert step1_absorbers(Graph.complete(pts.n), grid, cls, params, state) == []
    assert (state.used, state.F_star) == before


def test_step1_single_sparse_vertex_complete_host():
    # cell 0 holds one vertex (sparse); cells 1..4 are dense and form one component
    pts, params, grid, G = line_instance([1, 10, 10, 10, 10], k=2, L=4)
    cls, gamma, state = setup(grid, params)
    [ab] = step1_absorbers(Graph.complete(pts.n), grid, cls, params, state)
    assert ab.v == 0 and ab.host_cell == 1
    assert ab.T_v == (1, 2, 3, 4) and ab.T1 == (1, 2) and ab.T2 == (3, 4)
    assert 1 in state.used and state.in_F(1)
    state.check()


def test_step1_fails_when_neighbours_avoid_free_cells():
    pts, params, grid, G = line_instance([3, 10, 10, 10], k=1, L=4)
    # vertex 0 only sees its own (sparse) cell
    edges = [(u, v) for u, v in itertools.combinations(range(pts.n), 2) if 0 not in (u, v)] + [(0, 1), (0, 2)]
    H = Graph.from_edges(pts.n, edges)
    cls, gamma, state = setup(grid, params)
    with pytest.raises(ConstructionFailure) as info:
        step1_absorbers(H, grid, cls, params, state)
    assert info.value.stage is Stage.ABSORBER_CELL
    assert info.value.report.context["vertex"] == 0


def test_step1_updates_last_free_cell():
    # two dense cells in one component, two sparse vertices: the second absorber must
    # not take the component's last free cell
    pts, params, grid, G = line_instance([2, 10, 10], k=1, L=4)
    cls, gamma, state = setup(grid, params)
    with pytest.raises(ConstructionFailure):
        step1_absorbers(Graph.complete(pts.n), grid, cls, params, state)
    assert state.used == {1} and state.F_star == {2}


# step 2 ------------------------------------------------------------------------

def test_step2_connected_gamma_needs_no_connector():
    pts, params, grid, G = line_instance([10, 10, 10], k=1, L=4)
    cls, gamma, state = setup(grid, params)
    assert step2_connectors(Graph.complete(pts.n), grid, gamma, params, state) == ([], [])


def test_step2_two_components_complete_host():
    pts, params, grid, G = line_instance([10, 10, 0, 10, 10], k=2, L=4)
    H = Graph.complete(pts.n)
    cls, gamma, state = setup(grid, params)
    [con], tree = step2_connectors(H, grid, gamma, params, state)
    assert tree == [(0, 3)] and (con.c, con.c_prime) == (0, 3)
    assert is_complete_between(H, con.T_c, con.T_cp)
    assert set(con.T_c) <= set(grid.vertices(0).tolist())
    assert set(con.T_cp) <= set(grid.vertices(3).tolist())
    assert con.T_c == con.T_c1 + con.T_c2 and len(con.T_c1) == 2


def test_step2_consumes_singletons_first():
    counts = [8, 0, 8, 0] + [8] * 50 + [0] * 6
    pts, params, grid, G = line_instance(counts, k=1, L=4)
    cls, gamma, state = setup(grid, params)
    assert sorted(len(c) for c in gamma.components.values()) == [1, 1, 50]
    connectors, tree = step2_connectors(Graph.complete(pts.n), grid, gamma, params, state)
    assert [(c.c, c.c_prime) for c in connectors] == [(0, 4), (2, 5)]
    assert tree == [(0, 4), (2, 4)]
    T = nx.Graph(tree)
    assert nx.is_tree(T) and set(T) == set(gamma.components)
    state.check()


def test_step2_reports_missing_common_neighbourhood():
    pts, params, grid, G = line_instance([10, 0, 10], k=1, L=4)
    # no edges between the two halves, and each half is independent
    H = Graph.from_edges(pts.n, [])
    cls, gamma, state = setup(grid, params)
    with pytest.raises(ConstructionFailure) as info:
        step2_connectors(H, grid, gamma, params, state)
    assert info.value.stage is Stage.COMMON_KSET


def test_step2_reports_missing_connector_cell():
    pts, params, grid, G = line_instance([10, 0, 10], k=1, L=4)
    left = range(10)
    # S-vertices share neighbours only inside their own cell
    H = Graph.from_edges(pts.n, list(itertools.combinations(left, 2)) + list(itertools.combinations(range(10, 20), 2)))
    cls, gamma, state = setup(grid, params)
    with pytest.raises(ConstructionFailure) as info:
        step2_connectors(H, grid, gamma, params, state, retries=2)
    assert info.value.stage is Stage.CONNECTOR_CELL
    # every voter picks the same pair, so there is nothing to retry with
    assert info.value.report.context["attempts"] == 1


# step 3 ------------------------------------------------------------------------------

def test_step3_single_cell_in_connector_set():
    pts, params, grid, G = line_instance([30, 0, 30], k=2, L=4)
    con = Connector(c=0, c_prime=2, T_c=(4, 5, 6, 7), T_cp=(30, 31, 32, 33), T_c1=(4, 5), T_c2=(6, 7),
                    T_cp1=(30, 31), T_cp2=(32, 33), joins=(0, 2))
    plan = empty_plan(connectors=[con], tree=[(0, 2)], n_components=2)
    cyc = step3_component_cycle([0], plan, grid, params, G)
    assert sorted(cyc) == list(range(30))
    i = cyc.index(4)
    assert cyc[i:i + 4] == [4, 5, 6, 7]


def test_step3_degenerate_single_cell_without_connector():
    pts, params, grid, G = line_instance([30, 0, 30], k=2, L=4)
    with pytest.raises(ConstructionFailure) as info:
        step3_component_cycle([0], empty_plan(n_components=2), grid, params)
    assert info.value.stage is Stage.DEGENERATE
    # a lone single-cell component is the whole graph and is fine
    assert sorted(step3_component_cycle([0], empty_plan(), grid, params)) == list(range(30))


def test_step3_two_friend_cells():
    pts, params, grid, G = line_instance([30, 30], k=2, L=4)
    cyc = step3_component_cycle([0, 1], empty_plan(), grid, params, G)
    assert sorted(cyc) == list(range(60))
    seq = np.array(cyc)
    for j in (1, 2):
        assert G.has_edges(seq, np.roll(seq, -j)).all()


@pytest.mark.parametrize("k", [1, 2, 3])
def test_step3_intermediate_visit_consumes_k(k):
    pts, params, grid, G = line_instance([30, 30, 30], k=k, L=2 * k + 1)
    cyc = step3_component_cycle([0, 1, 2], empty_plan(), grid, params, G)
    assert runs(cyc, grid) == [(0, k), (1, k), (2, 30), (1, 30 - k), (0, 30 - k)]


def test_step3_blocks_stay_contiguous_in_2d():
    counts = {(x, y): 20 for x in range(4) for y in range(4)}
    pts, params, grid, G = lattice_instance(counts, 4, 2, 2, L=5)
    blocks = {}
    absorbers = []
    for cell in (0, 5, 15):
        vs = grid.vertices(cell)[-4:].tolist()
        absorbers.append(Absorber(v=-1, host_cell=cell, T_v=tuple(vs), T1=tuple(vs[:2]), T2=tuple(vs[2:])))
    plan = empty_plan(absorbers=absorbers)
    cyc = step3_component_cycle(list(range(16)), plan, grid, params, G)
    assert sorted(cyc) == list(range(320))
    for ab in absorbers:
        i = cyc.index(ab.T1[0])
        assert tuple(cyc[i:i + 4]) == ab.T_v


def test_step3_runs_out_of_reserve():
    # the corner root has three tree children, so the walk comes back to it three times
    counts = {(x, y): (3 if (x, y) == (0, 0) else 20) for x in range(3) for y in range(3)}
    pts, params, grid, G = lattice_instance(counts, 3, 2, 2, L=4)
    with pytest.raises(ConstructionFailure) as info:
        step3_component_cycle(list(range(9)), empty_plan(), grid, params)
    assert info.value.stage is Stage.TRAVERSAL_RESERVE


# assembly ------------------------------------------------------------------------------

def test_insert_single_component_identity():
    plan = empty_plan()
    assert insert_and_graft({0: [2, 0, 1, 3]}, plan) == CyclicOrder([2, 0, 1, 3])


def test_insert_absorber_between_halves():
    ab = Absorber(v=4, host_cell=0, T_v=(0, 1, 2, 3), T1=(0, 1), T2=(2, 3))
    order = insert_and_graft({0: [0, 1, 2, 3, 5, 6]}, empty_plan(absorbers=[ab]))
    assert order.to_line() == "0 1 4 2 3 5 6"


def test_graft_two_components_verifies():
    # two 10-vertex components; the connector halves span a clique in H
    pts, params, grid, G = line_instance([10, 0, 0, 10], k=2, L=4)
    con = Connector(c=0, c_prime=3, T_c=(0, 1, 2, 3), T_cp=(10, 11, 12, 13), T_c1=(0, 1), T_c2=(2, 3),
                    T_cp1=(10, 11), T_cp2=(12, 13), joins=(0, 3))
    H = Graph.from_edges(20, [(u, v) for u in con.T_c for v in con.T_cp])
    plan = empty_plan(connectors=[con], tree=[(0, 3)], n_components=2)
    cycles = {0: step3_component_cycle([0], plan, grid, params, G),
              3: step3_component_cycle([3], plan, grid, params, G)}
    order = insert_and_graft(cycles, plan)
    assert len(order) == 20
    assert verify_kth_power(order, UnionGraph(H, G), 2)
    assert not verify_kth_power(order, G, 2)


def test_insert_detects_inconsistent_plan():
    ab = Absorber(v=4, host_cell=0, T_v=(0, 1, 2, 3), T1=(0, 1), T2=(2, 3))
    with pytest.raises(AssertionError):
        insert_and_graft({0: [0, 2, 1, 3]}, empty_plan(absorbers=[ab]))


# full pipeline ----------------------------------------------------------------------------

def test_construct_complete_host_small():
    pts, params, grid, G = line_instance([20, 20, 20], k=1, L=4)
    order = construct(Graph.complete(60), G, grid, params)
    assert verify_kth_power(order, UnionGraph(Graph.complete(60), G), 1)


def test_construct_with_absorbers_and_connectors():
    counts = [3, 12, 12, 12, 12, 0, 12, 12, 12, 12, 12, 0, 12, 12]
    pts, params, grid, G = line_instance(counts, k=1, L=4)
    H = gen_min_degree_random(pts.n, 0.6, 3)
    order, plan = construct(H, G, grid, params, return_plan=True)
    assert len(plan.absorbers) == 3 and len(plan.connectors) == 2
    assert verify_kth_power(order, UnionGraph(H, G), 1)
    for ab in plan.absorbers:
        pos = order.positions()
        assert pos[ab.v] == (pos[ab.T1[-1]] + 1) % len(order)


def test_construct_rejects_mismatched_inputs():
    pts, params, grid, G = line_instance([20, 20], k=1, L=4)
    with pytest.raises(ValueError):
        construct(Graph.complete(39), G, grid, params)


def test_construct_is_deterministic():
    params = derive_params(3000, 1, 2, 0.5, 120)
    H = gen_min_degree_random(3000, 0.5, 9)
    pts = sample_points(3000, 1, 4)
    grid = CellGrid.for_params(pts, params)
    a, pa = construct(H, GeometricGraph(pts, params.r), grid, params, return_plan=True)
    b, pb = construct(H, GeometricGraph(pts, params.r), grid, params, return_plan=True)
    assert a.to_line() == b.to_line() and pa.to_json() == pb.to_json()


def test_small_radius_fails_cleanly():
    params = derive_params(2000, 2, 2, 0.5, 150)
    H = gen_min_degree_random(2000, 0.5, 1)
    pts = sample_points(2000, 2, 0)
    with pytest.raises(ConstructionFailure) as info:
        construct(H, GeometricGraph(pts, params.r), CellGrid.for_params(pts, params), params)
    assert info.value.stage is Stage.ABSORBER_CELL


def test_plan_json_round_trip():
    counts = [3] + [12] * 6 + [0, 12, 12, 12]
    pts, params, grid, G = line_instance(counts, k=1, L=4)
    plan, _ = build_plan(Graph.complete(pts.n), grid, params)
    back = ConstructionPlan.from_json(plan.to_json())
    assert back == plan


def _plan_invariants(plan, grid, params, gamma):
    k2 = 2 * params.k
    sets = [a.T_v for a in plan.absorbers] + [s for c in plan.connectors for s in (c.T_c, c.T_cp)]
    flat = [v for s in sets for v in s]
    assert len(flat) == len(set(flat))
    per_cell = {}
    for v in flat:
        per_cell[int(grid.cell_of[v])] = per_cell.get(int(grid.cell_of[v]), 0) + 1
    assert set(per_cell.values()) <= {k2}
    assert k2 < params.L <= params.R
    assert len(plan.tree) == gamma.n_components - 1
    if plan.tree:
        assert nx.is_tree(nx.Graph(plan.tree))
    assert not set(plan.F_used) & set(plan.F_star)
    for a in plan.absorbers:
        assert len(a.T1) == len(a.T2) == params.k and a.T1 + a.T2 == a.T_v


@given(d=st.integers(1, 3), k=st.integers(1, 3), seed=st.integers(0, 10**6),
       C_scale=st.floats(0.5, 3.0), host=st.sampled_from(["random", "complete"]))
@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
def test_soundness_and_plan_invariants(d, k, seed, C_scale, host):
    n = 1500
    # aim for mean occupancy around the dense threshold, where every stage gets exercised
    L = 2 * k + 1
    R = L + k * 3**d
    m = max(2, math.floor((n / (R * C_scale)) ** (1 / d)))
    r = 2 * math.sqrt(d) / m
    try:
        params = derive_params(n, d, k, 0.5, r**d * n * 0.999999, L_override=L)
    except ValueError:
        return
    H = Graph.complete(n) if host == "complete" else gen_min_degree_random(n, 0.5, seed)
    pts = sample_points(n, d, seed)
    grid = CellGrid.for_params(pts, params)
    G = GeometricGraph(pts, params.r)
    try:
        plan, gamma = build_plan(H, grid, params)
    except ConstructionFailure:
        return
    _plan_invariants(plan, grid, params, gamma)
    try:
        order = construct(H, G, grid, params)
    except ConstructionFailure as exc:
        assert exc.stage in (Stage.TRAVERSAL_RESERVE, Stage.DEGENERATE)
        return
    assert verify_kth_power(order, UnionGraph(H, G), k)


@given(counts=st.lists(st.integers(0, 5), min_size=1, max_size=3).filter(lambda c: 3 <= sum(c) <= 8),
       k=st.integers(1, 2), p=st.floats(0.3, 1.0), seed=st.integers(0, 10**6))
@settings(max_examples=200, deadline=None)
def test_tiny_instances_agree_with_brute_force(counts, k, p, seed):
    from conftest import random_graph
    pts, params, grid, G = line_instance(counts, k=k, L=2 * k)
    n = pts.n
    H = random_graph(n, p, np.random.default_rng(seed))
    union = Graph.from_edges(n, np.vstack([H.edges(), G.to_graph().edges()]), strict=False)
    exists = brute_force_kth_power_exists(union, k)
    try:
        order = construct(H, G, grid, params)
    except ConstructionFailure:
        return
    assert verify_kth_power(order, union, k)
    assert exists
