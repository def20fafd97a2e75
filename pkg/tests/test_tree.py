import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rtfmt.tree import CLOSED, INF, OPEN, OPEN_NEW, UNVISITED, PlanTree, TreeError

from oracles import acyclic, path_sum


def chain(points, r_n=10.0):
    """Tree over ``points`` with each point attached to the previous one."""
    t = PlanTree(points, 0, r_n, 20.0, 20.0)
    for i in range(1, len(points)):
        t.attach(i - 1, i, CLOSED)
    return t


def random_tree(seed, n=50, size=10.0):
    rng = np.random.default_rng(seed)
    pts = (rng.random((n, 2)) * size).tolist()
    t = PlanTree(pts, 0, 3.0, size, size)
    for i in range(1, n):
        t.attach(int(rng.integers(0, i)), i, CLOSED)
    return t, rng


def diamond():
    #      a
    # root   c
    #      b
    t = PlanTree([(0, 5), (1, 6), (1, 4), (2, 5)], 0, 3.0, 10.0, 10.0)
    t.attach(0, 1, CLOSED)
    t.attach(0, 2, CLOSED)
    t.attach(1, 3, CLOSED)
    return t


def test_near_empty_and_order():
    t = PlanTree([(5, 5)], 0, 2.0, 10, 10)
    assert t.near((1, 1), (OPEN, CLOSED, UNVISITED)) == []
    t = PlanTree([(0, 0), (2, 0), (1, 0), (4, 0)], 0, 2.0, 10, 10)
    assert t.near((0, 0), UNVISITED) == [2, 1]


def test_near_matches_linear_scan():
    rng = np.random.default_rng(4)
    pts = rng.random((1000, 2)) * 50
    t = PlanTree(pts.tolist(), 0, 3.5, 50, 50)
    for c in rng.random((30, 2)) * 50:
        got = t.near(c, (UNVISITED, OPEN))
        d = np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1])
        expect = sorted(np.flatnonzero(d <= 3.5).tolist(), key=lambda k: (d[k], k))
        assert got == expect


def test_precomputed_neighbors_match_grid():
    rng = np.random.default_rng(5)
    pts = (rng.random((400, 2)) * 30).tolist()
    a = PlanTree(pts, 0, 2.5, 30, 30)
    b = PlanTree(pts, 0, 2.5, 30, 30)
    b.precompute_neighbors()
    for i in range(0, 400, 7):
        assert sorted(k for _, k in a.neighbors(i)) == sorted(k for _, k in b.neighbors(i))
        assert [k for _, k in b.neighbors(i)] == sorted(k for _, k in b.neighbors(i))


def test_block_leaf_and_internal():
    t = chain([(0, 0), (1, 0), (2, 0), (3, 0), (4, 0)])
    t.set_blocked(4)
    assert [c == INF for c in t.cost] == [False, False, False, False, True]
    t.set_unblocked(4)
    t.set_blocked(1)
    assert sum(c == INF for c in t.cost) == 4
    t.check_invariants()


def test_unblock_chain_costs():
    t = chain([(0, 0), (2, 0), (2, 5)])
    t.set_blocked(1)
    t.set_blocked(2)
    t.set_unblocked(2)
    assert t.cost[2] == INF  # parent still blocked
    t.set_unblocked(1)
    assert t.cost[1] == 2.0 and t.cost[2] == 7.0


def test_update_parent_child():
    t = PlanTree([(0, 0), (3, 0), (3, 3), (0, 3)], 0, 10.0, 10, 10)
    t.attach(0, 1, CLOSED)
    t.attach(1, 2, CLOSED)
    t.attach(2, 3, CLOSED)
    before = t.cost[3]
    t.update_parent_child(0, 3)
    assert t.cost[3] < before and t.cost[3] == 3.0
    assert 3 not in t.children[2] and 3 in t.children[0]
    with pytest.raises(TreeError):
        t.update_parent_child(2, 1)
    with pytest.raises(TreeError):
        t.update_parent_child(1, 0)
    t.check_invariants()


def test_diamond_reattach():
    t = diamond()
    t.set_blocked(1)
    assert t.cost[3] == INF
    t.update_parent_child(2, 3)
    t.recalculate_children_cost(3)
    assert t.cost[3] == pytest.approx(2 * math.sqrt(2))
    t.check_invariants()


def test_recalculate_children_cost():
    t = chain([(0, 0), (1, 0), (2, 0), (3, 0)])
    t.recalculate_children_cost(3)
    before = list(t.cost)
    # move the first child one unit further from the root
    t.xs[0] = -1.0
    t.elen[1] = 2.0
    t.cost[1] = 2.0
    t.recalculate_children_cost(1)
    assert [a - b for a, b in zip(t.cost[1:], before[1:])] == [1.0, 1.0, 1.0]


def test_random_tree_path_sums():
    t, _ = random_tree(1)
    for i in range(len(t)):
        assert t.cost[i] == pytest.approx(path_sum(t, i), abs=1e-9)
    t.check_invariants()


def test_reroot_flips_one_edge():
    t = chain([(0, 0), (1, 0), (1, 2)])
    edges = {frozenset((i, t.parent[i])) for i in range(3) if t.parent[i] is not None}
    t.reroot(1)
    assert t.root == 1 and t.cost[1] == 0 and t.cost[0] == 1.0 and t.cost[2] == 2.0
    assert {frozenset((i, t.parent[i])) for i in range(3) if t.parent[i] is not None} == edges
    t.reroot(2)
    for i in range(3):
        assert t.cost[i] == pytest.approx(path_sum(t, i))
    with pytest.raises(TreeError):
        t.reroot(0)
    t.check_invariants()


def test_pop_min_open_lazy_entries():
    t = PlanTree([(0, 0), (3, 0), (0, 4)], 0, 10.0, 10, 10)
    assert t.pop_min_open() == 0
    t.set_status(0, CLOSED)
    t.attach(0, 1, OPEN)
    t.attach(1, 2, OPEN)
    assert t.cost[2] == 8.0
    # the entry recorded at cost 8 goes stale
    t.update_parent_child(0, 2)
    assert t.pop_min_open() == 1
    t.set_status(1, CLOSED)
    assert t.pop_min_open() == 2
    t.set_status(2, CLOSED)
    assert t.pop_min_open() is None


def test_attach_twice_rejected():
    t = chain([(0, 0), (1, 0)])
    with pytest.raises(TreeError):
        t.attach(0, 1)


def test_dump_and_node():
    t = chain([(0, 0), (1, 0)])
    lines = t.dump().splitlines()
    assert lines[0] == "id,x,y,parent,cost,status,blocked"
    assert lines[2] == "1,1.0,0.0,0,1.0,CLOSED,0"
    n = t.node(1)
    assert n.parent == 0 and n.cost == 1.0 and n.status == CLOSED


def test_add_and_find_sample():
    t = PlanTree([(0, 0), (1, 0)], 0, 2.0, 10, 10)
    t.neighbors(0)
    k = t.add_sample((0.5, 0.5))
    assert k == 2 and t.find_sample((0.5, 0.5)) == 2
    assert 2 in [i for _, i in t.neighbors(0)]
    assert t.find_sample((3, 3)) is None


def test_check_invariants_detects_corruption():
    t = chain([(0, 0), (1, 0), (2, 0)])
    t.cost[2] = 5.0
    with pytest.raises(TreeError):
        t.check_invariants()


ops = st.lists(st.tuples(st.sampled_from(["block", "unblock", "reparent", "reroot"]),
                         st.integers(0, 49), st.integers(0, 49)), max_size=80)


@given(st.integers(0, 1000), ops)
def test_operations_keep_invariants(seed, seq):
    t, _ = random_tree(seed)
    for op, a, b in seq:
        if op == "block" and a != t.root:
            t.set_blocked(a)
        elif op == "unblock":
            t.set_unblocked(a)
        elif op == "reparent" and a != t.root and not t.is_ancestor(a, b):
            t.update_parent_child(b, a)
            t.recalculate_children_cost(a)
        elif op == "reroot" and t.children[t.root] and not t.blocked[t.children[t.root][0]]:
            t.reroot(t.children[t.root][0])
        t.check_invariants()
        assert acyclic(t)
        # blocked closure: infinite cost exactly on blocked nodes and their subtrees
        for i in range(len(t)):
            cut = any(t.blocked[k] for k in t.path_to(i))
            assert (t.cost[i] == INF) == cut
            if not cut:
                assert t.cost[i] == pytest.approx(path_sum(t, i), abs=1e-9)
