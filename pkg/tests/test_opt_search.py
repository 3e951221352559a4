import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coachsim.code_model import ArrayCodeSpec, ParityCheckMatrix, build_array_ldpc, example_matrix_8_4
from coachsim.greepair import RepairTask, repair_node
from coachsim.opt_search import SearchCapExceeded, SearchGraph, _moves, enumerate_plans, opt1, opt2, replay


def dp_reference(task, cost, zero):
    """Memoised search over (remaining, cached) states; first optimum in enumeration order."""
    memo = {}

    def best(remaining, cached):
        if not remaining:
            return zero, (), 0, 0
        key = (remaining, cached)
        if key not in memo:
            found = None
            for step, dt, dp, new_cached in _moves(task, remaining, cached):
                c, plan, t, p = best(remaining - {step[0]}, new_cached)
                total = cost(dt, dp) + c
                if found is None or total < found[0]:
                    found = (total, (step,) + plan, dt + t, dp + p)
            memo[key] = found
        return memo[key]

    return best(frozenset(task.L), frozenset())


class Lex(tuple):
    def __add__(self, other):
        return Lex(a + b for a, b in zip(self, other))


@pytest.fixture(scope="module")
def H8():
    return example_matrix_8_4()


@pytest.fixture(scope="module")
def H184():
    return build_array_ldpc(ArrayCodeSpec(23, 2, 8))


def test_single_symbol_plans(H8):
    plans = {(p[0][1].row if p[0][1] else None, t, f) for p, t, f in enumerate_plans(RepairTask(H8, {8}))}
    assert plans == {(4, 3, 0), (None, 0, 1)}


def test_examples(H8):
    task = RepairTask(H8, {1, 2}, {3, 4})
    assert min(f for _, _, f in enumerate_plans(task)) == 2
    _, tau, phi = opt1(task)
    assert (phi, tau) == (2, 0)

    task = RepairTask(H8, {1, 2})
    plan, tau, phi = opt1(task)
    assert (phi, tau) == (0, 3)
    assert replay(task, plan) == (3, 0)

    task = RepairTask(H8, {8})
    plan, cost = opt2(task, 1, 10)
    assert cost == 3 and plan[0][1] is not None
    plan, cost = opt2(task, 1, 2)
    assert cost == 2 and plan == ((8, None),)


def test_empty_task(H8):
    task = RepairTask(H8, set())
    assert list(enumerate_plans(task)) == [((), 0, 0)]
    assert opt1(task) == ((), 0, 0)
    assert opt2(task, 1, 5) == ((), 0.0)


def test_cap(H184):
    task = RepairTask(H184, set(range(1, 8)))
    with pytest.raises(SearchCapExceeded):
        opt1(task)
    with pytest.raises(SearchCapExceeded):
        next(enumerate_plans(task))
    assert opt1(task, cap=7)[2] >= 0


def test_replay_rejects_bad_plans(H8):
    task = RepairTask(H8, {1, 2}, {3, 4})
    eq = H8.equations_for(1)[0]
    with pytest.raises(ValueError):
        replay(task, ((1, eq), (2, None)))  # helper 3 is down
    with pytest.raises(ValueError):
        replay(task, ((1, None),))
    with pytest.raises(ValueError):
        replay(task, ((1, None), (1, None)))


def test_graph_belongs_to_task(H8):
    g = SearchGraph(RepairTask(H8, {1}))
    with pytest.raises(ValueError):
        opt1(RepairTask(H8, {2}), graph=g)


def isolated_symbols(H, count):
    # symbols whose checks share nothing with each other: every equation stays feasible
    chosen, blocked = [], set()
    for s in range(H.n, 0, -1):
        eqs = H.equations_for(s)
        if len(eqs) != 2 or s in blocked:
            continue
        support = {s} | set().union(*(e.helpers for e in eqs))
        if support & blocked:
            continue
        chosen.append(s)
        blocked |= support
        if len(chosen) == count:
            return chosen
    raise AssertionError("not enough isolated symbols")


@pytest.mark.parametrize("size", [1, 2, 3, 4])
def test_plan_count_closed_form(H184, size):
    L = isolated_symbols(H184, size)
    task = RepairTask(H184, L)
    count = sum(1 for _ in enumerate_plans(task))
    assert count == math.factorial(size) * 3**size


def test_plan_count_upper_bound(H184):
    rng = np.random.default_rng(2)
    for _ in range(20):
        start = int(rng.integers(0, H184.n - 3))
        task = RepairTask(H184, set(range(start + 1, start + 4)), set(range(start + 4, start + 7)) & set(range(1, 185)))
        assert sum(1 for _ in enumerate_plans(task)) <= math.factorial(3) * 3**3


def random_block_task(H, per_node, rng, p_lost):
    m = -(-H.n // per_node)
    blocks = [set(range(i * per_node + 1, min((i + 1) * per_node, H.n) + 1)) for i in range(m)]
    me = int(rng.integers(m))
    G = set()
    for i in range(m):
        if i != me and rng.random() < p_lost:
            G |= blocks[i]
    return RepairTask(H, blocks[me], G)


def check_against_oracles(task, pairs=((1, 10), (1, 20), (1, 1.2))):
    plans = list(enumerate_plans(task))
    for plan, t, p in plans:
        assert replay(task, plan) == (t, p)
    graph = SearchGraph(task)
    plan1, t1, p1 = opt1(task, graph=graph)
    assert (p1, t1) == min((p, t) for _, t, p in plans)
    assert replay(task, plan1) == (t1, p1)
    ref = dp_reference(task, lambda t, p: Lex((p, t)), Lex((0, 0)))
    assert plan1 == ref[1]
    g = repair_node(task)
    assert (g.phi, g.tau) >= (p1, t1)
    for rd, rb in pairs:
        plan2, c2 = opt2(task, rd, rb, graph=graph)
        brute = min(rd * t + rb * p for _, t, p in plans)
        assert c2 == pytest.approx(brute)
        t2, p2 = replay(task, plan2)
        assert rd * t2 + rb * p2 == pytest.approx(c2)
        assert g.weighted(rd, rb) >= c2 - 1e-9


@pytest.mark.parametrize("per_node", [3, 4])
def test_matches_enumeration_on_array_code(H184, per_node):
    rng = np.random.default_rng(per_node)
    for _ in range(60):
        check_against_oracles(random_block_task(H184, per_node, rng, float(rng.uniform(0, 0.6))))


def test_six_symbol_nodes_match_dp(H184):
    rng = np.random.default_rng(11)
    for _ in range(15):
        task = random_block_task(H184, 6, rng, float(rng.uniform(0, 0.3)))
        graph = SearchGraph(task)
        plan1, t1, p1 = opt1(task, graph=graph)
        ref = dp_reference(task, lambda t, p: Lex((p, t)), Lex((0, 0)))
        assert (plan1, t1, p1) == ref[1:]
        for rd, rb in ((1, 10), (1, 20)):
            ref2 = dp_reference(task, lambda t, p: rd * t + rb * p, 0.0)
            plan2, c2 = opt2(task, rd, rb, graph=graph)
            assert c2 == pytest.approx(ref2[0])


@st.composite
def small_tasks(draw):
    n = draw(st.integers(4, 10))
    n_rows = draw(st.integers(1, n - 1))
    rows = [tuple(sorted(draw(st.sets(st.integers(1, n), min_size=2, max_size=min(n, 4))))) for _ in range(n_rows)]
    H = ParityCheckMatrix(n, tuple(rows))
    L = draw(st.sets(st.integers(1, n), max_size=min(n, 4)))
    G = draw(st.sets(st.integers(1, n).filter(lambda s: s not in L), max_size=3))
    return RepairTask(H, L, G)


@settings(max_examples=300, deadline=None)
@given(small_tasks())
def test_random_small_tasks(task):
    check_against_oracles(task)
