import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coachsim.code_model import ArrayCodeSpec, ParityCheckMatrix, build_array_ldpc, example_matrix_8_4, systematic_encode
from coachsim.churn_sim import place_symbols
from coachsim.greepair import RepairError, RepairTask, phase1, phase2, repair_node


def reference_repair(H, L, G):
    """Straightforward re-statement of the two phases with full rescans.

    Returns (tau, phi, [(target, source, row)]).
    """
    L, G = set(L), set(G)
    remaining, unavailable, cached = set(L), L | G, set()
    pool = [[eq, set(eq.helpers)] for s in sorted(L) for eq in H.equations_for(s)]
    r1 = [e for e in pool if not e[1] & unavailable]
    r2 = [e for e in pool if e[1] & unavailable]
    tau = phi = 0
    log = []

    def settle(t, used):
        nonlocal r1, r2
        r1 = [e for e in r1 if e[0].target != t]
        r2 = [e for e in r2 if e[0].target != t]
        remaining.discard(t)
        unavailable.discard(t)
        cached.update(used)
        for e in r1 + r2:
            e[1] -= cached

    def r1_key(e):
        return (len(e[1]), e[0].target, e[0].row)

    while r1 and remaining:
        e = min(r1, key=r1_key)
        t = e[0].target
        tau += len(e[0].helpers - cached)
        log.append((t, "local", e[0].row))
        settle(t, e[0].helpers | {t})
        promoted = set()
        for cand in sorted(r2, key=r1_key):
            tc = cand[0].target
            if cand[1] & unavailable or tc in promoted:
                continue
            promoted.add(tc)
        for tc in promoted:
            best = min((c for c in r2 if c[0].target == tc and not c[1] & unavailable), key=r1_key)
            r2 = [c for c in r2 if c[0].target != tc]
            r1.append(best)

    for t in sorted(remaining):
        if not H.equations_for(t):
            phi += 1
            log.append((t, "bs", None))
            settle(t, {t})

    while remaining:
        freq = {s: sum(1 for e in r2 if s in e[1]) for s in remaining}
        e = min(r2, key=lambda e: (len(e[1] & unavailable), -freq[e[0].target], e[0].target, e[0].row))
        t = e[0].target
        if e[1] & unavailable:
            phi += 1
            log.append((t, "bs", None))
            settle(t, {t})
        else:
            tau += len(e[0].helpers - cached)
            log.append((t, "local", e[0].row))
            settle(t, e[0].helpers | {t})
    return tau, phi, log


def summary(out):
    return out.tau, out.phi, [(a.target, a.source, a.row) for a in out.actions]


@pytest.fixture(scope="module")
def H8():
    return example_matrix_8_4()


@pytest.fixture(scope="module")
def H184():
    return build_array_ldpc(ArrayCodeSpec(23, 2, 8))


# --- worked examples -----------------------------------------------------------

def test_two_lost_no_other_failures(H8):
    out, pool = phase1(RepairTask(H8, {1, 2}))
    assert [(a.target, a.downloaded) for a in out.actions] == [(1, (3, 7)), (2, (4,))]
    assert (out.tau, out.phi) == (3, 0)
    assert not pool.remaining
    final = phase2(RepairTask(H8, {1, 2}), pool, out)
    assert final is out and (final.tau, final.phi) == (3, 0)


def test_two_lost_with_neighbour_down(H8):
    task = RepairTask(H8, {1, 2}, {3, 4})
    out, pool = phase1(task)
    assert out.actions == [] and out.phi == 0
    assert not pool.r1
    assert [sorted(e.reduced) for e in pool.r2] == [[3, 7], [2, 4], [1, 4], [4, 7, 8]]
    assert [e.eq.row for e in pool.r2] == [2, 3, 3, 4]
    final = phase2(task, pool, out)
    assert [(a.target, a.source) for a in final.actions] == [(1, "bs"), (2, "bs")]
    assert (final.tau, final.phi) == (0, 2)


def test_symbol_outside_every_check():
    H = ParityCheckMatrix(4, ((1, 2),))
    out = repair_node(RepairTask(H, {1, 3}))
    assert [(a.target, a.source) for a in out.actions] == [(1, "local"), (3, "bs")]
    assert (out.tau, out.phi) == (1, 1)
    # symbol 4 sits in no check: fetched before the phase-two choices
    H = ParityCheckMatrix(5, ((1, 2, 3),))
    out = repair_node(RepairTask(H, {1, 3, 4}))
    assert [(a.target, a.source) for a in out.actions] == [(4, "bs"), (1, "bs"), (3, "local")]
    assert (out.tau, out.phi) == (1, 2)


def test_single_symbol(H8):
    out = repair_node(RepairTask(H8, {8}))
    assert (out.tau, out.phi) == (3, 0)
    assert out.actions[0].downloaded == (2, 4, 7)
    out = repair_node(RepairTask(H8, {1}, {3, 4}))
    assert (out.tau, out.phi) == (0, 1)


def test_bit_values_on_example(H8):
    rng = np.random.default_rng(0)
    for _ in range(20):
        cw = systematic_encode(H8, rng.integers(0, 2, 4))
        for L, G in [({1, 2}, set()), ({1, 2}, {3, 4}), ({8}, set()), ({5, 6}, {7, 8})]:
            out = repair_node(RepairTask(H8, L, G, cw))
            assert {s: cw[s - 1] for s in L} == out.values


def test_task_validation(H8):
    with pytest.raises(ValueError):
        RepairTask(H8, {1, 2}, {2})
    with pytest.raises(ValueError):
        RepairTask(H8, {0})
    with pytest.raises(ValueError):
        RepairTask(H8, {1}, {9})
    with pytest.raises(ValueError):
        RepairTask(H8, {1}, codeword=np.zeros(7))


def test_pool_exhaustion_is_reported(H8):
    task = RepairTask(H8, {1, 2}, {3, 4})
    out, pool = phase1(task)
    pool.alive[:] = [False] * len(pool.alive)  # drop every equation behind the pool's back
    with pytest.raises(RepairError):
        phase2(task, pool, out)


# --- properties ------------------------------------------------------------------

def check_outcome(task, out):
    targets = [a.target for a in out.actions]
    assert sorted(targets) == sorted(task.L)
    assert out.phi == sum(a.source == "bs" for a in out.actions)
    downloaded = [h for a in out.actions for h in a.downloaded]
    assert len(downloaded) == len(set(downloaded)) == out.tau
    assert not set(downloaded) & (task.L | task.G)


def random_pattern(H, per_node, rng, p_lost):
    m = -(-H.n // per_node)
    blocks = place_symbols(H.n, m)
    lost = [i for i in range(m) if rng.random() < p_lost]
    me = int(rng.integers(m))
    if me not in lost:
        lost.append(me)
    L = frozenset(blocks[me])
    G = frozenset(s for i in lost if i != me for s in blocks[i])
    return L, G


@pytest.mark.parametrize(
    "q,kk,per_node,trials",
    [(23, 8, 3, 1000), (23, 8, 6, 1000), (31, 8, 10, 1000), (227, 4, 38, 1000), (257, 8, 86, 200)],
)
def test_bit_exact_and_matches_reference(q, kk, per_node, trials):
    H = build_array_ldpc(ArrayCodeSpec(q, 2, kk))
    rng = np.random.default_rng(q * 100 + per_node)
    for _ in range(trials):
        L, G = random_pattern(H, per_node, rng, float(rng.uniform(0, 0.7)))
        cw = systematic_encode(H, rng.integers(0, 2, H.k))
        task = RepairTask(H, L, G, cw)
        out = repair_node(task)
        check_outcome(task, out)
        assert all(out.values[s] == cw[s - 1] for s in L)
        assert summary(out) == reference_repair(H, L, G)


@st.composite
def small_tasks(draw):
    n = draw(st.integers(4, 12))
    n_rows = draw(st.integers(1, n - 1))
    rows = [tuple(sorted(draw(st.sets(st.integers(1, n), min_size=2, max_size=min(n, 5))))) for _ in range(n_rows)]
    H = ParityCheckMatrix(n, tuple(rows))
    L = draw(st.sets(st.integers(1, n), min_size=1, max_size=min(n, 6)))
    G = draw(st.sets(st.integers(1, n).filter(lambda s: s not in L), max_size=4))
    return H, frozenset(L), frozenset(G)


@settings(max_examples=400, deadline=None)
@given(small_tasks(), st.integers(0, 2**32 - 1))
def test_random_tasks(t, seed):
    H, L, G = t
    cw = systematic_encode(H, np.random.default_rng(seed).integers(0, 2, H.k))
    task = RepairTask(H, L, G, cw)
    first, _ = phase1(RepairTask(H, L, G))
    assert first.phi == 0
    out = repair_node(task)
    check_outcome(task, out)
    assert all(out.values[s] == cw[s - 1] for s in L)
    assert summary(out) == reference_repair(H, L, G)
    assert summary(repair_node(RepairTask(H, L, G))) == summary(out)


def test_phase_one_never_uses_base_station(H184):
    rng = np.random.default_rng(5)
    for _ in range(300):
        L, G = random_pattern(H184, 6, rng, 0.5)
        out, _ = phase1(RepairTask(H184, L, G))
        assert out.phi == 0
        assert all(a.source == "local" for a in out.actions)


def test_deterministic(H184):
    rng = np.random.default_rng(9)
    L, G = random_pattern(H184, 6, rng, 0.3)
    outs = {repr(summary(repair_node(RepairTask(H184, L, G)))) for _ in range(5)}
    assert len(outs) == 1


def test_large_code_repair_is_fast():
    H = build_array_ldpc(ArrayCodeSpec(503, 2, 8))
    H.equations_for(1)  # build tables outside the timed region
    rng = np.random.default_rng(1)
    L, G = random_pattern(H, 6, rng, 0.3)
    start = time.perf_counter()
    out = repair_node(RepairTask(H, L, G))
    assert time.perf_counter() - start < 1.0
    assert len(out.actions) == 6
