# How far is the greedy repair from the best possible plan on the n=184 code?
import numpy as np
from coachsim import ArrayCodeSpec, build_array_ldpc, place_symbols
from coachsim.greepair import RepairTask, repair_node
from coachsim.opt_search import SearchGraph, opt1, opt2

H = build_array_ldpc(ArrayCodeSpec(23, 2, 8))
rng = np.random.default_rng(1)
for m in (62, 31):
    blocks = place_symbols(H.n, m)
    g_tau = o_tau = g_cost = o_cost = 0.0
    for _ in range(200):
        down = [i for i in range(m) if rng.random() < 0.1]
        me = int(rng.integers(m))
        task = RepairTask(H, blocks[me], {s for i in down if i != me for s in blocks[i]})
        g = repair_node(task)
        graph = SearchGraph(task)
        g_tau += g.tau
        o_tau += opt1(task, graph=graph)[1]
        g_cost += g.weighted(1, 10)
        o_cost += opt2(task, 1, 10, graph=graph)[1]
    print(f"{H.n // m + (H.n % m > 0)} symbols/node: D2D saving {100 * (g_tau - o_tau) / g_tau:.1f}%, weighted saving {100 * (g_cost - o_cost) / g_cost:.1f}%")
