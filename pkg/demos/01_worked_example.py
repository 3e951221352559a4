# Repairing a small code by hand: which symbols get pulled from where.
import numpy as np
from coachsim import example_matrix_8_4, place_symbols, systematic_encode
from coachsim.greepair import RepairTask, repair_node
from coachsim.opt_search import enumerate_plans, opt1

H = example_matrix_8_4()
print(H.to_dense())

# four nodes, two symbols each
nodes = place_symbols(H.n, 4)
print("nodes:", nodes)

for s in (1, 2):
    print(f"s{s} =", " or ".join("+".join(f"s{h}" for h in sorted(e.helpers)) for e in H.equations_for(s)))

cw = systematic_encode(H, np.array([1, 0, 1, 1]))
print("codeword:", cw)

# node 1 lost on its own, then together with node 2
for G in (set(), set(nodes[1])):
    task = RepairTask(H, nodes[0], G, cw)
    out = repair_node(task)
    print(f"\nother losses {sorted(G) or 'none'}: tau={out.tau}  phi={out.phi}")
    for a in out.actions:
        print(f"  s{a.target} <- {a.source}", a.downloaded if a.source == "local" else "")
    print("  recovered:", out.values, "truth:", {s: int(cw[s - 1]) for s in nodes[0]})

    plan, tau, phi = opt1(RepairTask(H, nodes[0], G))
    print(f"  exhaustive best: tau={tau}  phi={phi}  ({sum(1 for _ in enumerate_plans(task))} plans)")
