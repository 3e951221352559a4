# Per-node repair cost against the number of lost symbols, for every family.
import numpy as np
from coachsim import CostParams, expected_cost
from coachsim.cost_models import node_cost
from coachsim.presets import PRESETS

preset = PRESETS["rate-half"]
ls = np.arange(0, 25)
for s in preset.series:
    sc = s.scenario
    row = [node_cost(sc, int(l)) for l in ls if l <= sc.n]
    print(f"{s.label:5s} D2D:", " ".join(f"{float(c.d2d_symbols) / sc.F:.2f}" for c in row[:14]))
    print(f"{'':5s} BS: ", " ".join(f"{float(c.bs_symbols) / sc.F:.2f}" for c in row[:14]))

# cheap BS traffic makes losing more nodes *cheaper* for RS
rs = preset.series[0].scenario
for rb in (1.2, 12, 26):
    w = [node_cost(rs, int(l)).weighted(CostParams(1, rb)) / rs.F for l in ls]
    print(f"RS rho_bs={rb:>4}:", " ".join(f"{x:.1f}" for x in w[10:16]))

# expected cost over a window of length delta, node lifetimes exp(1)
for delta in (0.1, 0.5, 1.0):
    print(f"delta={delta}:", {s.label: round(float(expected_cost(s.scenario, 1.0, delta).weighted(CostParams(1, 12))) / s.scenario.F, 3) for s in preset.series})
