# Monte Carlo windows against the closed forms.
from coachsim import CostParams, SimConfig, simulate
from coachsim.presets import PRESETS

p = CostParams(1, 12)
for s in PRESETS["rate-half"].series:
    trials = 2000 if s.scenario.family != "ldpc" else 200
    for delta in (0.2, 0.6):
        res = simulate(SimConfig(s.scenario, delta, trials=trials, seed=3, cost_params=(p,)))
        g = res.gamma_samples(p)
        kind = "bound" if s.scenario.family == "ldpc" else "exact"
        print(f"{s.label:5s} delta={delta}: sim {g.mean():6.3f} +- {1.96 * g.std() / len(g) ** 0.5:.3f}   {kind} {res.gamma_theory(p):6.3f}")

# the full birth-death mode keeps about N lambda / mu devices in the cell
from coachsim.churn_sim import CellState, repair_window, step_window
import numpy as np

cfg = SimConfig(PRESETS["rate-half"].series[0].scenario, 1.0, churn_mode="full-mm-inf", N=100)
rng = np.random.default_rng(0)
state = CellState.initial(cfg)
pop = []
for _ in range(500):
    step_window(state, cfg, rng)
    repair_window(state, cfg, rng)
    pop.append(state.population)
print("mean population", np.mean(pop[50:]))
