"""Monte-Carlo simulation of a caching cell under churn with lazy repair.

Each trial owns an independent RNG stream spawned from ``(seed, trial)``,
so results do not depend on how trials are split across workers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Literal, Sequence

import numpy as np

from .code_model import systematic_encode
from .cost_models import (
    CodeScenario,
    CostParams,
    LDPCScenario,
    expected_cost,
    node_cost,
    rs_node_size,
    survival_p,
)
from .greepair import RepairTask, repair_node
from .opt_search import SearchGraph, opt1, opt2

ChurnMode = Literal["binomial-survival", "full-mm-inf"]
Z95 = 1.959963984540054


class SimError(RuntimeError):
    """An internal consistency check failed during simulation."""


@dataclass(frozen=True)
class SimConfig:
    scenario: CodeScenario
    delta: float
    mu: float = 1.0
    lam: float | None = None
    N: int = 100
    windows: int = 1
    trials: int = 1000
    seed: int = 0
    cost_params: tuple[CostParams, ...] = (CostParams(1.0, 1.0),)
    churn_mode: ChurnMode = "binomial-survival"
    rs_reference: tuple[int, int, int] = (24, 12, 24)
    scale: float = 1.0
    verify_bits: bool = False

    def __post_init__(self) -> None:
        if self.mu <= 0 or (self.lam is not None and self.lam <= 0):
            raise ValueError("arrival and departure rates must be positive")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        if self.trials < 1 or self.windows < 1:
            raise ValueError("trials and windows must be >= 1")
        if self.churn_mode not in ("binomial-survival", "full-mm-inf"):
            raise ValueError(f"unknown churn mode {self.churn_mode!r}")
        if self.churn_mode == "full-mm-inf" and self.N < self.scenario.m:
            raise ValueError("initial population N must hold all m storage nodes")

    @property
    def arrival_rate(self) -> float:
        return self.lam if self.lam is not None else self.mu

    @property
    def rs_node(self) -> float:
        return rs_node_size(self.scenario.F, *self.rs_reference)


def place_symbols(n: int, m: int) -> list[tuple[int, ...]]:
    """Contiguous blocks of ``ceil(n/m)`` symbols per node, the last possibly shorter."""
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    size = -(-n // m)
    blocks = [tuple(range(i * size + 1, min((i + 1) * size, n) + 1)) for i in range(m)]
    if not blocks[-1]:
        raise ValueError(f"n={n} over m={m} nodes leaves a node empty")
    return blocks


@lru_cache(maxsize=None)
def _placement(sc: CodeScenario) -> tuple[tuple[int, ...], ...]:
    if sc.family == "ldpc":
        return tuple(place_symbols(sc.n, sc.m))
    per = sc.per_node
    return tuple(tuple(range(i * per + 1, (i + 1) * per + 1)) for i in range(sc.m))


@dataclass
class CellState:
    placement: tuple[tuple[int, ...], ...]
    alive: np.ndarray
    empty: int | None = None  # idle nodes in the cell; None when not tracked

    @classmethod
    def initial(cls, cfg: SimConfig) -> "CellState":
        sc = cfg.scenario
        placement = _placement(sc)
        empty = cfg.N - sc.m if cfg.churn_mode == "full-mm-inf" else None
        return cls(placement, np.ones(sc.m, dtype=bool), empty)

    @property
    def population(self) -> int:
        return int(self.alive.sum()) + (self.empty or 0)


def step_window(state: CellState, cfg: SimConfig, rng: np.random.Generator) -> None:
    """Apply one window of departures (and arrivals, in full mode) to ``state``."""
    if cfg.delta == 0:
        return
    if cfg.churn_mode == "binomial-survival":
        p = survival_p(cfg.mu, cfg.delta)
        stay = rng.random(len(state.alive)) < p
        state.alive &= stay
        return

    # event-driven M/M/inf: arrivals at rate N*lambda, each node leaves at rate mu
    arrive = cfg.N * cfg.arrival_rate
    t = 0.0
    while True:
        stored = np.flatnonzero(state.alive)
        pop = len(stored) + state.empty
        rate = arrive + pop * cfg.mu
        t += rng.exponential(1.0 / rate)
        if t >= cfg.delta:
            return
        if rng.random() * rate < arrive:
            state.empty += 1
            continue
        who = int(rng.integers(pop))
        if who < len(stored):
            state.alive[stored[who]] = False
        else:
            state.empty -= 1


@dataclass
class WindowMetrics:
    lost_nodes: int = 0
    repaired: int = 0
    tau: float = 0.0
    phi: float = 0.0
    starved: bool = False

    @property
    def tau_node(self) -> float:
        return self.tau / self.repaired if self.repaired else 0.0

    @property
    def phi_node(self) -> float:
        return self.phi / self.repaired if self.repaired else 0.0


@lru_cache(maxsize=None)
def _closed_form(sc: CodeScenario, l: int, kind: str) -> tuple[float, float]:
    c = node_cost(sc, l, kind)
    return float(c.d2d_symbols), float(c.bs_symbols)


def _ldpc_repairs(sc: LDPCScenario, state: CellState, lost: list[int], chosen: list[int], rng, verify: bool):
    H = sc.matrix
    lost_syms = {i: frozenset(state.placement[i]) for i in lost}
    everything = frozenset().union(*lost_syms.values())
    codeword = systematic_encode(H, rng.integers(0, 2, H.k)) if verify else None
    for i in chosen:
        task = RepairTask(H, lost_syms[i], everything - lost_syms[i], codeword)
        out = repair_node(task)
        if verify:
            for s, v in out.values.items():
                if v != codeword[s - 1]:
                    raise SimError(f"repaired symbol {s} disagrees with the encoded stripe")
        yield out


def repair_window(state: CellState, cfg: SimConfig, rng: np.random.Generator) -> WindowMetrics:
    """Rebuild lost storage nodes on newcomers; nodes repaired together do not cooperate."""
    sc = cfg.scenario
    lost = [int(i) for i in np.flatnonzero(~state.alive)]
    wm = WindowMetrics(lost_nodes=len(lost))
    if not lost:
        return wm
    chosen = lost
    if state.empty is not None and state.empty < len(lost):
        wm.starved = True
        chosen = sorted(rng.choice(lost, size=state.empty, replace=False).tolist()) if state.empty else []

    if sc.family == "ldpc":
        stripes = sc.F / sc.k
        for out in _ldpc_repairs(sc, state, lost, chosen, rng, cfg.verify_bits):
            wm.tau += out.tau * stripes
            wm.phi += out.phi * stripes
    else:
        l = sc.per_node * len(lost)
        for i in chosen:
            kind = "systematic" if sc.family != "msr-hr" or i < sc.k else "non-systematic"
            d2d, bs = _closed_form(sc, l, kind)
            wm.tau += d2d
            wm.phi += bs

    wm.repaired = len(chosen)
    state.alive[chosen] = True
    if state.empty is not None:
        state.empty -= len(chosen)
    return wm


@dataclass
class TrialMetrics:
    """Per-trial means over windows of per-lost-node downloads."""

    tau: float
    phi: float
    lost_nodes: float
    starved_windows: int


def run_trial(cfg: SimConfig, trial: int) -> TrialMetrics:
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(trial,)))
    state = CellState.initial(cfg)
    tau = phi = lost = 0.0
    starved = 0
    for _ in range(cfg.windows):
        step_window(state, cfg, rng)
        wm = repair_window(state, cfg, rng)
        tau += wm.tau_node
        phi += wm.phi_node
        lost += wm.lost_nodes
        starved += wm.starved
    w = cfg.windows
    return TrialMetrics(tau / w, phi / w, lost / w, starved)


def _trial_block(cfg: SimConfig, start: int, stop: int) -> list[TrialMetrics]:
    return [run_trial(cfg, t) for t in range(start, stop)]


def worker_count() -> int:
    raw = os.environ.get("COACHSIM_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"COACHSIM_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValueError("COACHSIM_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def run_trials(cfg: SimConfig, workers: int | None = None) -> list[TrialMetrics]:
    workers = worker_count() if workers is None else workers
    if workers <= 1 or cfg.trials < 2 * workers:
        return _trial_block(cfg, 0, cfg.trials)
    edges = np.linspace(0, cfg.trials, workers + 1).astype(int)
    with ProcessPoolExecutor(workers) as ex:
        parts = ex.map(_trial_block, [cfg] * workers, edges[:-1], edges[1:])
        return [m for part in parts for m in part]


def _mean_ci(x: Sequence[float]) -> tuple[float, float]:
    a = np.asarray(x, dtype=float)
    if len(a) < 2:
        return float(a.mean()), 0.0
    return float(a.mean()), float(Z95 * a.std(ddof=1) / math.sqrt(len(a)))


@dataclass
class SimResult:
    config: SimConfig
    trials: list[TrialMetrics] = field(repr=False)

    def gamma_samples(self, params: CostParams) -> np.ndarray:
        cfg = self.config
        tau = np.array([t.tau for t in self.trials])
        phi = np.array([t.phi for t in self.trials])
        return cfg.scale * (params.rho_d2d * tau + params.rho_bs * phi) / cfg.rs_node

    def gamma_theory(self, params: CostParams) -> float:
        cfg = self.config
        c = expected_cost(cfg.scenario, cfg.mu, cfg.delta)
        return cfg.scale * c.weighted(params) / cfg.rs_node

    def rows(self) -> list[dict]:
        cfg, sc = self.config, self.config.scenario
        norm = cfg.scale / cfg.rs_node
        tau_m, tau_ci = _mean_ci([t.tau * norm for t in self.trials])
        phi_m, phi_ci = _mean_ci([t.phi * norm for t in self.trials])
        lost_m, _ = _mean_ci([t.lost_nodes for t in self.trials])
        out = []
        for params in cfg.cost_params:
            g_m, g_ci = _mean_ci(self.gamma_samples(params))
            out.append(
                {
                    "code_family": sc.family,
                    "n": sc.n,
                    "k": sc.k,
                    "m": sc.m,
                    "d": getattr(sc, "d", ""),
                    "dv": getattr(sc, "d_v", ""),
                    "dc": getattr(sc, "d_c", ""),
                    "delta": cfg.delta,
                    "rho_d2d": params.rho_d2d,
                    "rho_bs": params.rho_bs,
                    "tau_mean": tau_m,
                    "tau_ci95": tau_ci,
                    "phi_mean": phi_m,
                    "phi_ci95": phi_ci,
                    "gamma_mean": g_m,
                    "gamma_ci95": g_ci,
                    "gamma_theory": self.gamma_theory(params),
                    "lost_nodes_mean": lost_m,
                    "starved_windows": sum(t.starved_windows for t in self.trials),
                }
            )
        return out


def simulate(cfg: SimConfig, workers: int | None = None) -> SimResult:
    return SimResult(cfg, run_trials(cfg, workers))


def run_experiment(configs: Sequence[SimConfig], workers: int | None = None) -> list[dict]:
    """Simulate every config; one row per (scenario, delta, cost pair).

    ``tau_mean`` and ``phi_mean`` are reported in RS-node units like ``gamma``.
    """
    rows = []
    for cfg in configs:
        rows.extend(simulate(cfg, workers).rows())
    return rows


# --- greedy vs exhaustive ---------------------------------------------------

@dataclass
class OptTrial:
    greepair_tau: float = 0.0
    greepair_phi: float = 0.0
    opt1_tau: float = 0.0
    opt1_phi: float = 0.0
    opt2_cost: dict = field(default_factory=dict)
    greepair_cost: dict = field(default_factory=dict)
    lost_nodes: int = 0


def run_opt_trial(cfg: SimConfig, trial: int) -> OptTrial:
    """One window: every lost node repaired by Greepair, Opt-1 and Opt-2 (per cost pair)."""
    sc = cfg.scenario
    if sc.family != "ldpc":
        raise ValueError("optimum comparison needs an LDPC scenario")
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(trial,)))
    state = CellState.initial(cfg)
    step_window(state, cfg, rng)
    lost = [int(i) for i in np.flatnonzero(~state.alive)]
    res = OptTrial(lost_nodes=len(lost))
    res.opt2_cost = {p: 0.0 for p in cfg.cost_params}
    res.greepair_cost = {p: 0.0 for p in cfg.cost_params}
    if not lost:
        return res
    H = sc.matrix
    syms = {i: frozenset(state.placement[i]) for i in lost}
    everything = frozenset().union(*syms.values())
    for i in lost:
        task = RepairTask(H, syms[i], everything - syms[i])
        g = repair_node(task)
        graph = SearchGraph(task)
        _, t1, p1 = opt1(task, graph=graph)
        res.greepair_tau += g.tau
        res.greepair_phi += g.phi
        res.opt1_tau += t1
        res.opt1_phi += p1
        for p in cfg.cost_params:
            res.greepair_cost[p] += g.weighted(p.rho_d2d, p.rho_bs)
            res.opt2_cost[p] += opt2(task, p.rho_d2d, p.rho_bs, graph=graph)[1]
        if p1 > g.phi or (p1 == g.phi and t1 > g.tau):
            raise SimError("Opt-1 worse than Greepair")
    k = len(lost)
    res.greepair_tau /= k
    res.greepair_phi /= k
    res.opt1_tau /= k
    res.opt1_phi /= k
    res.opt2_cost = {p: v / k for p, v in res.opt2_cost.items()}
    res.greepair_cost = {p: v / k for p, v in res.greepair_cost.items()}
    return res


def _improvement(base: float, better: float) -> float:
    return 100.0 * (base - better) / base if base else 0.0


def run_opt_compare(configs: Sequence[SimConfig]) -> list[dict]:
    """Greepair versus exhaustive optima, one row per (config, cost pair)."""
    rows = []
    for cfg in configs:
        rows += opt_compare_rows(cfg, [run_opt_trial(cfg, t) for t in range(cfg.trials)])
    return rows


def opt_compare_rows(cfg: SimConfig, trials: Sequence[OptTrial]) -> list[dict]:
    """Summarise per-window comparisons of one config into table rows."""
    rows = []
    sc = cfg.scenario
    stripes = sc.F / sc.k
    norm = cfg.scale * stripes / cfg.rs_node
    g_tau, g_tau_ci = _mean_ci([t.greepair_tau * norm for t in trials])
    g_phi, g_phi_ci = _mean_ci([t.greepair_phi * norm for t in trials])
    o1_tau = float(np.mean([t.opt1_tau * norm for t in trials]))
    o1_phi = float(np.mean([t.opt1_phi * norm for t in trials]))
    lost_m = float(np.mean([t.lost_nodes for t in trials]))
    for p in cfg.cost_params:
        g_gamma, g_gamma_ci = _mean_ci([t.greepair_cost[p] * norm for t in trials])
        o2 = float(np.mean([t.opt2_cost[p] * norm for t in trials]))
        theory = expected_cost(sc, cfg.mu, cfg.delta).weighted(p) * cfg.scale / cfg.rs_node
        rows.append(
            {
                "code_family": sc.family,
                "n": sc.n,
                "k": sc.k,
                "m": sc.m,
                "d": "",
                "dv": sc.d_v,
                "dc": sc.d_c,
                "delta": cfg.delta,
                "rho_d2d": p.rho_d2d,
                "rho_bs": p.rho_bs,
                "tau_mean": g_tau,
                "tau_ci95": g_tau_ci,
                "phi_mean": g_phi,
                "phi_ci95": g_phi_ci,
                "gamma_mean": g_gamma,
                "gamma_ci95": g_gamma_ci,
                "gamma_theory": theory,
                "lost_nodes_mean": lost_m,
                "starved_windows": 0,
                "symbols_per_node": sc.per_node,
                "greepair_tau": g_tau,
                "greepair_phi": g_phi,
                "greepair_gamma": g_gamma,
                "opt1_tau": o1_tau,
                "opt1_phi": o1_phi,
                "opt2_gamma": o2,
                "opt1_tau_improvement_pct": _improvement(g_tau, o1_tau),
                "opt1_phi_improvement_pct": _improvement(g_phi, o1_phi),
                "improvement_pct": _improvement(g_gamma, o2),
            }
        )
    return rows


def with_delta(cfg: SimConfig, delta: float) -> SimConfig:
    return replace(cfg, delta=delta)
