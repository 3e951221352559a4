"""Exhaustive repair planning for small nodes, used as an optimality baseline.

A plan orders the lost symbols of one node and picks, for each, one of its
recovery equations or a direct base-station download. Download accounting
matches :mod:`coachsim.greepair`: fetched helpers and repaired symbols stay
cached for the rest of the repair.
"""

from __future__ import annotations

from itertools import product
from typing import Callable, Iterator, Optional

from .code_model import RecoveryEquation
from .greepair import RepairTask

DEFAULT_CAP = 6

Step = tuple[int, Optional[RecoveryEquation]]  # equation None means base-station download
RepairPlan = tuple[Step, ...]


class SearchCapExceeded(ValueError):
    pass


def _check_cap(task: RepairTask, cap: int) -> None:
    if len(task.L) > cap:
        raise SearchCapExceeded(f"|L|={len(task.L)} exceeds enumeration cap {cap}")


def _moves(task: RepairTask, remaining: frozenset[int], cached: frozenset[int]):
    """Feasible next steps in enumeration order, with their (tau, phi) increments."""
    blocked = remaining | task.G
    for t in sorted(remaining):
        for eq in task.H.equations_for(t):
            if eq.helpers & blocked:
                continue
            fetched = eq.helpers - cached
            yield (t, eq), len(fetched), 0, cached | eq.helpers | {t}
        yield (t, None), 0, 1, cached | {t}


class SearchGraph:
    """Reachable ``(phi, tau)`` outcomes of sub-problems of one task.

    Any helper that is itself a lost symbol is repaired, and therefore cached,
    before it is used. So the downloads of a plan depend only on which
    equation each symbol uses, never on the order: ``tau`` is the number of
    distinct helpers outside the lost and cached sets. An assignment of
    equations is realisable in some order exactly when the dependencies among
    the pending symbols are acyclic. Results are memoised so several
    objectives can share one graph.
    """

    def __init__(self, task: RepairTask, cap: int = DEFAULT_CAP):
        _check_cap(task, cap)
        self.task = task
        self._options = {
            t: [eq for eq in task.H.equations_for(t) if not eq.helpers & task.G] + [None] for t in task.L
        }
        self._memo: dict = {}

    def outcomes(self, remaining: frozenset[int], cached: frozenset[int]) -> list[tuple[int, int]]:
        """Pareto-minimal ``(phi, tau)`` pairs for repairing ``remaining``."""
        key = (remaining, cached)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        targets = sorted(remaining)
        seen = set()
        for choice in product(*(self._options[t] for t in targets)):
            phi = 0
            fetched: set[int] = set()
            deps = {}
            for t, eq in zip(targets, choice):
                if eq is None:
                    phi += 1
                else:
                    fetched |= eq.helpers
                    deps[t] = eq.helpers & remaining
            if deps and not _acyclic(deps):
                continue
            seen.add((phi, len(fetched - cached - remaining)))
        front = sorted(seen)
        pareto, best_tau = [], None
        for phi, tau in front:
            if best_tau is None or tau < best_tau:
                pareto.append((phi, tau))
                best_tau = tau
        self._memo[key] = pareto
        return pareto


def _acyclic(deps: dict[int, frozenset[int]]) -> bool:
    # symbols repaired from the base station have no dependencies
    pending = dict(deps)
    while pending:
        ready = [t for t, d in pending.items() if not any(x in pending for x in d)]
        if not ready:
            return False
        for t in ready:
            del pending[t]
    return True


def enumerate_plans(task: RepairTask, cap: int = DEFAULT_CAP) -> Iterator[tuple[RepairPlan, int, int]]:
    """Yield every feasible complete plan with its exact ``(tau, phi)``."""
    _check_cap(task, cap)

    def walk(remaining, cached, plan, tau, phi):
        if not remaining:
            yield tuple(plan), tau, phi
            return
        for step, dt, dp, new_cached in _moves(task, remaining, cached):
            plan.append(step)
            yield from walk(remaining - {step[0]}, new_cached, plan, tau + dt, phi + dp)
            plan.pop()

    yield from walk(frozenset(task.L), frozenset(), [], 0, 0)


def _optimise(task: RepairTask, cost: Callable[[int, int], object], cap: int, graph: SearchGraph | None):
    # Walks the plan tree in enumeration order, at every level taking the
    # first move whose best completion reaches the minimum (strict '<').
    # That is the first optimal plan in enumeration order.
    if graph is None:
        graph = SearchGraph(task, cap)
    elif graph.task is not task:
        raise ValueError("search graph belongs to a different task")
    remaining, cached = frozenset(task.L), frozenset()
    plan: list[Step] = []
    tau = phi = 0
    while remaining:
        best = None
        for step, dt, dp, new_cached in _moves(task, remaining, cached):
            subs = graph.outcomes(remaining - {step[0]}, new_cached)
            value = min(cost(tau + dt + st, phi + dp + sp) for sp, st in subs)
            if best is None or value < best[0]:
                best = (value, step, dt, dp, new_cached)
        _, step, dt, dp, cached = best
        plan.append(step)
        remaining = remaining - {step[0]}
        tau += dt
        phi += dp
    return cost(tau, phi), tuple(plan), tau, phi


def opt1(task: RepairTask, cap: int = DEFAULT_CAP, graph: SearchGraph | None = None) -> tuple[RepairPlan, int, int]:
    """Fewest base-station symbols, then fewest device downloads."""
    _, plan, tau, phi = _optimise(task, lambda t, p: (p, t), cap, graph)
    return plan, tau, phi


def opt2(
    task: RepairTask, rho_d2d: float, rho_bs: float, cap: int = DEFAULT_CAP, graph: SearchGraph | None = None
) -> tuple[RepairPlan, float]:
    """Lowest ``rho_d2d * tau + rho_bs * phi``."""
    total, plan, _, _ = _optimise(task, lambda t, p: rho_d2d * t + rho_bs * p, cap, graph)
    return plan, float(total)


def replay(task: RepairTask, plan: RepairPlan) -> tuple[int, int]:
    """Re-simulate a plan step by step and return its ``(tau, phi)``."""
    remaining = set(task.L)
    cached: set[int] = set()
    tau = phi = 0
    for t, eq in plan:
        if t not in remaining:
            raise ValueError(f"symbol {t} is not pending")
        if eq is None:
            phi += 1
            cached.add(t)
        else:
            if eq.target != t or eq.helpers & (remaining | task.G):
                raise ValueError(f"infeasible step for symbol {t}")
            tau += len(eq.helpers - cached)
            cached |= eq.helpers | {t}
        remaining.discard(t)
    if remaining:
        raise ValueError(f"plan leaves {sorted(remaining)} unrepaired")
    return tau, phi
