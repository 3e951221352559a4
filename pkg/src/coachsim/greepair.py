"""Greedy two-phase repair of one lost LDPC node with base-station fallback.

Phase one peels: it repairs every symbol reachable from alive or already
fetched symbols, always taking the cheapest equation first. Phase two
resolves the rest, preferring equations that need the fewest base-station
downloads. When an equation still touches a lost symbol the base station
ships the target symbol itself.

The newcomer keeps every helper it downloads and every symbol it repairs
for the duration of one :func:`repair_node` call, so no symbol is fetched
twice.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .code_model import ParityCheckMatrix, RecoveryEquation


class RepairError(RuntimeError):
    pass


@dataclass(frozen=True)
class RepairTask:
    """One node repair.

    ``L`` are the symbols of the node being rebuilt, ``G`` the symbols held
    by other nodes lost in the same window (never reachable). ``codeword`` is
    the full ground-truth stripe held by the base station; when given, the
    repaired bit values are computed.
    """

    H: ParityCheckMatrix
    L: frozenset[int]
    G: frozenset[int] = frozenset()
    codeword: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "L", frozenset(self.L))
        object.__setattr__(self, "G", frozenset(self.G))
        if self.L & self.G:
            raise ValueError("L and G overlap")
        for part in (self.L, self.G):
            if part and (min(part) < 1 or max(part) > self.H.n):
                bad = sorted(s for s in part if not 1 <= s <= self.H.n)
                raise ValueError(f"symbol indices outside [1, {self.H.n}]: {bad[:5]}")
        if self.codeword is not None and len(self.codeword) != self.H.n:
            raise ValueError("codeword length differs from n")


@dataclass(frozen=True)
class RepairAction:
    target: int
    source: Literal["local", "bs"]
    downloaded: tuple[int, ...]
    row: int | None = None


@dataclass
class RepairOutcome:
    actions: list[RepairAction] = field(default_factory=list)
    tau: int = 0
    phi: int = 0
    values: dict[int, int] = field(default_factory=dict)

    def weighted(self, rho_d2d: float, rho_bs: float) -> float:
        return rho_d2d * self.tau + rho_bs * self.phi


class _Entry:
    # original equation plus its reduced helper set (helpers not yet cached)
    __slots__ = ("eq", "reduced")

    def __init__(self, eq: RecoveryEquation):
        self.eq = eq
        self.reduced = set(eq.helpers)

    def __repr__(self) -> str:
        return f"_Entry(s{self.eq.target} <- {sorted(self.reduced)} | row {self.eq.row})"


class _Template:
    """Static layout of the equations of one lost set; shared across repairs."""

    __slots__ = ("H", "eqs", "by_target", "holders")

    def __init__(self, H: ParityCheckMatrix, L: frozenset[int]):
        self.H = H
        self.eqs = [eq for s in sorted(L) for eq in H.equations_for(s)]
        by_target: dict[int, list[int]] = {}
        holders: dict[int, list[int]] = {}
        for i, eq in enumerate(self.eqs):
            by_target.setdefault(eq.target, []).append(i)
            for h in eq.helpers:
                holders.setdefault(h, []).append(i)
        self.by_target = {t: tuple(v) for t, v in by_target.items()}
        self.holders = {h: tuple(v) for h, v in holders.items()}


_TEMPLATES: dict[tuple[int, frozenset[int]], _Template] = {}


def _template(H: ParityCheckMatrix, L: frozenset[int]) -> _Template:
    key = (id(H), L)
    tpl = _TEMPLATES.get(key)
    if tpl is None or tpl.H is not H:
        if len(_TEMPLATES) > 4096:
            _TEMPLATES.clear()
        tpl = _TEMPLATES[key] = _Template(H, L)
    return tpl


@dataclass
class EquationPool:
    """Mutable state shared by the two phases.

    ``entries`` pairs every equation of a lost symbol with its reduced form;
    ``in_r1`` marks the reachable pool and ``alive`` the equations not yet
    dropped. ``need[i]`` counts the helpers of entry ``i`` that are still lost.
    """

    entries: list[_Entry]
    alive: list[bool]
    in_r1: list[bool]
    need: list[int]
    remaining: set[int]
    unavailable: set[int]
    cached: set[int]
    template: _Template = field(repr=False)

    @classmethod
    def build(cls, task: RepairTask) -> "EquationPool":
        tpl = _template(task.H, task.L)
        unavailable = set(task.L) | set(task.G)
        entries = [_Entry(eq) for eq in tpl.eqs]
        need = [len(e.reduced & unavailable) for e in entries]
        in_r1 = [x == 0 for x in need]
        return cls(entries, [True] * len(entries), in_r1, need, set(task.L), unavailable, set(), tpl)

    @property
    def r1(self) -> list[_Entry]:
        return [e for e, a, r in zip(self.entries, self.alive, self.in_r1) if a and r]

    @property
    def r2(self) -> list[_Entry]:
        return [e for e, a, r in zip(self.entries, self.alive, self.in_r1) if a and not r]

    def targets_r1(self) -> set[int]:
        return {e.eq.target for e in self.r1}

    def kill_target(self, t: int) -> list[int]:
        """Drop every pooled equation of ``t``; returns the indices dropped."""
        dropped = []
        for j in self.template.by_target[t]:
            if self.alive[j]:
                self.alive[j] = False
                dropped.append(j)
        return dropped

    def absorb(self, t: int, used) -> list[int]:
        """Mark ``t`` repaired and ``used`` cached; returns live entries whose reduced form shrank."""
        self.remaining.discard(t)
        self.unavailable.discard(t)
        touched = []
        holders = self.template.holders
        for x in used:
            if x in self.cached:
                continue
            self.cached.add(x)
            for j in holders.get(x, ()):
                if not self.alive[j]:
                    continue
                e = self.entries[j]
                if x in e.reduced:
                    e.reduced.discard(x)
                    if x == t:
                        self.need[j] -= 1
                    touched.append(j)
        return touched


def _read(task: RepairTask, outcome: RepairOutcome, s: int) -> int:
    if s in outcome.values:
        return outcome.values[s]
    if s in task.L or s in task.G:
        raise RepairError(f"symbol {s} read while still lost")
    return int(task.codeword[s - 1])


def _repair_local(task: RepairTask, pool: EquationPool, outcome: RepairOutcome, e: _Entry) -> list[int]:
    eq = e.eq
    downloads = tuple(sorted(eq.helpers - pool.cached))
    if any(h in pool.unavailable for h in downloads):
        raise RepairError(f"equation row {eq.row} for s{eq.target} uses a lost helper")
    outcome.tau += len(downloads)
    outcome.actions.append(RepairAction(eq.target, "local", downloads, eq.row))
    if task.codeword is not None:
        v = 0
        for h in eq.helpers:
            v ^= _read(task, outcome, h)
        outcome.values[eq.target] = v
    pool.kill_target(eq.target)
    return pool.absorb(eq.target, (eq.target, *eq.helpers))


def phase1(task: RepairTask) -> tuple[RepairOutcome, EquationPool]:
    """Repair everything reachable without the base station.

    Selects the reachable equation with the fewest uncached helpers; after
    each repair, blocked equations whose reduced form no longer touches a
    lost symbol move to the reachable pool (one per target, the cheapest;
    its blocked siblings are dropped).
    """
    pool = EquationPool.build(task)
    outcome = RepairOutcome()
    entries, alive, in_r1, need = pool.entries, pool.alive, pool.in_r1, pool.need
    by_target = pool.template.by_target

    def key(i: int):
        e = entries[i]
        return (len(e.reduced), e.eq.target, e.eq.row, i)

    # lazy heap: stale snapshots are re-pushed with their current key on pop
    heap = [key(i) for i in range(len(entries)) if in_r1[i]]
    heapq.heapify(heap)

    while heap and pool.remaining:
        snap = heapq.heappop(heap)
        i = snap[-1]
        if not alive[i]:
            continue
        if key(i) != snap:
            heapq.heappush(heap, key(i))
            continue
        best: dict[int, int] = {}
        for j in _repair_local(task, pool, outcome, entries[i]):
            if in_r1[j]:
                heapq.heappush(heap, key(j))
            elif need[j] == 0:
                tj = entries[j].eq.target
                if tj not in best or key(j) < key(best[tj]):
                    best[tj] = j
        for tj, j in best.items():
            for sib in by_target[tj]:
                if alive[sib] and not in_r1[sib] and sib != j:
                    alive[sib] = False
            in_r1[j] = True
            heapq.heappush(heap, key(j))

    return outcome, pool


def phase2(task: RepairTask, pool: EquationPool, outcome: RepairOutcome) -> RepairOutcome:
    """Resolve the symbols phase one could not, with minimal base-station use.

    Picks the equation with the fewest lost helpers; ties go to the target
    appearing in the most other pooled equations, then the lowest target
    and row index. A selection that still needs a lost helper downloads its
    target from the base station instead.
    """
    if not pool.remaining:
        return outcome
    entries, alive, need = pool.entries, pool.alive, pool.need
    holders = pool.template.holders
    # a symbol outside every check can only come from the base station; do
    # those first since caching them can only lower the need of other equations
    for t in sorted(s for s in pool.remaining if s not in pool.template.by_target):
        outcome.phi += 1
        outcome.actions.append(RepairAction(t, "bs", ()))
        if task.codeword is not None:
            outcome.values[t] = int(task.codeword[t - 1])
        pool.absorb(t, (t,))
    live = [i for i in range(len(entries)) if alive[i] and not pool.in_r1[i]]
    freq = {s: sum(1 for j in holders.get(s, ()) if alive[j] and s in entries[j].reduced) for s in pool.remaining}

    def key(i: int):
        e = entries[i]
        return (need[i], -freq[e.eq.target], e.eq.target, e.eq.row, i)

    heap = [key(i) for i in live]
    heapq.heapify(heap)

    while pool.remaining:
        best = None
        while heap:
            snap = heapq.heappop(heap)
            i = snap[-1]
            if not alive[i]:
                continue
            cur = key(i)
            if cur == snap:
                best = i
                break
            heapq.heappush(heap, cur)
        if best is None:
            raise RepairError(f"no equations left for symbols {sorted(pool.remaining)}")

        e = entries[best]
        t = e.eq.target
        if need[best]:
            outcome.phi += 1
            outcome.actions.append(RepairAction(t, "bs", ()))
            if task.codeword is not None:
                outcome.values[t] = int(task.codeword[t - 1])
            used: tuple[int, ...] = (t,)
        else:
            downloads = tuple(sorted(e.eq.helpers - pool.cached))
            outcome.tau += len(downloads)
            outcome.actions.append(RepairAction(t, "local", downloads, e.eq.row))
            if task.codeword is not None:
                v = 0
                for h in e.eq.helpers:
                    v ^= _read(task, outcome, h)
                outcome.values[t] = v
            used = (t, *e.eq.helpers)

        for j in pool.kill_target(t):
            for x in entries[j].reduced:
                if x in freq:
                    freq[x] -= 1
        del freq[t]
        for j in pool.absorb(t, used):
            heapq.heappush(heap, key(j))

    return outcome


def repair_node(task: RepairTask) -> RepairOutcome:
    outcome, pool = phase1(task)
    return phase2(task, pool, outcome)
