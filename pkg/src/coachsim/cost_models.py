"""Closed-form repair cost of one lost node for RS, MBR, MSR and LDPC caching.

Costs are symbol counts split into a device-to-device part and a
base-station part. RS/MBR/MSR counts are exact :class:`~fractions.Fraction`
values; LDPC counts are floats because the loss probabilities are.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Literal, Union

from .code_model import ArrayCodeSpec, ParityCheckMatrix, build_array_ldpc

DEFAULT_FILE_SYMBOLS = 128 * 1024

Number = Union[int, float, Fraction]


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class CostParams:
    rho_d2d: float = 1.0
    rho_bs: float = 1.0

    def __post_init__(self) -> None:
        if not 0 < self.rho_d2d <= self.rho_bs:
            raise ScenarioError(
                f"need 0 < rho_d2d <= rho_bs, got ({self.rho_d2d}, {self.rho_bs})"
            )

    @property
    def ratio(self) -> float:
        return self.rho_bs / self.rho_d2d


@dataclass(frozen=True)
class Cost:
    d2d_symbols: Number = 0
    bs_symbols: Number = 0

    def weighted(self, params: CostParams) -> float:
        return float(params.rho_d2d * self.d2d_symbols + params.rho_bs * self.bs_symbols)

    def __add__(self, other: "Cost") -> "Cost":
        return Cost(self.d2d_symbols + other.d2d_symbols, self.bs_symbols + other.bs_symbols)

    def scaled(self, factor: Number) -> "Cost":
        return Cost(self.d2d_symbols * factor, self.bs_symbols * factor)

    def as_float(self) -> "Cost":
        return Cost(float(self.d2d_symbols), float(self.bs_symbols))


ZERO = Cost(0, 0)


# --- scenarios --------------------------------------------------------------

def _check_layout(n: int, m: int, divisible: bool) -> None:
    if not 1 <= m <= n:
        raise ScenarioError(f"need 1 <= m <= n, got m={m}, n={n}")
    if divisible and n % m:
        raise ScenarioError(f"m={m} must divide n={n}")


@dataclass(frozen=True)
class RSScenario:
    n: int
    k: int
    m: int
    F: Number = DEFAULT_FILE_SYMBOLS
    family: Literal["rs"] = field(default="rs", init=False)

    def __post_init__(self) -> None:
        _check_layout(self.n, self.m, divisible=True)
        if not 1 <= self.k < self.n:
            raise ScenarioError(f"need 1 <= k < n, got k={self.k}")

    @property
    def per_node(self) -> int:
        return self.n // self.m


@dataclass(frozen=True)
class MBRScenario:
    n: int
    k: int
    m: int
    d: int
    F: Number = DEFAULT_FILE_SYMBOLS
    family: Literal["mbr"] = field(default="mbr", init=False)

    def __post_init__(self) -> None:
        _check_layout(self.n, self.m, divisible=True)
        if not 1 <= self.k <= self.d <= self.n - 1:
            raise ScenarioError(f"need k <= d <= n-1, got k={self.k}, d={self.d}, n={self.n}")
        if self.d <= self.per_node:
            raise ScenarioError("need d > n/m")

    @property
    def per_node(self) -> int:
        return self.n // self.m

    @property
    def alpha(self) -> int:
        return self.d

    @property
    def B1(self) -> int:
        return self.k * self.d - math.comb(self.k, 2)


@dataclass(frozen=True)
class MSRLRScenario:
    n: int
    k: int
    m: int
    d: int
    F: Number = DEFAULT_FILE_SYMBOLS
    family: Literal["msr-lr"] = field(default="msr-lr", init=False)

    def __post_init__(self) -> None:
        _check_layout(self.n, self.m, divisible=True)
        if not 1 <= self.k <= self.d <= self.n - 1:
            raise ScenarioError(f"need k <= d <= n-1, got k={self.k}, d={self.d}, n={self.n}")
        if self.d < 2 * self.k - 2:
            raise ScenarioError(f"low-rate MSR needs d >= 2k-2, got d={self.d}, k={self.k}")
        if self.d <= self.per_node:
            raise ScenarioError("need d > n/m")

    @property
    def per_node(self) -> int:
        return self.n // self.m

    @property
    def alpha(self) -> int:
        return self.d - self.k + 1

    @property
    def B2(self) -> int:
        return self.k * self.alpha


@dataclass(frozen=True)
class MSRHRScenario:
    """High-rate systematic MSR family, one packet per node (``m = n``)."""

    t: int
    z: int
    F: Number = DEFAULT_FILE_SYMBOLS
    family: Literal["msr-hr"] = field(default="msr-hr", init=False)

    def __post_init__(self) -> None:
        if self.t < 1 or self.z < 1:
            raise ScenarioError("t and z must be positive integers")

    @property
    def n(self) -> int:
        return (self.t + 1) * self.z + self.t

    @property
    def k(self) -> int:
        return (self.t + 1) * self.z

    @property
    def d(self) -> int:
        return self.n - 1

    @property
    def m(self) -> int:
        return self.n

    @property
    def per_node(self) -> int:
        return 1

    @property
    def alpha(self) -> int:
        return self.t**self.z

    @property
    def B2(self) -> int:
        return self.k * self.alpha


@dataclass(frozen=True)
class LDPCScenario:
    """Regular ``(d_v, d_c)`` LDPC caching over ``m`` nodes of ``ceil(n/m)`` symbols.

    ``code`` optionally pins the array construction used for simulation.
    """

    n: int
    k: int
    m: int
    d_v: int
    d_c: int
    F: Number = DEFAULT_FILE_SYMBOLS
    code: ArrayCodeSpec | None = None
    family: Literal["ldpc"] = field(default="ldpc", init=False)

    def __post_init__(self) -> None:
        _check_layout(self.n, self.m, divisible=False)
        if not 1 <= self.k < self.n:
            raise ScenarioError(f"need 1 <= k < n, got k={self.k}")
        if self.d_v < 1 or self.d_c < 2:
            raise ScenarioError("need d_v >= 1 and d_c >= 2")
        if self.code is not None and (self.code.n, self.code.k_design) != (self.n, self.k):
            raise ScenarioError("array code parameters disagree with (n, k)")

    @classmethod
    def from_array(cls, spec: ArrayCodeSpec, m: int, F: Number = DEFAULT_FILE_SYMBOLS) -> "LDPCScenario":
        return cls(spec.n, spec.k_design, m, spec.j, spec.kk, F, spec)

    @property
    def per_node(self) -> int:
        return -(-self.n // self.m)

    @cached_property
    def matrix(self) -> ParityCheckMatrix:
        if self.code is None:
            raise ScenarioError("LDPC scenario has no array code attached")
        H = build_array_ldpc(self.code)
        if H.k != self.k:
            raise ScenarioError(f"constructed code has k={H.k}, scenario says {self.k}")
        return H


CodeScenario = Union[RSScenario, MBRScenario, MSRLRScenario, MSRHRScenario, LDPCScenario]


def _check_l(sc, l) -> None:
    if not 0 <= l <= sc.n:
        raise ScenarioError(f"lost symbol count l={l} outside [0, {sc.n}]")


# --- per-node cost functions ------------------------------------------------

def c_rs(sc: RSScenario, l: int) -> Cost:
    _check_l(sc, l)
    if l == 0:
        return ZERO
    F, n, k = Fraction(sc.F), sc.n, sc.k
    if k <= n - l:
        return Cost(F, 0)
    if k < sc.per_node + n - l:
        return Cost(F / k * (n - l), F / k * (k - n + l))
    return Cost(0, sc.per_node * F / k)


def _regenerating(sc, l: int, B: int, bs_packet: int | None) -> Cost:
    # bs_packet: symbols in a direct BS download of one packet when the hybrid
    # helper shortfall reaches it (MSR-LR); None disables that branch (MBR).
    _check_l(sc, l)
    unit = Fraction(sc.F) / B
    n, d = sc.n, sc.d
    d2d = bs = Fraction(0)
    shortfall = d - n + l
    for a in range(sc.per_node):
        if shortfall <= 0 or a >= shortfall:
            d2d += unit * (d - a)
        elif bs_packet is not None and shortfall - a >= bs_packet:
            bs += unit * bs_packet
        else:
            d2d += unit * (n - l)
            bs += unit * (shortfall - a)
    return Cost(d2d, bs)


def c_mbr(sc: MBRScenario, l: int) -> Cost:
    """Sequential packet repair; each repaired packet serves as a helper for the next."""
    return _regenerating(sc, l, sc.B1, None)


def c_msr_lr(sc: MSRLRScenario, l: int) -> Cost:
    return _regenerating(sc, l, sc.B2, sc.alpha)


def c_msr_hr(sc: MSRHRScenario, l: int, node_kind: Literal["systematic", "non-systematic"] = "systematic") -> Cost:
    _check_l(sc, l)
    unit = Fraction(sc.F) / sc.B2
    t, z, n, d = sc.t, sc.z, sc.n, sc.d
    if node_kind == "non-systematic":
        return Cost(0, t**z * unit)
    if node_kind != "systematic":
        raise ScenarioError(f"unknown node kind {node_kind!r}")
    if d <= n - l:
        return Cost(t ** (z - 1) * d * unit, 0)
    if d - n + l < t:
        return Cost(t ** (z - 1) * (n - l) * unit, (d - n + l) * t ** (z - 1) * unit)
    return Cost(0, t**z * unit)


def c_ldpc_ub(sc: LDPCScenario, l: float) -> Cost:
    """Upper bound on the expected repair cost of one LDPC node with ``l`` symbols lost system-wide.

    A symbol is repaired locally with probability ``(1 - q)^(d_c - 1)``
    (all helpers alive) and the ``d_v`` alternatives are union-bounded, so the
    D2D term may exceed ``d_c - 1`` symbols per lost symbol.
    """
    _check_l(sc, l)
    unit = sc.F / sc.k
    d2d = bs = 0.0
    for a in range(sc.per_node):
        if a >= sc.n:
            raise ScenarioError("repaired-symbol count reached n")
        q = max(l - a, 0) / (sc.n - a)
        ok = (1.0 - q) ** (sc.d_c - 1)
        d2d += unit * (sc.d_c - 1) * sc.d_v * ok
        bs += unit * (1.0 - ok)
    return Cost(d2d, bs)


def node_cost(sc: CodeScenario, l, node_kind: str = "systematic") -> Cost:
    """Dispatch to the family's per-node cost function."""
    if sc.family == "rs":
        return c_rs(sc, l)
    if sc.family == "mbr":
        return c_mbr(sc, l)
    if sc.family == "msr-lr":
        return c_msr_lr(sc, l)
    if sc.family == "msr-hr":
        return c_msr_hr(sc, l, node_kind)
    if sc.family == "ldpc":
        return c_ldpc_ub(sc, l)
    raise ScenarioError(f"unknown family {sc.family!r}")


# --- window expectation -----------------------------------------------------

def survival_p(mu: float, delta: float) -> float:
    """Probability that a node stays in the cell for ``delta``."""
    if mu <= 0 or delta < 0:
        raise ScenarioError("need mu > 0 and delta >= 0")
    return math.exp(-mu * delta)


def binomial_weights(m: int, p: float) -> list[float]:
    return [math.comb(m, i) * p**i * (1 - p) ** (m - i) for i in range(m + 1)]


def expected_cost(sc: CodeScenario, mu: float, delta: float) -> Cost:
    """Binomially weighted per-lost-node cost over one lazy-repair window.

    ``i`` surviving storage nodes leave ``(n/m)(m - i)`` symbols lost; the
    all-survive term contributes nothing. For MSR-HR the lost node is
    systematic with weight ``k/n`` and non-systematic with weight ``t/n``.
    Exact for RS/MBR/MSR, an upper bound for LDPC.
    """
    p = survival_p(mu, delta)
    m = sc.m
    weights = binomial_weights(m, p)
    d2d = bs = 0.0
    for i in range(m):
        w = weights[i]
        if w == 0.0:
            continue
        if sc.family == "msr-hr":
            l = m - i
            c = c_msr_hr(sc, l, "systematic").scaled(Fraction(sc.k, sc.n)) + c_msr_hr(
                sc, l, "non-systematic"
            ).scaled(Fraction(sc.t, sc.n))
        elif sc.family == "ldpc":
            c = c_ldpc_ub(sc, sc.n / m * (m - i))
        else:
            c = node_cost(sc, sc.per_node * (m - i))
        d2d += w * float(c.d2d_symbols)
        bs += w * float(c.bs_symbols)
    return Cost(d2d, bs)


def rs_node_size(F: Number, n_rs: int, k_rs: int, m_rs: int) -> float:
    """Content of one RS storage node, the normaliser for reported costs."""
    return float(Fraction(F) * n_rs / (k_rs * m_rs))
