"""Binary parity-check matrices, recovery equations and GF(2) encoding.

Symbol indices are 1-based throughout so that ``s1 ... sn`` in prose map
directly onto column numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class CodeError(ValueError):
    """Invalid matrix, code parameters or alist text."""


def _is_prime(q: int) -> bool:
    if q < 2:
        return False
    f = 2
    while f * f <= q:
        if q % f == 0:
            return False
        f += 1
    return True


def _row_mask(row: Iterable[int]) -> int:
    mask = 0
    for c in row:
        mask |= 1 << (c - 1)
    return mask


def _reduced_echelon(masks: Sequence[int]) -> dict[int, int]:
    """Reduced row echelon form over GF(2) keyed by pivot column (0-based).

    Rows are Python ints used as bitsets; the pivot of a row is its lowest
    set bit, so pivots coincide with a left-to-right column sweep.
    """
    pivots: dict[int, int] = {}
    for mask in masks:
        for col, prow in pivots.items():
            if mask >> col & 1:
                mask ^= prow
        if not mask:
            continue
        col = (mask & -mask).bit_length() - 1
        for other in list(pivots):
            if pivots[other] >> col & 1:
                pivots[other] ^= mask
        pivots[col] = mask
    return pivots


@dataclass(frozen=True)
class RecoveryEquation:
    """``target`` equals the XOR of ``helpers`` on every codeword; ``row`` is the 1-based check row."""

    target: int
    helpers: frozenset[int]
    row: int

    def __post_init__(self) -> None:
        if self.target in self.helpers:
            raise CodeError(f"target {self.target} listed among its own helpers")
        if not self.helpers:
            raise CodeError(f"equation for symbol {self.target} has no helpers")


@dataclass(frozen=True)
class ParityCheckMatrix:
    """Sparse binary parity-check matrix.

    ``rows`` holds the support of each check as a strictly ascending tuple of
    1-based column indices. ``rank`` is computed by elimination at
    construction and ``k = n - rank``.
    """

    n: int
    rows: tuple[tuple[int, ...], ...]
    rank: int = field(init=False, compare=False)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise CodeError("n must be positive")
        rows = tuple(tuple(sorted(r)) for r in self.rows)
        for i, r in enumerate(rows, start=1):
            if len(set(r)) != len(r):
                raise CodeError(f"row {i} repeats a column index")
            if r and (r[0] < 1 or r[-1] > self.n):
                raise CodeError(f"row {i} has an index outside [1, {self.n}]")
        object.__setattr__(self, "rows", rows)
        rank = len(_reduced_echelon([_row_mask(r) for r in rows]))
        object.__setattr__(self, "rank", rank)
        if self.n - rank < 1:
            raise CodeError("matrix has full column rank; code dimension would be 0")

    @classmethod
    def from_dense(cls, dense) -> "ParityCheckMatrix":
        arr = np.asarray(dense, dtype=np.uint8) & 1
        if arr.ndim != 2:
            raise CodeError("dense matrix must be 2-D")
        rows = [tuple(int(c) + 1 for c in np.flatnonzero(r)) for r in arr]
        return cls(arr.shape[1], tuple(rows))

    @property
    def k(self) -> int:
        return self.n - self.rank

    @property
    def m_rows(self) -> int:
        return len(self.rows)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((len(self.rows), self.n), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            out[i, [c - 1 for c in r]] = 1
        return out

    @cached_property
    def columns(self) -> tuple[tuple[int, ...], ...]:
        """1-based row indices touching each column (index 0 is column 1)."""
        cols: list[list[int]] = [[] for _ in range(self.n)]
        for i, r in enumerate(self.rows, start=1):
            for c in r:
                cols[c - 1].append(i)
        return tuple(tuple(c) for c in cols)

    def column_degrees(self) -> np.ndarray:
        return np.array([len(c) for c in self.columns])

    def row_degrees(self) -> np.ndarray:
        return np.array([len(r) for r in self.rows])

    @cached_property
    def _encoder(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        # pivot_cols, info_cols (both 0-based), and the rank x k map info -> pivots
        rref = _reduced_echelon([_row_mask(r) for r in self.rows])
        pivot_cols = np.array(sorted(rref), dtype=np.int64)
        pivot_set = set(rref)
        info_cols = np.array([c for c in range(self.n) if c not in pivot_set], dtype=np.int64)
        info_pos = {c: j for j, c in enumerate(info_cols)}
        coupling = np.zeros((len(pivot_cols), len(info_cols)), dtype=np.uint8)
        for i, p in enumerate(pivot_cols):
            mask = rref[int(p)] & ~(1 << int(p))
            while mask:
                low = mask & -mask
                coupling[i, info_pos[low.bit_length() - 1]] = 1
                mask ^= low
        return pivot_cols, info_cols, coupling

    @cached_property
    def _equation_table(self) -> tuple[tuple[RecoveryEquation, ...], ...]:
        return tuple(tuple(recovery_equations(self, s)) for s in range(1, self.n + 1))

    def equations_for(self, s: int) -> tuple[RecoveryEquation, ...]:
        """Cached :func:`recovery_equations` for symbol ``s``."""
        if not 1 <= s <= self.n:
            raise CodeError(f"symbol {s} outside [1, {self.n}]")
        return self._equation_table[s - 1]

    @property
    def information_set(self) -> tuple[int, ...]:
        """1-based positions that carry the data bits in :func:`systematic_encode`."""
        return tuple(int(c) + 1 for c in self._encoder[1])


@dataclass(frozen=True)
class ArrayCodeSpec:
    """Triangular array LDPC code: ``j`` block rows, ``kk`` block columns, ``q`` x ``q`` circulants."""

    q: int
    j: int
    kk: int

    def __post_init__(self) -> None:
        if not _is_prime(self.q):
            raise CodeError(f"q={self.q} is not prime")
        if self.kk > self.q:
            raise CodeError(f"kk={self.kk} exceeds q={self.q}")
        if not 1 <= self.j < self.kk:
            raise CodeError(f"need 1 <= j < kk, got j={self.j}, kk={self.kk}")

    @property
    def n(self) -> int:
        return self.kk * self.q

    @property
    def k_design(self) -> int:
        return (self.kk - self.j) * self.q


def build_array_ldpc(spec: ArrayCodeSpec) -> ParityCheckMatrix:
    """Build the efficiently-encodable array LDPC parity-check matrix.

    Block ``(i, l)`` (1-based) is zero below the block diagonal and the
    cyclic shift ``P`` raised to ``(i - 1) * (l - i) mod q`` otherwise, where
    ``P`` maps row ``r`` to column ``r + 1 mod q``. The identity blocks on the
    diagonal make the rows independent, so ``k = (kk - j) * q``.
    """
    q = spec.q
    rows = []
    for i in range(1, spec.j + 1):
        for r in range(q):
            row = []
            for l in range(i, spec.kk + 1):
                e = (i - 1) * (l - i) % q
                row.append((l - 1) * q + (r + e) % q + 1)
            rows.append(tuple(row))
    return ParityCheckMatrix(spec.n, tuple(rows))


def recovery_equations(H: ParityCheckMatrix, s: int) -> list[RecoveryEquation]:
    """Every way of rewriting a check through ``s`` as ``s = XOR(helpers)``.

    Ordered by helper count, then by row index.
    """
    if not 1 <= s <= H.n:
        raise CodeError(f"symbol {s} outside [1, {H.n}]")
    eqs = []
    for ri in H.columns[s - 1]:
        helpers = frozenset(H.rows[ri - 1]) - {s}
        if helpers:
            eqs.append(RecoveryEquation(s, helpers, ri))
    eqs.sort(key=lambda e: (len(e.helpers), e.row))
    return eqs


def systematic_encode(H: ParityCheckMatrix, data) -> np.ndarray:
    """Encode ``k`` data bits (or a batch, shape ``(..., k)``) into codewords.

    Data lands on :attr:`ParityCheckMatrix.information_set`; the remaining
    positions are solved from the reduced echelon form of ``H``.
    """
    data = np.asarray(data, dtype=np.uint8) & 1
    if data.shape[-1] != H.k:
        raise CodeError(f"expected {H.k} data bits, got {data.shape[-1]}")
    pivot_cols, info_cols, coupling = H._encoder
    out = np.zeros(data.shape[:-1] + (H.n,), dtype=np.uint8)
    out[..., info_cols] = data
    if len(pivot_cols):
        parity = (data.astype(np.int64) @ coupling.T.astype(np.int64)) & 1
        out[..., pivot_cols] = parity
    return out


def syndrome(H: ParityCheckMatrix, codeword) -> np.ndarray:
    c = np.asarray(codeword, dtype=np.uint8)
    return np.array([np.bitwise_xor.reduce(c[..., [x - 1 for x in r]], axis=-1) for r in H.rows]).T


# --- alist ------------------------------------------------------------------

def save_alist(H: ParityCheckMatrix) -> str:
    cols = H.columns
    col_deg = [len(c) for c in cols]
    row_deg = [len(r) for r in H.rows]
    max_c = max(col_deg, default=0)
    max_r = max(row_deg, default=0)
    lines = [
        f"{H.n} {len(H.rows)}",
        f"{max_c} {max_r}",
        " ".join(map(str, col_deg)),
        " ".join(map(str, row_deg)),
    ]
    for c in cols:
        lines.append(" ".join(map(str, list(c) + [0] * (max_c - len(c)))))
    for r in H.rows:
        lines.append(" ".join(map(str, list(r) + [0] * (max_r - len(r)))))
    return "\n".join(lines) + "\n"


def load_alist(text: str) -> ParityCheckMatrix:
    """Parse MacKay alist text (1-based, zero padding ignored)."""
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    try:
        ints = [[int(t) for t in ln] for ln in lines]
    except ValueError as exc:
        raise CodeError(f"non-integer token in alist: {exc}") from None
    if len(ints) < 4 or len(ints[0]) != 2 or len(ints[1]) != 2:
        raise CodeError("alist header must be 'n m' then 'max_col_deg max_row_deg'")
    (n, m), (max_c, max_r) = ints[0], ints[1]
    col_deg, row_deg = ints[2], ints[3]
    if len(col_deg) != n or len(row_deg) != m:
        raise CodeError("degree lists do not match the header dimensions")
    if len(ints) != 4 + n + m:
        raise CodeError(f"expected {n + m} index lines, found {len(ints) - 4}")
    if max(col_deg, default=0) != max_c or max(row_deg, default=0) != max_r:
        raise CodeError("maximum degrees disagree with the degree lists")

    col_lists = [[x for x in ln if x != 0] for ln in ints[4 : 4 + n]]
    row_lists = [[x for x in ln if x != 0] for ln in ints[4 + n :]]
    for c, (idx, deg) in enumerate(zip(col_lists, col_deg), start=1):
        if len(idx) != deg:
            raise CodeError(f"column {c}: degree {deg} but {len(idx)} indices")
        if any(not 1 <= x <= m for x in idx):
            raise CodeError(f"column {c}: row index outside [1, {m}]")
    for r, (idx, deg) in enumerate(zip(row_lists, row_deg), start=1):
        if len(idx) != deg:
            raise CodeError(f"row {r}: degree {deg} but {len(idx)} indices")
        if any(not 1 <= x <= n for x in idx):
            raise CodeError(f"row {r}: column index outside [1, {n}]")

    from_cols = {(r, c) for c, idx in enumerate(col_lists, start=1) for r in idx}
    from_rows = {(r, c) for r, idx in enumerate(row_lists, start=1) for c in idx}
    if from_cols != from_rows:
        raise CodeError("column lists and row lists describe different matrices")
    return ParityCheckMatrix(n, tuple(tuple(r) for r in row_lists))


def example_matrix_8_4() -> ParityCheckMatrix:
    """A small (8, 4) code, handy for hand-traced repair examples."""
    return ParityCheckMatrix(8, ((3, 5, 6), (1, 3, 7), (1, 2, 4), (2, 4, 7, 8)))
