"""Sign kernels and Kendall-type pair statistics for partially observed data.

Every statistic in this module is built from the masked sign kernel

    f_k(i, j) = sgn(X_ik - X_jk) * R_ik * R_jk

and the pair products ``a_ij = f_k(i, j) * f_l(i, j)``.  All sums are
accumulated as integers and divided once, so results are reproducible
bit-for-bit and can be compared exactly against brute-force enumeration.

Two layers are provided:

* per-pair functions (:func:`kendall_tau`, :func:`tau_cc`, :func:`tau_tilde`,
  :func:`u_stat_pair`) that operate on one column pair;
* :func:`pair_counts`, the all-pairs sweep used by the test engine and the
  Monte Carlo code.  It accepts an optional leading batch axis.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import perm
from typing import NamedTuple

import numpy as np

from .errors import DomainError, PreconditionError

# float64 matmul is exact for integer sums below 2**53; Q <= n**3.
MAX_ROWS = 20000


@dataclass(frozen=True, eq=False)
class ObservedMatrix:
    """An ``n x d`` sample together with its response mask.

    ``mask[i, k] == 1`` means cell ``(i, k)`` was observed.  Values under a
    zero mask are placeholders and are never read; constructors store 0.0
    there.  Both arrays are made read-only.
    """

    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        mask = np.asarray(self.mask)
        if values.ndim != 2 or mask.shape != values.shape:
            raise DomainError(
                f"values and mask must be 2-D arrays of equal shape, got "
                f"{values.shape} and {mask.shape}")
        if not np.isin(mask, (0, 1)).all():
            raise DomainError("mask entries must be 0 or 1")
        mask = mask.astype(np.int8)
        n, d = values.shape
        if n < 2 or d < 2:
            raise DomainError(f"need n >= 2 and d >= 2, got n={n}, d={d}")
        if n > MAX_ROWS:
            raise DomainError(f"n={n} exceeds the supported maximum {MAX_ROWS}")
        observed = mask == 1
        if not np.isfinite(values[observed]).all():
            raise DomainError("observed cells must hold finite values")
        values[~observed] = 0.0
        values.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def from_array(cls, x) -> "ObservedMatrix":
        """Build from an array where NaN marks a missing cell."""
        x = np.asarray(x, dtype=np.float64)
        return cls(np.where(np.isnan(x), 0.0, x), (~np.isnan(x)).astype(np.int8))

    @classmethod
    def complete(cls, x) -> "ObservedMatrix":
        x = np.asarray(x, dtype=np.float64)
        return cls(x, np.ones(x.shape, dtype=np.int8))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def complete_rows(self) -> np.ndarray:
        """Completeness indicator S_i = prod_k R_ik, as an int8 vector."""
        return self.mask.min(axis=1)

    def to_array(self) -> np.ndarray:
        """Values with NaN in every unobserved cell."""
        return np.where(self.mask == 1, self.values, np.nan)

    def __eq__(self, other):
        if not isinstance(other, ObservedMatrix):
            return NotImplemented
        return (np.array_equal(self.mask, other.mask)
                and np.array_equal(self.values, other.values))

    __hash__ = None


class PairAccumulator(NamedTuple):
    """Integer sums over ``a_ij = f_k(i,j) f_l(i,j)`` for one column pair.

    pair_sum
        S = sum over i != j of a_ij.
    square_sum
        S2 = sum over i != j of a_ij**2.
    row_square_sum
        Q = sum over i of (sum over j of a_ij)**2.
    """

    pair_sum: int
    square_sum: int
    row_square_sum: int

    def u_numerator(self) -> int:
        """Sum of a_{i1 i2} a_{i3 i4} over ordered 4-tuples of distinct rows."""
        return self.pair_sum ** 2 + 2 * self.square_sum - 4 * self.row_square_sum


def _check_column(m: ObservedMatrix, k) -> int:
    if not isinstance(k, (int, np.integer)) or not 0 <= k < m.d:
        raise IndexError(f"column index {k!r} out of range for d={m.d}")
    return int(k)


def _check_pair(m: ObservedMatrix, k, l):
    k, l = _check_column(m, k), _check_column(m, l)
    if k == l:
        raise DomainError("pair statistics need two distinct columns")
    return k, l


def sign_kernel(m: ObservedMatrix, k: int, i: int, j: int) -> int:
    """Return ``sgn(X_ik - X_jk) * R_ik * R_jk``."""
    k = _check_column(m, k)
    for r in (i, j):
        if not isinstance(r, (int, np.integer)) or not 0 <= r < m.n:
            raise IndexError(f"row index {r!r} out of range for n={m.n}")
    if i == j:
        raise DomainError("sign kernel needs two distinct rows")
    if not (m.mask[i, k] and m.mask[j, k]):
        return 0
    return int(np.sign(m.values[i, k] - m.values[j, k]))


def _kernel_column(values: np.ndarray, weight: np.ndarray) -> np.ndarray:
    """n x n int64 matrix of sgn(x_i - x_j) * w_i * w_j."""
    s = np.sign(values[:, None] - values[None, :]).astype(np.int64)
    w = weight.astype(np.int64)
    return s * w[:, None] * w[None, :]


def _scaled_pair_sum(a: np.ndarray, n: int) -> float:
    # sum over i != j counts each unordered pair twice
    return int(a.sum()) / (n * (n - 1))


def kendall_tau(m: ObservedMatrix, k: int, l: int) -> float:
    """Kendall's tau of two fully observed columns."""
    k, l = _check_pair(m, k, l)
    if not (m.mask[:, k].all() and m.mask[:, l].all()):
        raise PreconditionError(
            f"columns {k} and {l} contain missing cells; use tau_tilde or tau_cc")
    ones = np.ones(m.n, dtype=np.int8)
    a = _kernel_column(m.values[:, k], ones) * _kernel_column(m.values[:, l], ones)
    return _scaled_pair_sum(a, m.n)


def tau_cc(m: ObservedMatrix, k: int, l: int) -> float:
    """Complete-case Kendall tau: only rows observed in every column count.

    The normalisation keeps the full ``n(n-1)/2`` denominator.
    """
    k, l = _check_pair(m, k, l)
    s = m.complete_rows
    a = _kernel_column(m.values[:, k], s) * _kernel_column(m.values[:, l], s)
    return _scaled_pair_sum(a, m.n)


def tau_tilde(m: ObservedMatrix, k: int, l: int) -> float:
    """Pairwise Kendall tau using every row pair observed in both columns."""
    k, l = _check_pair(m, k, l)
    a = (_kernel_column(m.values[:, k], m.mask[:, k])
         * _kernel_column(m.values[:, l], m.mask[:, l]))
    return _scaled_pair_sum(a, m.n)


def pair_accumulator(m: ObservedMatrix, k: int, l: int) -> PairAccumulator:
    k, l = _check_pair(m, k, l)
    a = (_kernel_column(m.values[:, k], m.mask[:, k])
         * _kernel_column(m.values[:, l], m.mask[:, l]))
    rows = a.sum(axis=1)
    return PairAccumulator(int(a.sum()), int((a * a).sum()), int((rows * rows).sum()))


def u_stat_pair(m: ObservedMatrix, k: int, l: int) -> float:
    """Degree-4 U-statistic ``U_kl`` for one column pair.

    Uses the identity

        sum over distinct (i1, i2, i3, i4) of a_{i1 i2} a_{i3 i4}
            = S**2 + 2 S2 - 4 Q

    which removes from ``S**2`` every term whose two index pairs overlap.
    Runs in O(n**2) instead of O(n**4).
    """
    if m.n < 4:
        raise DomainError("U-statistic requires n >= 4")
    acc = pair_accumulator(m, k, l)
    return acc.u_numerator() / perm(m.n, 4)


class PairCounts(NamedTuple):
    """All-pairs integer accumulators, each of shape ``(..., d, d)``.

    ``row_square_sum`` is ``None`` when it was not requested.
    """

    pair_sum: np.ndarray
    square_sum: np.ndarray | None
    row_square_sum: np.ndarray | None


def _exact_int(x: np.ndarray) -> np.ndarray:
    return np.rint(x).astype(np.int64)


def pair_counts(values: np.ndarray, weight: np.ndarray,
                with_u_terms: bool = False) -> PairCounts:
    """Accumulate S (and optionally S2, Q) for every column pair at once.

    Parameters
    ----------
    values : (..., n, d) array
        Cell values; entries with zero weight may hold anything finite.
    weight : (..., n, d) array of {0, 1}
        Per-cell weights, the response mask for the pairwise statistics or
        the broadcast completeness indicator for the complete-case one.
    with_u_terms : bool
        Also compute ``square_sum`` and ``row_square_sum``.

    Returns
    -------
    PairCounts
        Symmetric ``(..., d, d)`` int64 arrays.  Diagonals are meaningless.
    """
    values = np.asarray(values, dtype=np.float64)
    weight = np.asarray(weight, dtype=np.int8)
    *batch, n, d = values.shape
    # (..., d, n, n) sign tensor, one n x n kernel per column
    v = np.swapaxes(values, -1, -2)
    w = np.swapaxes(weight, -1, -2)
    f = np.sign(v[..., :, None] - v[..., None, :]).astype(np.int8)
    f *= w[..., :, None] * w[..., None, :]
    flat = f.reshape(*batch, d, n * n).astype(np.float64)
    s = _exact_int(flat @ np.swapaxes(flat, -1, -2))
    if not with_u_terms:
        return PairCounts(s, None, None)
    absf = np.abs(flat)
    s2 = _exact_int(absf @ np.swapaxes(absf, -1, -2))
    # row sums: g[..., i, k, l] = sum_j f_k(i, j) f_l(i, j)
    rows = np.swapaxes(f, -3, -2).astype(np.float64)          # (..., n, d, n)
    g = _exact_int(rows @ np.swapaxes(rows, -1, -2))          # (..., n, d, d)
    q = (g * g).sum(axis=-3)
    return PairCounts(s, s2, q)


def upper_pairs(d: int):
    """Index arrays for the unordered pairs k < l in lexicographic order."""
    return np.triu_indices(d, 1)
