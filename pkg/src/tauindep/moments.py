"""Closed-form null moments of the Kendall-type independence statistics.

All functions assume H0 (mutually independent continuous columns) and an
MCAR response mechanism with independent cell indicators, ``P(R_ik = 1) = q_k``.
They are pure functions of ``n``, ``d`` and the observation probabilities.

Naming follows the statistic they describe:

* ``T_complete``  sum of squared Kendall taus on complete data
* ``T_cc``        complete-case version, rows with any missing cell dropped
* ``T_tilde``     pairwise version using every row pair observed in both columns
* ``T_hat``       sum over column pairs of the degree-4 U-statistics
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import DomainError

KNOWN = "known"
ESTIMATED = "estimated"


@dataclass(frozen=True)
class MissProfile:
    """Per-column observation probabilities ``q_1..q_d``."""

    q: tuple
    source: str = KNOWN

    def __post_init__(self):
        q = tuple(float(x) for x in self.q)
        if not q:
            raise DomainError("a profile needs at least one column")
        for k, x in enumerate(q):
            if not 0.0 < x <= 1.0:
                raise DomainError(f"q[{k}] = {x} is outside (0, 1]")
        if self.source not in (KNOWN, ESTIMATED):
            raise DomainError(f"unknown profile source {self.source!r}")
        object.__setattr__(self, "q", q)

    @classmethod
    def uniform(cls, q: float, d: int, source: str = KNOWN) -> "MissProfile":
        return cls((q,) * d, source)

    @property
    def d(self) -> int:
        return len(self.q)

    @property
    def row_complete_prob(self) -> float:
        """P(a row is fully observed) = prod_k q_k."""
        return math.prod(self.q)

    def is_uniform(self) -> bool:
        return all(x == self.q[0] for x in self.q)


def _check_n(n, minimum=2):
    if not isinstance(n, (int, np.integer)) or n < minimum:
        raise DomainError(f"n must be an integer >= {minimum}, got {n!r}")


def _check_d(d, minimum=1):
    if not isinstance(d, (int, np.integer)) or d < minimum:
        raise DomainError(f"d must be an integer >= {minimum}, got {d!r}")


def _check_q(*qs):
    for q in qs:
        if not 0.0 < q <= 1.0:
            raise DomainError(f"q = {q} is outside (0, 1]")


def mean_T_complete(n: int, d: int) -> float:
    """Null mean ``d(d-1)(2n+5) / (9n(n-1))`` of the complete-data statistic."""
    _check_n(n)
    _check_d(d)
    return d * (d - 1) * (2 * n + 5) / (9 * n * (n - 1))


def var_T_complete(n: int, d: int) -> float:
    """Null variance of the complete-data statistic."""
    _check_n(n)
    _check_d(d)
    poly = ((100 * n + 492) * n + 731) * n + 279
    return 4 * d * (d - 1) * (n - 2) * poly / (2025 * n ** 3 * (n - 1) ** 3)


def mean_T_cc(n: int, d: int, q: float) -> float:
    """Null mean of the complete-case statistic.

    ``q`` is the probability that a whole row is observed, ``E S_i``.  Under
    independent column-wise MCAR this is ``prod_k q_k``, not the per-column
    rate.
    """
    _check_n(n)
    _check_d(d)
    _check_q(q)
    return 2 * d * (d - 1) * q * q / (n * (n - 1)) * ((n - 2) * q / 9 + 0.5)


def var_T_cc(n: int, d: int, q: float) -> float:
    """Null variance of the complete-case statistic (``q = E S_i``).

    The second term carries the covariance between squared taus sharing a
    column, induced by the common completeness indicator; it vanishes at
    ``q = 1`` and for ``d = 2``.
    """
    _check_n(n)
    _check_d(d)
    _check_q(q)
    single = (
        2025
        + 16650 * (n - 2) * q
        + 675 * (111 - 91 * n + 17 * n ** 2) * q ** 2
        + 18 * (-3456 + 3694 * n - 1221 * n ** 2 + 119 * n ** 3) * q ** 3
        + 50 * (360 - 458 * n + 205 * n ** 2 - 37 * n ** 3 + 2 * n ** 4) * q ** 4
    )
    shared = (
        27
        + (-161 + 94 * n) * q
        + 8 * (26 - 25 * n + 6 * n ** 2) * q ** 2
        + 2 * (-40 + 50 * n - 21 * n ** 2 + 3 * n ** 3) * q ** 3
    )
    denom = n ** 3 * (n - 1) ** 3
    first = 4 * d * (d - 1) * q * q * single / (2025 * denom)
    second = 2 * (d + 1) * d * (d - 1) * (d - 2) * q * q * (q - 1) * shared / (27 * denom)
    return first - second


def mean_tau_tilde_sq(n: int, q_k: float, q_l: float) -> float:
    """Null ``E[tau_tilde_kl ** 2]`` for one column pair."""
    _check_n(n)
    _check_q(q_k, q_l)
    x = q_k * q_l
    return 4 * x * x / (n * (n - 1)) * ((n - 2) * x / 9 + 0.5)


def mean_T_tilde(n: int, profile: MissProfile) -> float:
    """Null mean of the pairwise statistic, a sum over column pairs k < l."""
    _check_n(n)
    q = profile.q
    return math.fsum(mean_tau_tilde_sq(n, q[k], q[l])
                     for k, l in combinations(range(len(q)), 2))


def var_tau_tilde_sq(n: int, q_k: float, q_l: float) -> float:
    """Null ``Var(tau_tilde_kl ** 2)``; depends on ``q_k`` and ``q_l`` only via their product."""
    _check_n(n)
    _check_q(q_k, q_l)
    x = q_k * q_l
    c4 = 50 * (360 - 458 * n + 205 * n ** 2 - 37 * n ** 3 + 2 * n ** 4)
    c3 = 18 * (-3456 + 3694 * n - 1221 * n ** 2 + 119 * n ** 3)
    c2 = 675 * (111 - 91 * n + 17 * n ** 2)
    c1 = 16650 * (n - 2)
    poly = (((c4 * x + c3) * x + c2) * x + c1) * x + 2025
    return 8 * x * x * poly / (2025 * n ** 3 * (n - 1) ** 3)


def cov_tau_tilde_sq(n: int, q_shared: float, q_a: float, q_b: float) -> float:
    """Null ``cov(tau_tilde_{s a} ** 2, tau_tilde_{s b} ** 2)`` for pairs sharing column ``s``.

    Symmetric in ``q_a`` and ``q_b`` once expanded, so the binding of the two
    non-shared columns does not matter.  Zero when the shared column is
    always observed.
    """
    _check_n(n)
    _check_q(q_shared, q_a, q_b)
    qk, q1, q2 = q_shared, q_a, q_b
    inner = (
        27
        + 9 * qk * (-9 + 6 * n + 2 * (n - 2) * (1 + (n - 2) * qk) * q1)
        + 2 * (n - 2) * qk * (
            9 + 9 * (n - 2) * qk
            + (2 + 4 * qk * (-4 + 5 * qk) + 3 * n * qk * (2 + (n - 5) * qk)) * q1
        ) * q2
    )
    lead = 8 * (1 - qk) * qk ** 2 * q1 ** 2 * q2 ** 2 / (27 * n ** 3 * (n - 1) ** 3)
    return lead * inner


def var_T_tilde(n: int, profile: MissProfile) -> float:
    """Null variance of the pairwise statistic.

    Sum of the per-pair variances plus twice the covariance of every
    unordered pair of column pairs that share exactly one column.  Pairs
    with no common column are independent under H0.
    """
    _check_n(n)
    q = profile.q
    d = len(q)
    if d < 2:
        raise DomainError("d must be >= 2")
    terms = [var_tau_tilde_sq(n, q[k], q[l]) for k, l in combinations(range(d), 2)]
    for s in range(d):
        others = [c for c in range(d) if c != s]
        for a, b in combinations(others, 2):
            terms.append(2 * cov_tau_tilde_sq(n, q[s], q[a], q[b]))
    return math.fsum(terms)


# Var of sum_{distinct i1..i4} a_{i1i2} a_{i3i4} is
#   sum_j C_j * (n)_j * x**j,  j = 4, 5, 6,  x = q_k q_l.
# Each falling factorial (n)_j counts row tuples spanning j distinct rows.
U_KERNEL_COEFFS = ((4, 88 / 9), (5, 352 / 75), (6, 32 / 81))


def _falling(n, j):
    out = np.ones_like(np.asarray(n, dtype=np.float64))
    for i in range(j):
        out = out * (np.asarray(n, dtype=np.float64) - i)
    return out


def u_numerator_var(n, x=1.0):
    """Null variance of the U-statistic numerator for one column pair.

    ``n`` may be an array (used with per-pair counts of co-observed rows).
    """
    x = np.asarray(x, dtype=np.float64)
    return sum(c * _falling(n, j) * x ** j for j, c in U_KERNEL_COEFFS)


def var_u_pair(n: int, q_k: float, q_l: float) -> float:
    """Null ``Var(U_kl)``."""
    _check_n(n, 4)
    _check_q(q_k, q_l)
    return float(u_numerator_var(n, q_k * q_l)) / math.perm(n, 4) ** 2


def mean_T_hat() -> float:
    """The U-statistic version is unbiased for zero under H0."""
    return 0.0


def var_T_hat(n: int, profile: MissProfile) -> float:
    """Null variance of ``T_hat = sum_{k<l} U_kl``.

    Distinct U_kl are uncorrelated under H0, so this is the sum of the
    per-pair variances.
    """
    _check_n(n, 4)
    q = np.asarray(profile.q)
    if q.size < 2:
        raise DomainError("d must be >= 2")
    k, l = np.triu_indices(q.size, 1)
    return math.fsum(u_numerator_var(n, q[k] * q[l]).tolist()) / math.perm(n, 4) ** 2


def var_T_hat_given_counts(n: int, co_observed) -> float:
    """Variance of ``T_hat`` conditional on the response mask.

    ``co_observed`` holds, for each column pair k < l, the number of rows
    observed in both columns.  Given the mask, ``U_kl`` is the complete-data
    U-statistic on those rows (still scaled by ``(n)_4``), so its variance is
    the ``q = 1`` formula evaluated at the co-observed count.  Averaged over
    the mask this equals :func:`var_T_hat`, so it is also an unbiased
    estimate of that quantity.
    """
    _check_n(n, 4)
    m = np.asarray(co_observed, dtype=np.float64)
    return math.fsum(np.atleast_1d(u_numerator_var(m)).tolist()) / math.perm(n, 4) ** 2


def total_missingness_rate(profile: MissProfile) -> float:
    """Probability that a row has at least one missing cell."""
    return 1.0 - profile.row_complete_prob


def profile_from_rates(rates: Sequence[float]) -> MissProfile:
    return MissProfile(tuple(1.0 - r for r in rates))
