"""Test statistics, standardisation and p-values."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from math import perm

import numpy as np

from . import moments
from .errors import DegenerateError, DomainError, PreconditionError
from .kernels import ObservedMatrix, pair_counts, upper_pairs
from .moments import ESTIMATED, MissProfile


class StatisticKind(str, enum.Enum):
    COMPLETE = "complete"
    COMPLETE_CASE = "complete_case"
    PAIRWISE = "pairwise_tilde"
    U_STAT = "u_stat"

    @classmethod
    def parse(cls, value) -> "StatisticKind":
        if isinstance(value, cls):
            return value
        alias = {"cc": cls.COMPLETE_CASE, "tilde": cls.PAIRWISE,
                 "ustat": cls.U_STAT, "pairwise": cls.PAIRWISE}
        try:
            return alias.get(value) or cls(value)
        except ValueError:
            raise DomainError(f"unknown statistic kind {value!r}") from None


ESTIMATE = "estimate"
UNBIASED = "unbiased"
PLUGIN = "plugin"


@dataclass(frozen=True)
class TestResult:
    """Outcome of one independence test.

    ``variance_method`` is ``"known"`` when the moments used a supplied
    profile, ``"plugin"`` when estimated ``q_hat`` was substituted into the
    closed forms and ``"unbiased"`` for the mask-conditional U-statistic
    variance.
    """

    statistic_kind: StatisticKind
    raw: float
    null_mean: float
    null_var: float
    z: float
    p_value: float
    q_used: MissProfile
    n: int
    d: int
    sided: str = "two"
    variance_method: str = "known"

    __test__ = False  # not a pytest class

    def reject(self, alpha: float = 0.05) -> bool:
        return self.p_value < alpha


def normal_sf(z: float) -> float:
    """Upper tail ``1 - Phi(z)`` of the standard normal."""
    if not math.isfinite(z):
        raise DomainError(f"z must be finite, got {z}")
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def estimate_q(m: ObservedMatrix) -> MissProfile:
    """Column means of the response mask."""
    q = m.mask.mean(axis=0)
    empty = np.flatnonzero(q == 0)
    if empty.size:
        raise DegenerateError(f"column fully missing: {empty.tolist()}")
    return MissProfile(tuple(q.tolist()), ESTIMATED)


def _weights(m: ObservedMatrix, kind: StatisticKind) -> np.ndarray:
    if kind is StatisticKind.COMPLETE:
        if not m.mask.all():
            raise PreconditionError(
                "the complete-data statistic needs a fully observed matrix")
        return m.mask
    if kind is StatisticKind.COMPLETE_CASE:
        return np.broadcast_to(m.complete_rows[:, None], m.mask.shape)
    return m.mask


def statistic_from_counts(counts, n: int, kind: StatisticKind) -> np.ndarray:
    """Reduce all-pairs accumulators to the statistic; works on batches."""
    d = counts.pair_sum.shape[-1]
    k, l = upper_pairs(d)
    s = counts.pair_sum[..., k, l]
    if kind is StatisticKind.U_STAT:
        num = s * s + 2 * counts.square_sum[..., k, l] - 4 * counts.row_square_sum[..., k, l]
        return num.sum(axis=-1) / perm(n, 4)
    # tau = S / (n(n-1)) with S summed over ordered pairs
    return (s * s).sum(axis=-1) / float(n * (n - 1)) ** 2


def statistic(m: ObservedMatrix, kind) -> float:
    """Sum over column pairs k < l of the squared pair statistic, or of U_kl."""
    kind = StatisticKind.parse(kind)
    if kind is StatisticKind.U_STAT and m.n < 4:
        raise DomainError("U-statistic requires n >= 4")
    counts = pair_counts(m.values, _weights(m, kind),
                         with_u_terms=kind is StatisticKind.U_STAT)
    return float(statistic_from_counts(counts, m.n, kind))


def co_observed_counts(m: ObservedMatrix) -> np.ndarray:
    """Rows observed in both columns, for every pair k < l."""
    mk = m.mask.astype(np.int64)
    k, l = upper_pairs(m.d)
    return (mk.T @ mk)[k, l]


def null_moments(m: ObservedMatrix, kind, q_source=ESTIMATE,
                 moment_estimator: str = UNBIASED):
    """Null mean and variance matched to ``kind``.

    Returns ``(mean, var, profile, method)``.
    """
    kind = StatisticKind.parse(kind)
    n, d = m.n, m.d
    if isinstance(q_source, MissProfile):
        if q_source.d != d:
            raise DomainError(f"profile has {q_source.d} columns, data has {d}")
        profile, method = q_source, "known"
    elif q_source == ESTIMATE:
        profile, method = estimate_q(m), PLUGIN
    else:
        raise DomainError(f"q_source must be a MissProfile or {ESTIMATE!r}")
    if moment_estimator not in (UNBIASED, PLUGIN):
        raise DomainError(f"unknown moment estimator {moment_estimator!r}")

    if kind is StatisticKind.COMPLETE:
        return moments.mean_T_complete(n, d), moments.var_T_complete(n, d), profile, method
    if kind is StatisticKind.COMPLETE_CASE:
        if method == "known":
            q = profile.row_complete_prob
        else:
            q = float(m.complete_rows.mean())
            if q == 0.0:
                raise DegenerateError("no complete rows: complete-case statistic is degenerate")
        return moments.mean_T_cc(n, d, q), moments.var_T_cc(n, d, q), profile, method
    if kind is StatisticKind.PAIRWISE:
        return moments.mean_T_tilde(n, profile), moments.var_T_tilde(n, profile), profile, method
    if n < 4:
        raise DomainError("U-statistic requires n >= 4")
    if method == PLUGIN and moment_estimator == UNBIASED:
        var = moments.var_T_hat_given_counts(n, co_observed_counts(m))
        method = UNBIASED
    else:
        var = moments.var_T_hat(n, profile)
    return moments.mean_T_hat(), var, profile, method


def run_test(m: ObservedMatrix, kind="u_stat", q_source=ESTIMATE, sided: str = "two",
             moment_estimator: str = UNBIASED) -> TestResult:
    """Standardise the chosen statistic and compute its normal p-value.

    Parameters
    ----------
    m : ObservedMatrix
    kind : StatisticKind or str
        ``complete``, ``complete_case``, ``pairwise_tilde`` or ``u_stat``
        (aliases ``cc``, ``tilde``, ``ustat``).
    q_source : MissProfile or "estimate"
        Known observation probabilities, or estimate them from the mask.
    sided : {"two", "upper"}
        ``two`` rejects for large ``|z|``; ``upper`` only for large ``z``.
    moment_estimator : {"unbiased", "plugin"}
        Only used for ``u_stat`` with estimated ``q``.  ``unbiased`` uses the
        mask-conditional variance; ``plugin`` substitutes ``q_hat`` into the
        closed form.
    """
    kind = StatisticKind.parse(kind)
    if sided not in ("two", "upper"):
        raise DomainError(f"sided must be 'two' or 'upper', got {sided!r}")
    raw = statistic(m, kind)
    mean, var, profile, method = null_moments(m, kind, q_source, moment_estimator)
    if not var > 0.0:
        raise DegenerateError(f"null variance is {var}; configuration is degenerate")
    z = (raw - mean) / math.sqrt(var)
    if sided == "two":
        p = min(1.0, 2.0 * normal_sf(abs(z)))
    else:
        p = normal_sf(z)
    return TestResult(kind, raw, mean, var, z, p, profile, m.n, m.d, sided, method)
