"""Reference implementations used to verify the fast paths and closed forms.

Nothing here is used by the test engine.  The brute-force U-statistic does
its own sign arithmetic, and the exact enumeration works from permutations
and masks rather than from any closed form.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .engine import StatisticKind, statistic_from_counts
from .errors import DomainError, UnsupportedConfigurationError
from .kernels import ObservedMatrix, pair_counts
from .synthetic import DesignSpec, MissSpec, derive_seed, draw_design, draw_mask, make_rng

BRUTEFORCE_MAX_N = 12
ENUMERATION_MAX_N = 6


def _sgn(x: float) -> int:
    return (x > 0) - (x < 0)


def u_stat_bruteforce(m: ObservedMatrix, k: int, l: int, force: bool = False) -> float:
    """Literal quadruple sum over distinct ordered row tuples, O(n**4)."""
    n = m.n
    if n < 4:
        raise DomainError("U-statistic requires n >= 4")
    if n > BRUTEFORCE_MAX_N and not force:
        raise DomainError(f"n={n} exceeds the brute-force guard {BRUTEFORCE_MAX_N}; pass force=True")
    x, r = m.values.tolist(), m.mask.tolist()

    def f(col, i, j):
        return _sgn(x[i][col] - x[j][col]) * r[i][col] * r[j][col]

    total = 0
    for i1, i2, i3, i4 in itertools.permutations(range(n), 4):
        total += f(k, i1, i2) * f(l, i1, i2) * f(k, i3, i4) * f(l, i3, i4)
    return total / (n * (n - 1) * (n - 2) * (n - 3))


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    variance: float
    se_mean: float
    se_variance: float
    replications: int

    def mean_within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.mean - target) <= k * self.se_mean

    def variance_within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.variance - target) <= k * self.se_variance


def jackknife_moments(x) -> MomentEstimate:
    """Sample mean and variance with leave-one-out jackknife standard errors."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if n < 3:
        raise DomainError("need at least 3 replications")
    mean = x.mean()
    dev = x - mean
    ss = np.dot(dev, dev)
    var = ss / (n - 1)
    loo_var = (ss - n / (n - 1) * dev * dev) / (n - 2)
    centred = loo_var - loo_var.mean()
    se_var = math.sqrt((n - 1) / n * np.dot(centred, centred))
    return MomentEstimate(float(mean), float(var), math.sqrt(var / n), se_var, n)


def _simulate_chunk(kind, design, miss, size, seed, pair):
    rng = make_rng(seed)
    values = draw_design(design, rng, (size,))
    mask = draw_mask(values, miss, rng)
    if kind is StatisticKind.COMPLETE_CASE:
        weight = np.broadcast_to(mask.min(axis=-1, keepdims=True), mask.shape)
    else:
        weight = mask
    counts = pair_counts(values, weight, with_u_terms=kind is StatisticKind.U_STAT)
    n = design.n
    if pair is None:
        return statistic_from_counts(counts, n, kind)
    k, l = pair
    s = counts.pair_sum[:, k, l]
    if kind is StatisticKind.U_STAT:
        num = s * s + 2 * counts.square_sum[:, k, l] - 4 * counts.row_square_sum[:, k, l]
        return num / math.perm(n, 4)
    return (s * s) / float(n * (n - 1)) ** 2


def mc_samples(kind, design: DesignSpec, miss: MissSpec, reps: int, seed: int,
               pair=None, chunk: int = 4096) -> np.ndarray:
    """Simulated null values of a statistic, in replication order.

    Replications are produced in fixed-size chunks, each from its own
    derived seed, so the output depends only on ``seed`` and ``chunk``.
    ``pair=(k, l)`` returns the single-pair term (``U_kl`` or ``tau_kl**2``)
    instead of the full sum.
    """
    kind = StatisticKind.parse(kind)
    if not design.is_null:
        raise UnsupportedConfigurationError("moment oracle is defined under the null only")
    if miss.mechanism != "mcar":
        raise UnsupportedConfigurationError("moment oracle supports MCAR only")
    if kind is StatisticKind.COMPLETE and any(miss.rates):
        raise UnsupportedConfigurationError("complete statistic needs zero missingness")
    if kind is StatisticKind.U_STAT and design.n < 4:
        raise DomainError("U-statistic requires n >= 4")
    out = []
    for c, start in enumerate(range(0, reps, chunk)):
        size = min(chunk, reps - start)
        out.append(_simulate_chunk(kind, design, miss, size, derive_seed(seed, c), pair))
    return np.concatenate(out)


def mc_moments(kind, design: DesignSpec, miss: MissSpec, reps: int, seed: int,
               pair=None) -> MomentEstimate:
    """Monte Carlo mean and variance of a statistic under the null."""
    if reps < 1000:
        raise DomainError("mc_moments needs at least 1000 replications")
    return jackknife_moments(mc_samples(kind, design, miss, reps, seed, pair))


# --- exact enumeration -----------------------------------------------------
#
# Under H0 the ranks of a column are a uniform random permutation and the
# mask is independent Bernoulli(q).  For small n all (permutation, mask)
# states can be enumerated, giving exact moments of the pair kernels.

@lru_cache(maxsize=32)
def _column_moments(n: int, q: float):
    if not 2 <= n <= ENUMERATION_MAX_N:
        raise DomainError(f"enumeration supports 2 <= n <= {ENUMERATION_MAX_N}")
    perms = np.array(list(itertools.permutations(range(n))))
    masks = np.array(list(itertools.product((0, 1), repeat=n)))
    k = masks.sum(axis=1)
    w_mask = q ** k * (1.0 - q) ** (n - k)
    pairs = list(itertools.combinations(range(n), 2))
    i = np.array([p[0] for p in pairs])
    j = np.array([p[1] for p in pairs])
    sg = np.sign(perms[:, i] - perms[:, j]).astype(np.float64)
    rr = (masks[:, i] * masks[:, j]).astype(np.float64)
    f = (sg[:, None, :] * rr[None, :, :]).reshape(-1, len(pairs))
    w = (w_mask[None, :] / len(perms)).repeat(len(perms), axis=0).ravel()
    keep = w > 0
    f, w = f[keep], w[keep]
    p = len(pairs)
    m2 = f.T @ (w[:, None] * f)
    g = (f[:, :, None] * f[:, None, :]).reshape(len(f), p * p)
    m4 = (g.T @ (w[:, None] * g)).reshape(p, p, p, p)
    return m2, m4, tuple(pairs)


def exact_pair_moments(n: int, q_k: float, q_l: float) -> dict:
    """Exact null moments of one column pair by enumeration.

    Returns ``mean_tau_sq``, ``var_tau_sq`` and ``var_u`` (variance of
    ``U_kl``).
    """
    mk2, mk4, pairs = _column_moments(n, float(q_k))
    ml2, ml4, _ = _column_moments(n, float(q_l))
    c = 2.0 / (n * (n - 1))
    e2 = c ** 2 * np.sum(mk2 * ml2)
    e4 = c ** 4 * np.sum(mk4 * ml4)
    out = {"mean_tau_sq": float(e2), "var_tau_sq": float(e4 - e2 ** 2)}
    if n >= 4:
        disjoint = np.array([[not set(a) & set(b) for b in pairs] for a in pairs])
        sel = disjoint[:, :, None, None] & disjoint[None, None, :, :]
        # each unordered disjoint (pair, pair) appears 4 times as ordered row tuples
        var_num = 16.0 * np.sum((mk4 * ml4)[sel])
        out["var_u"] = float(var_num) / math.perm(n, 4) ** 2
    return out


def exact_shared_cov(n: int, q_shared: float, q_a: float, q_b: float) -> float:
    """Exact ``cov(tau_sa**2, tau_sb**2)`` by enumeration."""
    ms2, ms4, _ = _column_moments(n, float(q_shared))
    ma2, _, _ = _column_moments(n, float(q_a))
    mb2, _, _ = _column_moments(n, float(q_b))
    c = 2.0 / (n * (n - 1))
    joint = c ** 4 * np.einsum("abcd,ab,cd->", ms4, ma2, mb2)
    return float(joint - c ** 4 * np.sum(ms2 * ma2) * np.sum(ms2 * mb2))
