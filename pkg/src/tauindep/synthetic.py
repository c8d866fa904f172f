"""Seeded data generators and missingness mechanisms for simulation studies."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, PreconditionError
from .kernels import ObservedMatrix

NULL_MARGINALS = ("gamma_4_2", "student_t4", "cauchy_std", "lognormal_01", "normal_std")
ALTERNATIVES = ("gd", "nd", "equicorr_normal")
DESIGNS = NULL_MARGINALS + ALTERNATIVES
MECHANISMS = ("mcar", "mar_censor", "mar_rank")


def derive_seed(master: int, *keys: int) -> int:
    """64-bit seed for the stream identified by ``keys`` under ``master``.

    Counter-based: the result depends only on the key values, so streams
    can be generated in any order or on any worker.
    """
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in keys))
    lo, hi = ss.generate_state(2, np.uint32)
    return int(lo) | (int(hi) << 32)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def draw_marginal(name: str, rng: np.random.Generator, size) -> np.ndarray:
    """I.i.d. draws from one of the null marginals.

    ``gamma_4_2`` is shape 4 and rate 2 (mean 2).
    """
    if name == "gamma_4_2":
        return rng.gamma(4.0, 0.5, size)
    if name == "student_t4":
        return rng.standard_t(4.0, size)
    if name == "cauchy_std":
        return rng.standard_cauchy(size)
    if name == "lognormal_01":
        return rng.lognormal(0.0, 1.0, size)
    if name == "normal_std":
        return rng.standard_normal(size)
    raise DomainError(f"unknown null marginal {name!r}")


def gd_root(d: int) -> np.ndarray:
    """Symmetric square root of ``0.95 I + 0.05 e e^T``.

    The matrix has eigenvalue 0.95 on the complement of ``e`` and
    ``0.95 + 0.05 d`` along ``e``.
    """
    j = np.full((d, d), 1.0 / d)
    return math.sqrt(0.95) * (np.eye(d) - j) + math.sqrt(0.95 + 0.05 * d) * j


@dataclass(frozen=True)
class DesignSpec:
    """One data-generating design.

    ``design`` is a null marginal name (i.i.d. cells), ``gd`` (global
    dependence through lognormal innovations), ``nd`` (neighbour dependence
    through shared Cauchy innovations) or ``equicorr_normal`` (standard
    normal marginals with common correlation ``rho``).
    """

    n: int
    d: int
    design: str
    seed: int = 0
    rho: float = 0.0

    def __post_init__(self):
        if self.n < 2 or self.d < 2:
            raise DomainError(f"need n >= 2 and d >= 2, got n={self.n}, d={self.d}")
        if self.design not in DESIGNS:
            raise DomainError(f"unknown design {self.design!r}; choose from {DESIGNS}")
        if not 0.0 <= self.rho < 1.0:
            raise DomainError(f"rho must lie in [0, 1), got {self.rho}")
        if self.seed < 0:
            raise DomainError("seed must be non-negative")

    @property
    def is_null(self) -> bool:
        return self.design in NULL_MARGINALS or (
            self.design == "equicorr_normal" and self.rho == 0.0)


def draw_design(spec: DesignSpec, rng: np.random.Generator, batch=()) -> np.ndarray:
    """Values of shape ``(*batch, n, d)`` for ``spec``."""
    batch = tuple(batch)
    n, d = spec.n, spec.d
    if spec.design in NULL_MARGINALS:
        return draw_marginal(spec.design, rng, batch + (n, d))
    if spec.design == "gd":
        z = rng.lognormal(0.0, 1.0, batch + (n, d))
        zbar = z.mean(axis=-1, keepdims=True)
        return math.sqrt(0.95) * (z - zbar) + math.sqrt(0.95 + 0.05 * d) * zbar
    if spec.design == "nd":
        z = rng.standard_cauchy(batch + (n, d + 1))
        return 0.6 * z[..., :-1] + 0.8 * z[..., 1:]
    z = rng.standard_normal(batch + (n, d))
    w = rng.standard_normal(batch + (n, 1))
    return math.sqrt(1.0 - spec.rho) * z + math.sqrt(spec.rho) * w


def sample(spec: DesignSpec) -> ObservedMatrix:
    """Fully observed sample, deterministic given ``spec.seed``."""
    return ObservedMatrix.complete(draw_design(spec, make_rng(spec.seed)))


@dataclass(frozen=True)
class MissSpec:
    """A missingness mechanism with per-column rates.

    mcar
        each cell is masked independently with probability ``rates[k]``.
    mar_censor
        in each non-reference column, rows whose reference value is in the
        top half of its ranks are masked with probability
        ``min(1, 2 * rates[k])``; the bottom half is never masked.
    mar_rank
        row ``i`` is masked with probability
        ``min(1, 2 * rates[k] * rank_i / (n + 1))``, which keeps the mean
        rate at ``rates[k]``.

    The reference column of a MAR mechanism is never masked; its rate is
    forced to zero.
    """

    mechanism: str
    rates: tuple
    seed: int = 0
    ref_col: int = 0

    def __post_init__(self):
        if self.mechanism not in MECHANISMS:
            raise DomainError(f"unknown mechanism {self.mechanism!r}; choose from {MECHANISMS}")
        rates = tuple(float(r) for r in self.rates)
        for k, r in enumerate(rates):
            if not 0.0 <= r < 1.0:
                raise DomainError(f"rate[{k}] = {r} is outside [0, 1)")
        if self.mechanism != "mcar":
            if not 0 <= self.ref_col < len(rates):
                raise DomainError(f"reference column {self.ref_col} out of range")
            rates = rates[:self.ref_col] + (0.0,) + rates[self.ref_col + 1:]
        object.__setattr__(self, "rates", rates)

    @classmethod
    def mcar(cls, rate: float, d: int, seed: int = 0) -> "MissSpec":
        return cls("mcar", (rate,) * d, seed)


def _ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks along the row axis (ties broken by position)."""
    order = np.argsort(x, axis=-2, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(1, x.shape[-2] + 1)[:, None], axis=-2)
    return ranks


def mask_probabilities(values: np.ndarray, spec: MissSpec) -> np.ndarray:
    """Per-cell masking probabilities, shape of ``values`` (``(..., n, d)``)."""
    rates = np.asarray(spec.rates)
    n, d = values.shape[-2:]
    if rates.size != d:
        raise DomainError(f"spec has {rates.size} rates, data has {d} columns")
    if spec.mechanism == "mcar":
        return np.broadcast_to(rates, values.shape)
    ref = _ranks(values[..., spec.ref_col:spec.ref_col + 1])   # (..., n, 1)
    if spec.mechanism == "mar_censor":
        top = (ref > n / 2).astype(np.float64)
        p = top * np.minimum(1.0, 2.0 * rates)
    else:
        p = np.minimum(1.0, rates * 2.0 * ref / (n + 1))
    p[..., spec.ref_col] = 0.0
    return p


def draw_mask(values: np.ndarray, spec: MissSpec, rng: np.random.Generator) -> np.ndarray:
    """Response mask (1 = observed) for ``values`` under ``spec``.

    MCAR masks never read ``values`` beyond their shape.
    """
    u = rng.random(values.shape)
    return (u >= mask_probabilities(values, spec)).astype(np.int8)


def amputate(m: ObservedMatrix, spec: MissSpec) -> ObservedMatrix:
    """Apply a missingness mechanism to a fully observed matrix."""
    if not m.mask.all():
        raise PreconditionError("amputate expects a fully observed matrix")
    mask = draw_mask(m.values, spec, make_rng(spec.seed))
    return ObservedMatrix(m.values, mask)


def rates_for(d: int, rates: Sequence[float] | float, default: float | None = None) -> tuple:
    """Expand a rate list to ``d`` columns.

    Leading columns take the listed rates; the rest take ``default`` (or the
    last listed rate when no default is given).
    """
    if isinstance(rates, (int, float)):
        return (float(rates),) * d
    rates = [float(r) for r in rates]
    if not rates:
        raise DomainError("at least one rate is required")
    fill = rates[-1] if default is None else float(default)
    return tuple((rates + [fill] * d)[:d])
