import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tauindep import (DegenerateError, DomainError, MissProfile, ObservedMatrix,
                      PreconditionError, StatisticKind, estimate_q, moments, normal_sf,
                      run_test, statistic, tau_cc, tau_tilde, u_stat_pair)
from tauindep.engine import co_observed_counts, null_moments

from conftest import observed_matrices, random_matrix


def pairwise_sum(m, fn, square=True):
    d = m.d
    vals = [fn(m, k, l) for k in range(d) for l in range(k + 1, d)]
    return math.fsum(v * v if square else v for v in vals)


def test_statistic_matches_per_pair_sums(rng):
    m = random_matrix(rng, 12, 5, 0.75)
    assert statistic(m, "tilde") == pytest.approx(pairwise_sum(m, tau_tilde), abs=1e-15)
    assert statistic(m, "cc") == pytest.approx(pairwise_sum(m, tau_cc), abs=1e-15)
    assert statistic(m, "ustat") == pytest.approx(pairwise_sum(m, u_stat_pair, False), abs=1e-15)


def test_statistic_kind_parse():
    assert StatisticKind.parse("cc") is StatisticKind.COMPLETE_CASE
    assert StatisticKind.parse("pairwise_tilde") is StatisticKind.PAIRWISE
    assert StatisticKind.parse(StatisticKind.U_STAT) is StatisticKind.U_STAT
    with pytest.raises(DomainError):
        StatisticKind.parse("spearman")


def test_normal_sf():
    assert normal_sf(0.0) == 0.5
    assert normal_sf(1.959963984540054) == pytest.approx(0.025, rel=1e-12)
    assert normal_sf(-1.0) == pytest.approx(1 - normal_sf(1.0), rel=1e-15)
    with pytest.raises(DomainError):
        normal_sf(float("nan"))


def test_estimate_q_and_degenerate_column():
    m = ObservedMatrix.from_array([[1.0, np.nan], [2.0, 1.0], [3.0, np.nan], [0.0, 2.0]])
    assert estimate_q(m).q == (1.0, 0.5)
    assert estimate_q(m).source == "estimated"
    empty = ObservedMatrix.from_array([[1.0, np.nan], [2.0, np.nan], [3.0, np.nan]])
    with pytest.raises(DegenerateError, match="fully missing"):
        estimate_q(empty)


def test_complete_kind_requires_full_data(rng):
    m = random_matrix(rng, 8, 3, 0.7)
    with pytest.raises(PreconditionError):
        run_test(m, "complete")


def test_cc_without_complete_rows_is_degenerate():
    x = np.array([[1.0, np.nan], [np.nan, 1.0], [2.0, np.nan], [np.nan, 3.0], [1.0, np.nan]])
    with pytest.raises(DegenerateError):
        run_test(ObservedMatrix.from_array(x), "cc")


def test_u_stat_needs_four_rows():
    m = ObservedMatrix.complete(np.arange(6.0).reshape(3, 2))
    with pytest.raises(DomainError, match="n >= 4"):
        run_test(m)


def test_known_profile_path(rng):
    m = random_matrix(rng, 30, 6, 0.9)
    profile = MissProfile.uniform(0.9, 6)
    res = run_test(m, "ustat", profile)
    assert res.variance_method == "known"
    assert res.null_var == pytest.approx(moments.var_T_hat(30, profile))
    cc = run_test(m, "cc", profile)
    assert cc.null_mean == pytest.approx(moments.mean_T_cc(30, 6, 0.9 ** 6))
    with pytest.raises(DomainError):
        run_test(m, "ustat", MissProfile.uniform(0.9, 5))


def test_estimator_choices(rng):
    m = random_matrix(rng, 25, 4, 0.85)
    unb = run_test(m)
    plug = run_test(m, moment_estimator="plugin")
    assert unb.variance_method == "unbiased" and plug.variance_method == "plugin"
    assert unb.raw == plug.raw
    assert unb.null_var == pytest.approx(
        moments.var_T_hat_given_counts(25, co_observed_counts(m)))
    assert plug.null_var == pytest.approx(moments.var_T_hat(25, estimate_q(m)))
    with pytest.raises(DomainError):
        run_test(m, moment_estimator="bootstrap")


def test_cc_estimated_uses_complete_row_fraction(rng):
    m = random_matrix(rng, 30, 4, 0.85)
    q = float(m.complete_rows.mean())
    mean, var, _, _ = null_moments(m, "cc")
    assert mean == pytest.approx(moments.mean_T_cc(30, 4, q))
    assert var == pytest.approx(moments.var_T_cc(30, 4, q))


def test_sidedness(rng):
    x = rng.standard_normal((40, 6))
    x[:, 1] = x[:, 0] + 0.1 * x[:, 1]
    m = ObservedMatrix.complete(x)
    two = run_test(m, sided="two")
    up = run_test(m, sided="upper")
    assert two.z == up.z > 0
    assert up.p_value == pytest.approx(two.p_value / 2)
    assert two.reject(0.05)
    with pytest.raises(DomainError):
        run_test(m, sided="lower")


def test_complete_statistic_on_full_data(rng):
    m = ObservedMatrix.complete(rng.standard_normal((20, 4)))
    a = run_test(m, "complete")
    assert a.null_mean == pytest.approx(moments.mean_T_complete(20, 4))
    for kind in ("cc", "tilde"):
        b = run_test(m, kind)
        assert b.raw == pytest.approx(a.raw, abs=1e-15)
        assert b.z == pytest.approx(a.z, rel=1e-10)


def test_result_fields(rng):
    res = run_test(random_matrix(rng, 15, 3))
    assert (res.n, res.d, res.sided) == (15, 3, "two")
    assert res.statistic_kind is StatisticKind.U_STAT
    assert 0.0 <= res.p_value <= 1.0


@settings(max_examples=80, deadline=None)
@given(observed_matrices(min_n=4, max_n=9, min_d=2, max_d=4))
def test_run_test_is_row_permutation_invariant(m):
    perm = np.arange(m.n)[::-1]
    p = ObservedMatrix(m.values[perm], m.mask[perm])
    try:
        a = run_test(m)
    except DegenerateError:
        with pytest.raises(DegenerateError):
            run_test(p)
        return
    b = run_test(p)
    assert (a.raw, a.z, a.p_value) == (b.raw, b.z, b.p_value)
