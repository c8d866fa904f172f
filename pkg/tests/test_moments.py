"""Closed forms against exact enumeration and other independent references."""
from fractions import Fraction
from math import comb, perm

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tauindep import DomainError, MissProfile, moments, total_missingness_rate
from tauindep.oracle import exact_pair_moments, exact_shared_cov

qs = st.floats(0.05, 1.0)


def complete_var_fraction(n, d):
    poly = 100 * n ** 3 + 492 * n ** 2 + 731 * n + 279
    return Fraction(4 * d * (d - 1) * (n - 2) * poly, 2025 * n ** 3 * (n - 1) ** 3)


def cc_mixture_moments(n, d, q):
    """Moments of the complete-case statistic from its binomial mixture.

    With ``m`` complete rows the statistic is the complete-data statistic on
    those rows scaled by ``(m(m-1) / (n(n-1)))**2``.
    """
    first = second = 0.0
    for m in range(2, n + 1):
        w = comb(n, m) * q ** m * (1 - q) ** (n - m)
        c2 = (m * (m - 1) / (n * (n - 1))) ** 2
        mu = moments.mean_T_complete(m, d)
        first += w * c2 * mu
        second += w * c2 ** 2 * (moments.var_T_complete(m, d) + mu ** 2)
    return first, second - first ** 2


# --- frozen reference values ------------------------------------------------

def test_complete_data_reference_values():
    assert moments.mean_T_complete(10, 4) == pytest.approx(10 / 27, rel=1e-15)
    assert moments.var_T_complete(10, 4) == pytest.approx(
        float(complete_var_fraction(10, 4)), rel=1e-14)
    assert moments.var_T_complete(10, 4) == pytest.approx(0.0407844170096022, rel=1e-12)


def test_frozen_values_from_enumeration():
    # exact enumeration over all permutations and masks, n = 6, q = 0.7
    assert moments.mean_tau_tilde_sq(6, 0.7, 0.7) == pytest.approx(0.022978459259259, rel=1e-12)
    assert moments.var_tau_tilde_sq(6, 0.7, 0.7) == pytest.approx(0.0022179958401798, rel=1e-12)
    assert moments.var_u_pair(6, 0.7, 0.7) == pytest.approx(0.0023326551588763, rel=1e-12)
    assert moments.cov_tau_tilde_sq(5, 0.7, 0.9, 0.6) == pytest.approx(6.0973175088e-4, rel=1e-9)


def test_var_T_hat_reference_values():
    assert moments.var_T_hat(10, MissProfile.uniform(1.0, 4)) == pytest.approx(0.0592733686067019)
    assert moments.var_T_hat(40, MissProfile.uniform(0.9, 16)) == pytest.approx(0.0111450305836315)


# --- enumeration oracle --------------------------------------------------------

@pytest.mark.parametrize("n", [4, 5, 6])
@pytest.mark.parametrize("q_k, q_l", [(1.0, 1.0), (0.7, 0.7), (0.8, 0.5), (0.3, 0.9)])
def test_pair_moments_match_enumeration(n, q_k, q_l):
    exact = exact_pair_moments(n, q_k, q_l)
    assert moments.mean_tau_tilde_sq(n, q_k, q_l) == pytest.approx(exact["mean_tau_sq"], rel=1e-10)
    assert moments.var_tau_tilde_sq(n, q_k, q_l) == pytest.approx(exact["var_tau_sq"], rel=1e-10)
    assert moments.var_u_pair(n, q_k, q_l) == pytest.approx(exact["var_u"], rel=1e-10)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
@pytest.mark.parametrize("q_s, q_a, q_b", [
    (0.7, 0.9, 0.6), (0.5, 1.0, 0.8), (0.8, 0.5, 1.0), (1.0, 0.6, 0.7), (0.6, 0.6, 0.6)])
def test_shared_covariance_matches_enumeration(n, q_s, q_a, q_b):
    assert moments.cov_tau_tilde_sq(n, q_s, q_a, q_b) == pytest.approx(
        exact_shared_cov(n, q_s, q_a, q_b), rel=1e-9, abs=1e-15)


def test_u_kernel_coefficients_from_enumeration():
    # the three coefficients are pinned by n = 4, 5, 6 at q = 1
    for n in (4, 5, 6):
        num_var = exact_pair_moments(n, 1.0, 1.0)["var_u"] * perm(n, 4) ** 2
        assert float(moments.u_numerator_var(n)) == pytest.approx(num_var, rel=1e-10)


@pytest.mark.parametrize("n", [4, 5, 6, 7])
def test_complete_case_against_binomial_mixture(n):
    for d in (2, 3, 5):
        for q in (0.3, 0.7, 1.0):
            mean, var = cc_mixture_moments(n, d, q)
            assert moments.mean_T_cc(n, d, q) == pytest.approx(mean, rel=1e-10)
            assert moments.var_T_cc(n, d, q) == pytest.approx(var, rel=1e-9)


def test_var_T_complete_is_sum_of_pair_variances():
    for n in (4, 5, 6):
        pair = exact_pair_moments(n, 1.0, 1.0)["var_tau_sq"]
        assert moments.var_T_complete(n, 5) == pytest.approx(10 * pair, rel=1e-10)


# --- structure ---------------------------------------------------------------

@pytest.mark.parametrize("n", [4, 9, 30])
def test_mask_conditional_variance_averages_to_closed_form(n):
    from scipy.stats import binom
    for x in (0.3, 0.81, 1.0):
        m = np.arange(n + 1)
        avg = float(np.dot(binom.pmf(m, n, x), moments.u_numerator_var(m)))
        assert avg == pytest.approx(float(moments.u_numerator_var(n, x)), rel=1e-10)


def test_given_counts_at_full_observation():
    n, d = 12, 5
    counts = np.full(d * (d - 1) // 2, n)
    assert moments.var_T_hat_given_counts(n, counts) == pytest.approx(
        moments.var_T_hat(n, MissProfile.uniform(1.0, d)), rel=1e-14)


def test_var_T_tilde_composition_d3():
    n, q = 7, (0.6, 0.8, 0.9)
    expect = (moments.var_tau_tilde_sq(n, q[0], q[1]) + moments.var_tau_tilde_sq(n, q[0], q[2])
              + moments.var_tau_tilde_sq(n, q[1], q[2])
              + 2 * moments.cov_tau_tilde_sq(n, q[0], q[1], q[2])
              + 2 * moments.cov_tau_tilde_sq(n, q[1], q[0], q[2])
              + 2 * moments.cov_tau_tilde_sq(n, q[2], q[0], q[1]))
    assert moments.var_T_tilde(n, MissProfile(q)) == pytest.approx(expect, rel=1e-14)


def test_total_missingness_rate():
    assert total_missingness_rate(MissProfile.uniform(0.9, 4)) == pytest.approx(0.3439)
    assert total_missingness_rate(MissProfile.uniform(1.0, 8)) == 0.0
    assert moments.profile_from_rates([0.1, 0.2]).q == pytest.approx((0.9, 0.8))


@pytest.mark.parametrize("call", [
    lambda: moments.mean_T_complete(1, 3),
    lambda: moments.var_T_complete(5, 0),
    lambda: moments.mean_T_cc(5, 3, 0.0),
    lambda: moments.var_T_cc(5, 3, 1.5),
    lambda: moments.var_u_pair(3, 1.0, 1.0),
    lambda: moments.var_T_hat(3, MissProfile.uniform(1.0, 3)),
    lambda: moments.var_T_hat(10, MissProfile((0.9,))),
    lambda: moments.var_T_tilde(10, MissProfile((0.9,))),
    lambda: MissProfile((0.9, 0.0)),
    lambda: MissProfile(()),
    lambda: moments.mean_T_complete(5.0, 3),
])
def test_domain_errors(call):
    with pytest.raises(DomainError):
        call()


# --- properties --------------------------------------------------------------

@settings(max_examples=200)
@given(st.integers(2, 200), qs, qs, qs)
def test_covariance_symmetric_in_non_shared_columns(n, q_s, q_a, q_b):
    assert moments.cov_tau_tilde_sq(n, q_s, q_a, q_b) == pytest.approx(
        moments.cov_tau_tilde_sq(n, q_s, q_b, q_a), rel=1e-12, abs=1e-300)


@settings(max_examples=200)
@given(st.integers(2, 200), qs, qs)
def test_shared_column_always_observed_gives_zero_cov(n, q_a, q_b):
    assert moments.cov_tau_tilde_sq(n, 1.0, q_a, q_b) == 0.0


@settings(max_examples=200)
@given(st.integers(2, 300), qs, qs, st.floats(0.2, 5.0))
def test_pair_moments_depend_on_product_only(n, q_k, q_l, r):
    x = q_k * q_l
    q2 = min(1.0, q_k * r)
    q3 = x / q2
    if q3 > 1.0:
        return
    assert moments.var_tau_tilde_sq(n, q_k, q_l) == pytest.approx(
        moments.var_tau_tilde_sq(n, q2, q3), rel=1e-9)
    assert moments.mean_tau_tilde_sq(n, q_k, q_l) == pytest.approx(
        moments.mean_tau_tilde_sq(n, q2, q3), rel=1e-12)


@settings(max_examples=200)
@given(st.integers(4, 500), st.integers(2, 40), qs)
def test_moments_positive_and_ordered(n, d, q):
    p = MissProfile.uniform(q, d)
    assert moments.var_T_hat(n, p) > 0
    assert moments.var_T_tilde(n, p) > 0
    assert moments.var_T_cc(n, d, q ** d) > 0
    # masking only removes sign information
    assert moments.mean_T_tilde(n, p) <= moments.mean_T_complete(n, d) * (1 + 1e-12)


@settings(max_examples=100)
@given(st.integers(4, 300), st.integers(2, 12))
def test_q_one_reductions(n, d):
    full = MissProfile.uniform(1.0, d)
    mean_c, var_c = moments.mean_T_complete(n, d), moments.var_T_complete(n, d)
    assert moments.mean_T_tilde(n, full) == pytest.approx(mean_c, rel=1e-12)
    assert moments.var_T_tilde(n, full) == pytest.approx(var_c, rel=1e-12)
    assert moments.mean_T_cc(n, d, 1.0) == pytest.approx(mean_c, rel=1e-12)
    assert moments.var_T_cc(n, d, 1.0) == pytest.approx(var_c, rel=1e-12)


@settings(max_examples=100)
@given(st.integers(4, 2000), st.integers(2, 20), qs)
def test_var_T_hat_linear_in_pairs_for_uniform_profile(n, d, q):
    one = moments.var_u_pair(n, q, q)
    assert moments.var_T_hat(n, MissProfile.uniform(q, d)) == pytest.approx(
        d * (d - 1) / 2 * one, rel=1e-10)
