import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from gossip_lab.core import ParameterError
from gossip_lab.oracle import (DomainError, _upper_tail_exact, _upper_tail_log,
                               binomial_beta_check, binomial_beta_sides, central_binomial_check,
                               central_binomial_printed, drift_constant, drift_gap, kl_bernoulli,
                               majority_win_prob, majority_win_prob_tiebreak, next_odd_at_least,
                               per_round_kl_cap, two_party_min_rounds)

odd_ell = st.integers(0, 60).map(lambda h: 2 * h + 1)
prob = st.floats(min_value=0.0, max_value=1.0)


def enumerate_majority(ell, p):
    total = Fraction(0)
    pf = Fraction(p)
    for bits in itertools.product((0, 1), repeat=ell):
        if 2 * sum(bits) > ell:
            w = sum(bits)
            total += pf ** w * (1 - pf) ** (ell - w)
    return total


def test_majority_win_prob_examples():
    assert majority_win_prob(1, 0.37) == 0.37
    assert majority_win_prob(3, 0.5) == 0.5
    assert majority_win_prob(3, 0.6) == pytest.approx(0.648, rel=1e-15)


@pytest.mark.parametrize("ell", [1, 3, 5, 7, 9, 11])
@pytest.mark.parametrize("p", [0.05, 0.3, 0.5, 0.61, 0.93])
def test_majority_win_prob_against_enumeration(ell, p):
    assert majority_win_prob(ell, p) == float(enumerate_majority(ell, p))


def test_even_ell_rejected():
    with pytest.raises(ParameterError):
        majority_win_prob(4, 0.5)


def test_tiebreak_variant_matches_next_odd():
    # k-majority with fair ties has the same law as (k-1)-majority for odd k-1
    for k in (2, 4, 10):
        for p in (0.2, 0.55, 0.8):
            assert majority_win_prob_tiebreak(k, p) == pytest.approx(majority_win_prob(k - 1, p),
                                                                     rel=1e-12)


@pytest.mark.parametrize("ell", [201, 301, 517, 1001])
def test_log_space_path_precision(ell):
    lo = (ell + 1) // 2
    for p in np.linspace(0.3, 0.7, 21):
        exact = _upper_tail_exact(ell, lo, float(p))
        assert _upper_tail_log(ell, lo, float(p)) == pytest.approx(exact, rel=1e-12)


@pytest.mark.parametrize("ell", [51, 199, 201, 999, 20001])
def test_against_scipy_binomial(ell):
    for p in (0.45, 0.5, 0.52, 0.6):
        ref = stats.binom.sf(ell // 2, ell, p)
        assert majority_win_prob(ell, p) == pytest.approx(ref, rel=1e-9)


@settings(max_examples=60)
@given(odd_ell, prob)
def test_majority_complement(ell, p):
    assert majority_win_prob(ell, p) + majority_win_prob(ell, 1 - p) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=60)
@given(odd_ell.filter(lambda k: k > 1), st.floats(0.01, 0.98))
def test_majority_monotone(ell, p):
    lo, hi = majority_win_prob(ell, p), majority_win_prob(ell, p + 0.01)
    assert hi >= lo
    if 1e-12 < lo and hi < 1 - 1e-12:
        assert hi > lo


def test_binomial_beta_examples():
    lhs, rhs, gap = binomial_beta_check(2, 0, 0.5)
    assert lhs == 0.75 and rhs == 0.75 and gap == 0
    for p in (0.1, 0.33, 0.9):
        lhs, rhs, gap = binomial_beta_check(1, 0, p)
        assert lhs == pytest.approx(p) and rhs == pytest.approx(p)


@pytest.mark.parametrize("ell,j,p", [(5, 2, 0.3), (12, 0, 0.71), (30, 29, 0.5), (17, 8, 0.05)])
def test_binomial_beta_exact_equality(ell, j, p):
    lhs, rhs = binomial_beta_sides(ell, j, p)
    assert lhs == rhs


def test_binomial_beta_grid():
    worst = max(binomial_beta_check(ell, j, p / 10)[2]
                for ell in range(1, 31) for j in range(ell) for p in range(1, 10))
    assert worst <= 1e-12


def test_binomial_beta_domain():
    with pytest.raises(ParameterError):
        binomial_beta_check(3, 3, 0.5)
    with pytest.raises(DomainError):
        binomial_beta_check(3, 0, 1.0)


def test_drift_gap_examples():
    assert drift_gap(100, 0, 0.2, 21) == 0.0
    for k in (1, 3, 21, 131):
        assert drift_gap(50, 50, 0.5, k) == 1.0


def test_drift_gap_identity():
    for n, s, eps, k in [(100, 7, 0.3, 9), (10 ** 4, 4000, 0.05, 517), (64, 1, 0.5, 7)]:
        p0 = majority_win_prob(k, 0.5 + eps * s / n)
        assert drift_gap(n, s, eps, k) == pytest.approx(2 * p0 - 1, abs=1e-12)


def test_drift_bound_eps_02():
    c = drift_constant(0.1)
    k = next_odd_at_least(c / 0.2 ** 2)
    n = 10 ** 4
    s_max = math.floor(n / (2 * math.sqrt(c)))
    assert k == 33
    assert all(drift_gap(n, s, 0.2, k) >= 1.1 * s / n for s in range(1, s_max + 1))


def test_central_binomial_examples():
    lo, ex, hi = central_binomial_check(1)
    assert ex == 2
    assert lo == pytest.approx(1.99158, abs=1e-5)
    assert hi == pytest.approx(2.01943, abs=1e-5)
    lo, ex, hi = central_binomial_check(5)
    assert ex == 252 and lo <= ex <= hi
    lo, ex, hi = central_binomial_check(30)
    assert ex == 118264581564861424 and lo <= ex <= hi


def test_printed_bracket_fails_at_one():
    lo, ex, hi = central_binomial_printed(1)
    assert not lo <= ex <= hi


def test_kl_examples():
    assert kl_bernoulli(0.3, 0.3) == 0.0
    assert kl_bernoulli(0.6, 0.4) == pytest.approx(0.2 * math.log(1.5), rel=1e-14)
    assert kl_bernoulli(0.6, 0.4) == pytest.approx(0.08109, abs=1e-5)
    for bad in [(0.0, 0.5), (0.5, 1.0)]:
        with pytest.raises(DomainError):
            kl_bernoulli(*bad)


@given(st.floats(0.001, 0.999), st.floats(0.001, 0.999))
def test_kl_nonnegative(p, q):
    d = kl_bernoulli(p, q)
    assert d >= 0
    if abs(p - q) > 1e-6:
        assert d > 0


def test_kl_cap_grid():
    for eps in np.linspace(1e-3, 0.25, 250):
        assert per_round_kl_cap(eps) <= 9 * eps ** 2


def test_two_party_example():
    b = two_party_min_rounds(0.01, 0.1)
    assert b.p == pytest.approx(0.2475) and b.q == pytest.approx(0.05)
    assert b.divergence == pytest.approx(kl_bernoulli(0.2475, 0.05))
    assert b.per_round_cap == pytest.approx(0.2 * math.log(1.5))
    assert b.t_min == math.ceil(b.divergence / b.per_round_cap) == 3


def test_two_party_domain():
    for args in [(0.0, 0.1), (1 / 21, 0.1), (0.01, 0.0), (0.01, 0.5)]:
        with pytest.raises(DomainError):
            two_party_min_rounds(*args)
