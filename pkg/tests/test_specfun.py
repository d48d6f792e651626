import math
from fractions import Fraction

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from pacreach import (
    DomainError,
    beta_cdf,
    beta_isf,
    beta_upper,
    binom_cdf,
    binom_tail_inv,
    log_beta_sf,
    log_binom_cdf,
)

CLOSED_0_100 = 1.0 - 0.05 ** (1 / 100)  # 0.029513...


def test_beta_cdf_trivial():
    assert beta_cdf(1, 1, 0.3) == pytest.approx(0.3, abs=1e-15)
    assert beta_cdf(2, 1, 0.5) == pytest.approx(0.25, abs=1e-15)
    assert beta_cdf(4, 7, 0.0) == 0.0
    assert beta_cdf(4, 7, 1.0) == 1.0


def test_beta_cdf_quadrature():
    # density t^2 (1-t)^4 / B(3, 5), B(3, 5) = 1/105
    val, _ = quad(lambda t: 105.0 * t**2 * (1 - t) ** 4, 0.0, 0.2, epsabs=1e-14, epsrel=1e-13)
    assert beta_cdf(3, 5, 0.2) == pytest.approx(val, abs=1e-12)
    assert beta_cdf(3, 5, 0.2) == pytest.approx(0.148032, abs=1e-14)


def test_beta_upper_examples():
    assert beta_upper(1, 1, 0.05) == pytest.approx(0.05, abs=1e-13)
    assert beta_upper(1, 100, 0.95) == pytest.approx(CLOSED_0_100, abs=1e-12)
    assert beta_upper(31, 1470, 1 - 1e-9) == pytest.approx(binom_tail_inv(30, 1500, 1e-9), abs=1e-9)


def test_binom_cdf_examples():
    assert binom_cdf(37, 37, 0.7) == 1.0
    assert binom_cdf(0, 10, 0.1) == pytest.approx(0.9**10, rel=1e-14)
    e = Fraction(15, 100)
    exact = sum(math.comb(20, j) * e**j * (1 - e) ** (20 - j) for j in range(3))
    assert binom_cdf(2, 20, 0.15) == pytest.approx(float(exact), rel=1e-14)


def test_binom_tail_inv_examples():
    assert binom_tail_inv(50, 50, 0.05) == 1.0
    assert binom_tail_inv(0, 100, 0.05) == pytest.approx(CLOSED_0_100, abs=1e-13)
    assert binom_tail_inv(3231, 72347, 1e-9) == pytest.approx(beta_upper(3232, 69116, 1 - 1e-9), abs=1e-10)


# high-precision bisection on exact mpmath binomial sums
@pytest.mark.parametrize(
    "k, M, beta, expected",
    [
        (30, 1500, 1e-9, 0.050388764544661273654),
        (5, 1500, 1e-9, 0.02223634344085687269),
        (12, 1500, 1e-9, 0.031162622750160941813),
        (3, 20, 0.05, 0.34366380431428183194),
    ],
)
def test_tail_inversions_against_mpmath(k, M, beta, expected):
    assert binom_tail_inv(k, M, beta) == pytest.approx(expected, abs=1e-13)
    assert beta_isf(k + 1, M - k, beta) == pytest.approx(expected, abs=1e-13)


# log of the exact binomial CDF and of its complement, 50-digit mpmath sums
@pytest.mark.parametrize(
    "k, M, e, log_cdf, log_sf",
    [
        (3231, 72347, 0.045, -1.0981130396139576309, -0.40571482613496727982),
        (3231, 72347, 0.0494266812368, -20.723265836894251503, -1.0000000005521596539e-9),
        (50, 1500, 0.05, -6.801551548629158957, -0.0011126671960679924818),
        (5, 100, 0.3, -21.641322274349938972, -3.9929434104433622809e-10),
        (0, 10, 0.5, -6.9314718055994530942, -0.00097703964782661278597),
        (1, 72347, 1e-5, -0.17912971920583320978, -1.8078732868770891205),
    ],
)
def test_log_tails_against_mpmath(k, M, e, log_cdf, log_sf):
    assert log_binom_cdf(k, M, e) == pytest.approx(log_cdf, rel=1e-12)
    # upper tail of Beta(k+1, M-k) is the binomial CDF
    assert log_beta_sf(k + 1, M - k, e) == pytest.approx(log_cdf, rel=1e-12)
    assert math.log(beta_cdf(k + 1, M - k, e)) == pytest.approx(log_sf, rel=1e-6)


def test_mpmath_sum_spot_check():
    mp.mp.dps = 40
    k, M, e = 7, 300, 0.04
    exact = mp.fsum(mp.binomial(M, j) * mp.mpf(e) ** j * (1 - mp.mpf(e)) ** (M - j) for j in range(k + 1))
    assert binom_cdf(k, M, e) == pytest.approx(float(exact), rel=1e-13)


def test_identity_grid():
    worst = 0.0
    for M in (2, 10, 100, 1500, 72347, 100000):
        for k in sorted({0, 1, 5, 50, 3231, M // 3, M - 1}):
            if k >= M:
                continue
            for i in range(21):
                e = 0.001 + 0.0499 * i
                worst = max(worst, abs(binom_cdf(k, M, e) - (1 - beta_cdf(k + 1, M - k, e))))
    assert worst <= 1e-10


@settings(max_examples=200, deadline=None)
@given(
    a=st.floats(0.1, 5000, allow_nan=False),
    b=st.floats(0.1, 5000, allow_nan=False),
    e=st.floats(0.0, 1.0).filter(lambda e: 1.0 - (1.0 - e) == e),
)
def test_reflection_symmetry(a, b, e):
    # e is restricted to values whose complement 1 - e is exact
    assert beta_cdf(a, b, e) + beta_cdf(b, a, 1.0 - e) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(
    M=st.integers(1, 20000),
    frac=st.floats(0.0, 0.999),
    beta=st.floats(1e-12, 0.9),
)
def test_inversion_soundness(M, frac, beta):
    k = min(int(frac * M), M - 1)
    e = binom_tail_inv(k, M, beta)
    assert binom_cdf(k, M, e) == pytest.approx(beta, abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(M=st.integers(2, 5000), frac=st.floats(0.0, 0.99), beta=st.floats(1e-10, 0.5))
def test_tail_inv_monotone(M, frac, beta):
    k = min(int(frac * M), M - 2)
    e = binom_tail_inv(k, M, beta)
    assert binom_tail_inv(k + 1, M, beta) >= e
    assert binom_tail_inv(k, M + 1, beta) <= e
    assert binom_tail_inv(k, M, min(0.99, 2 * beta)) <= e


def test_beta_isf_matches_beta_upper_for_moderate_q():
    for a, b, q in [(1, 1, 0.3), (3, 5, 0.1), (40, 900, 0.01), (700, 20, 0.5)]:
        assert beta_isf(a, b, q) == pytest.approx(beta_upper(a, b, 1 - q), abs=1e-13)


def test_domain_errors():
    with pytest.raises(DomainError):
        beta_cdf(0, 1, 0.5)
    with pytest.raises(DomainError):
        beta_cdf(1, 1, 1.5)
    with pytest.raises(DomainError):
        binom_cdf(5, 4, 0.5)
    with pytest.raises(DomainError):
        binom_tail_inv(0, 10, 0.0)
    with pytest.raises(DomainError):
        binom_cdf(1.5, 4, 0.5)
