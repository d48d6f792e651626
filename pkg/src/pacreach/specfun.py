"""Regularized incomplete beta, binomial CDF and their tail inversions.

The incomplete beta integral is evaluated with the classical continued
fraction (modified Lentz recursion) and the binomial CDF by summing
probability masses obtained from Loader's saddle-point expansion.  Both
use the same cancellation-free Stirling/deviance terms for their leading
factor, but the tail sums themselves are computed independently, so the
identity

    binom_cdf(k, M, e) == 1 - beta_cdf(k + 1, M - k, e)

is a meaningful cross-check between them.
"""

import math

from .errors import DomainError

__all__ = [
    "beta_cdf",
    "beta_isf",
    "beta_upper",
    "log_beta_sf",
    "binom_cdf",
    "binom_tail_inv",
    "log_binom_cdf",
    "log_binom_pmf",
]

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAXITER = 1_000_000

_BISECT_WIDTH = 1e-14

_LN_2PI = math.log(2.0 * math.pi)
_LN_SQRT_2PI = 0.5 * _LN_2PI

# Stirling series coefficients 1/12, 1/360, 1/1260, 1/1680, 1/1188
_S0 = 1.0 / 12.0
_S1 = 1.0 / 360.0
_S2 = 1.0 / 1260.0
_S3 = 1.0 / 1680.0
_S4 = 1.0 / 1188.0


def _check_prob(name, value, *, open_low=False, open_high=False):
    value = float(value)
    if math.isnan(value):
        raise DomainError(f"{name} is NaN")
    if value < 0.0 or value > 1.0 or (open_low and value == 0.0) or (open_high and value == 1.0):
        raise DomainError(f"{name}={value!r} outside its probability range")
    return value


def _check_counts(k, M):
    if int(k) != k or int(M) != M:
        raise DomainError(f"counts must be integers, got k={k!r}, M={M!r}")
    k, M = int(k), int(M)
    if M < 1:
        raise DomainError(f"M={M} must be at least 1")
    if k < 0 or k > M:
        raise DomainError(f"k={k} must satisfy 0 <= k <= M={M}")
    return k, M


def _betacf(a, b, x):
    """Continued fraction for I_x(a, b); converges fast for x < (a+1)/(a+b+2)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def beta_cdf(a, b, e):
    """Regularized incomplete beta function I_e(a, b).

    This is the CDF of the Beta(a, b) distribution evaluated at ``e``.
    """
    a = float(a)
    b = float(b)
    if not (a > 0.0 and b > 0.0) or math.isinf(a) or math.isinf(b):
        raise DomainError(f"beta parameters must be positive and finite, got a={a}, b={b}")
    e = _check_prob("e", e)
    if e == 0.0:
        return 0.0
    if e == 1.0:
        return 1.0
    y = 1.0 - e
    log_front = _log_beta_front(a, b, e, y)
    if e < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, e) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, y) / b


def log_beta_sf(a, b, e):
    """Natural log of the upper tail 1 - I_e(a, b), without forming 1 - I."""
    a = float(a)
    b = float(b)
    if not (a > 0.0 and b > 0.0) or math.isinf(a) or math.isinf(b):
        raise DomainError(f"beta parameters must be positive and finite, got a={a}, b={b}")
    e = _check_prob("e", e)
    if e == 0.0:
        return 0.0
    if e == 1.0:
        return -math.inf
    y = 1.0 - e
    log_front = _log_beta_front(a, b, e, y)
    if e < (a + 1.0) / (a + b + 2.0):
        return math.log1p(-math.exp(log_front) * _betacf(a, b, e) / a)
    return log_front + math.log(_betacf(b, a, y) / b)


def beta_isf(a, b, q):
    """Largest ``e`` whose upper tail 1 - I_e(a, b) is still >= ``q``.

    Mathematically ``beta_upper(a, b, 1 - q)``, but the comparison is made on
    the log upper tail, so a tiny ``q`` keeps its full relative precision.
    """
    q = _check_prob("q", q, open_high=True)
    if not (float(a) > 0.0 and float(b) > 0.0):
        raise DomainError(f"beta parameters must be positive, got a={a}, b={b}")
    if q == 0.0:
        return 1.0
    log_q = math.log(q)
    lo, hi = 0.0, 1.0
    while hi - lo > _BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        if log_beta_sf(a, b, mid) >= log_q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def beta_upper(a, b, beta):
    """Largest ``e`` with ``beta_cdf(a, b, e) <= beta``, i.e. the beta-quantile.

    Found by bisection on [0, 1] down to a bracket of 1e-14; the midpoint of
    the final bracket is returned.
    """
    beta = _check_prob("beta", beta, open_low=True)
    if not (float(a) > 0.0 and float(b) > 0.0):
        raise DomainError(f"beta parameters must be positive, got a={a}, b={b}")
    if beta == 1.0:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > _BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        if beta_cdf(a, b, mid) <= beta:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _stirlerr(n):
    """log(n!) - log(sqrt(2 pi n) (n/e)^n)."""
    if n <= 15.0:
        return math.lgamma(n + 1.0) - (n + 0.5) * math.log(n) + n - _LN_SQRT_2PI
    nn = n * n
    if n > 500.0:
        return (_S0 - _S1 / nn) / n
    if n > 80.0:
        return (_S0 - (_S1 - _S2 / nn) / nn) / n
    if n > 35.0:
        return (_S0 - (_S1 - (_S2 - _S3 / nn) / nn) / nn) / n
    return (_S0 - (_S1 - (_S2 - (_S3 - _S4 / nn) / nn) / nn) / nn) / n


def _bd0(x, np_):
    """Deviance term x log(x/np) + np - x, evaluated without cancellation."""
    if abs(x - np_) < 0.1 * (x + np_):
        v = (x - np_) / (x + np_)
        s = (x - np_) * v
        ej = 2.0 * x * v
        v *= v
        j = 1
        while True:
            ej *= v
            s1 = s + ej / (2 * j + 1)
            if s1 == s:
                return s1
            s = s1
            j += 1
    return x * math.log(x / np_) + np_ - x


def _log_beta_front(a, b, x, y):
    """log(x^a y^b / B(a, b)) with y = 1 - x, free of large cancellations."""
    s = a + b
    return (
        -_bd0(a, s * x)
        - _bd0(b, s * y)
        + _stirlerr(s)
        - _stirlerr(a)
        - _stirlerr(b)
        + 0.5 * (math.log(a) + math.log(b) - math.log(s) - _LN_2PI)
    )


def log_binom_pmf(j, M, e):
    """Natural log of C(M, j) e^j (1-e)^(M-j), accurate to a few ulps."""
    if e == 0.0:
        return 0.0 if j == 0 else -math.inf
    if e == 1.0:
        return 0.0 if j == M else -math.inf
    if j == 0:
        return M * math.log1p(-e)
    if j == M:
        return M * math.log(e)
    lc = _stirlerr(M) - _stirlerr(j) - _stirlerr(M - j) - _bd0(j, M * e) - _bd0(M - j, M * (1.0 - e))
    lf = _LN_2PI + math.log(j) + math.log1p(-j / M)
    return lc - 0.5 * lf


def log_binom_cdf(k, M, e):
    """Natural log of the binomial CDF P[Bin(M, e) <= k]."""
    k, M = _check_counts(k, M)
    e = _check_prob("e", e)
    if k == M or e == 0.0:
        return 0.0
    if e == 1.0:
        return -math.inf
    # sum masses relative to the largest one in [0, k]
    anchor = min(k, int(math.floor((M + 1) * e)))
    odds = e / (1.0 - e)
    total = 1.0
    term = 1.0
    for j in range(anchor, 0, -1):
        term *= j / ((M - j + 1) * odds)
        total += term
        if term < 1e-18 * total:
            break
    term = 1.0
    for j in range(anchor, k):
        term *= (M - j) * odds / (j + 1)
        total += term
        if term < 1e-18 * total:
            break
    return min(0.0, log_binom_pmf(anchor, M, e) + math.log(total))


def binom_cdf(k, M, e):
    """Binomial CDF sum_{j<=k} C(M, j) e^j (1-e)^(M-j)."""
    return math.exp(log_binom_cdf(k, M, e))


def binom_tail_inv(k, M, beta):
    """Largest ``e`` with ``binom_cdf(k, M, e) >= beta``.

    This is the binomial tail inversion used by the holdout bound.  Returns
    1 when k == M since the CDF is then identically one.
    """
    k, M = _check_counts(k, M)
    beta = _check_prob("beta", beta, open_low=True)
    if k == M:
        return 1.0
    log_beta = math.log(beta)
    lo, hi = 0.0, 1.0
    while hi - lo > _BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        if log_binom_cdf(k, M, mid) >= log_beta:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
