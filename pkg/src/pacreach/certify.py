"""PAC certificates for a fitted reachable-set estimate.

Four certifiers are provided:

* holdout: count violations on fresh samples and invert the binomial tail;
* empirical conformal: the same count pushed through the beta quantile;
* split conformal: move the set to a calibration quantile, with the
  training-conditional accuracy read off the coverage distribution;
* scenario discarding: drop the ``k`` largest scores, with ``k`` chosen from
  the sampling-and-discarding bound.
"""

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError, InfeasibleError, InsufficientCalibrationError
from .specfun import beta_cdf, beta_isf, binom_tail_inv, log_binom_cdf

__all__ = [
    "Method",
    "PacCertificate",
    "ScoreVector",
    "scores",
    "count_violations",
    "holdout_certify",
    "empirical_conformal_certify",
    "conformal_index",
    "conformal_quantile",
    "conformal_adjust",
    "split_conformal_certify",
    "calib_size_for",
    "max_discard_k",
    "exact_discard_k",
    "scenario_discard",
    "scenario_certify",
]


class Method(str, Enum):
    HOLDOUT = "holdout"
    EMPIRICAL_CONFORMAL = "empirical-conformal"
    SPLIT_CONFORMAL = "split-conformal"
    SCENARIO_DISCARD = "scenario-discard"


@dataclass(frozen=True)
class PacCertificate:
    """Guarantee P(V > epsilon) <= beta for the certified set."""

    method: Method
    epsilon: float
    beta: float
    samples_used: int
    violations: int
    threshold: float = math.nan

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not 0.0 <= self.epsilon <= 1.0:
            raise DomainError(f"epsilon={self.epsilon} outside [0, 1]")
        if not 0.0 < self.beta < 1.0:
            raise DomainError(f"beta={self.beta} outside (0, 1)")
        if not 0 <= self.violations <= self.samples_used:
            raise DomainError("violations must lie in [0, samples_used]")

    def to_dict(self):
        return {
            "method": self.method.value,
            "epsilon": self.epsilon,
            "beta": self.beta,
            "samples_used": self.samples_used,
            "violations": self.violations,
            "threshold": None if math.isnan(self.threshold) else self.threshold,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        if data.get("threshold") is None:
            data["threshold"] = math.nan
        return cls(**data)


@dataclass(frozen=True, eq=False)
class ScoreVector:
    """Scores sorted ascending."""

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float).reshape(-1))
        if v.size == 0 or not np.all(np.isfinite(v)):
            raise DomainError("scores must be a nonempty finite array")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    def order_statistic(self, i):
        """The i-th smallest score, 1-indexed."""
        return float(self.values[i - 1])


def scores(E, batch):
    return ScoreVector(np.atleast_1d(E.score(batch)))


def count_violations(E, batch):
    """Samples with score strictly above the set's level."""
    return int(np.count_nonzero(np.atleast_1d(E.score(batch)) > E.level))


def _check_beta(beta):
    beta = float(beta)
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta={beta} outside (0, 1)")
    return beta


def _batch_size(batch):
    n = len(batch)
    if n < 1:
        raise DomainError("empty batch")
    return n


# -- holdout / empirical conformal ----------------------------------------------


def holdout_certify(E, test, beta):
    """Binomial tail inversion of the violation count on a fresh test batch."""
    beta = _check_beta(beta)
    M = _batch_size(test)
    k = count_violations(E, test)
    return PacCertificate(Method.HOLDOUT, binom_tail_inv(k, M, beta), beta, M, k)


def empirical_conformal_certify(E, calib, beta):
    """Conformal bound with the error rate fixed a posteriori at (k+1)/(K+1)."""
    beta = _check_beta(beta)
    K = _batch_size(calib)
    k = count_violations(E, calib)
    eps = 1.0 if k == K else beta_isf(k + 1, K - k, beta)
    return PacCertificate(Method.EMPIRICAL_CONFORMAL, eps, beta, K, k)


# -- split conformal --------------------------------------------------------------

# Products like (K+1)*alpha pick up a few ulps of rounding; integers must
# survive floor/ceil.
_ULP_SLACK = 64 * np.finfo(float).eps


def _floor(x):
    return math.floor(x + _ULP_SLACK * abs(x))


def conformal_index(K, alpha):
    """1-indexed order statistic ceil((K+1)(1-alpha)) used as the quantile."""
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha={alpha} outside (0, 1)")
    idx = K + 1 - _floor((K + 1) * alpha)
    if idx > K:
        raise InsufficientCalibrationError(
            f"alpha={alpha} < 1/(K+1) with K={K}: the quantile would be the {idx}-th of {K} scores"
        )
    return idx


def conformal_quantile(scores, alpha):
    """The ceil((K+1)(1-alpha))-th smallest calibration score."""
    if not isinstance(scores, ScoreVector):
        scores = ScoreVector(scores)
    return scores.order_statistic(conformal_index(len(scores), alpha))


def conformal_adjust(E, calib, alpha):
    """Move the set's level to the conformal quantile of calibration scores."""
    return E.with_level(conformal_quantile(scores(E, calib), alpha))


def split_conformal_certify(E, calib, alpha, beta):
    """Conformally adjusted set plus its training-conditional certificate.

    Miscoverage of the adjusted set given the calibration data follows
    Beta(l, K + 1 - l) with l = floor((K+1) alpha); epsilon is its
    (1 - beta)-quantile.
    """
    beta = _check_beta(beta)
    K = _batch_size(calib)
    idx = conformal_index(K, alpha)
    sv = scores(E, calib)
    q = sv.order_statistic(idx)
    l = K + 1 - idx
    eps = beta_isf(l, K + 1 - l, beta)
    violations = int(np.count_nonzero(sv.values > q))
    return E.with_level(q), PacCertificate(Method.SPLIT_CONFORMAL, eps, beta, K, violations, q)


def _coverage_ok(K, alpha, beta, delta_tol):
    l = _floor((K + 1) * alpha)
    if l < 1:
        return False
    return beta_cdf(K + 1 - l, l, 1.0 - alpha - delta_tol) <= beta


def _first_feasible(rate, pred, k_max):
    """Smallest K <= k_max with pred(K), for K partitioned by l = floor((K+1) rate).

    Within a block of constant l the predicate is monotone in K; across
    blocks it is checked at block ends, assumed monotone in l.
    """

    def block_start(l):
        return max(1, math.ceil(l / rate - _ULP_SLACK * l / rate) - 1)

    def block_end(l):
        return block_start(l + 1) - 1

    l_max = _floor((k_max + 1) * rate)
    if l_max < 1:
        return None
    lo, hi = 1, 1
    while not pred(min(block_end(hi), k_max)):
        if hi >= l_max:
            return None
        lo, hi = hi + 1, min(2 * hi, l_max)
    while lo < hi:
        mid = (lo + hi) // 2
        if pred(min(block_end(mid), k_max)):
            hi = mid
        else:
            lo = mid + 1
    a, b = block_start(lo), min(block_end(lo), k_max)
    while a < b:
        mid = (a + b) // 2
        if pred(mid):
            b = mid
        else:
            a = mid + 1
    return a


def calib_size_for(alpha, beta, delta_tol, k_max=10**8):
    """Smallest calibration size whose coverage is >= 1 - alpha - delta_tol w.p. >= 1 - beta.

    Training-conditional coverage is Beta(K + 1 - l, l) with
    l = floor((K+1) alpha).
    """
    alpha = float(alpha)
    beta = _check_beta(beta)
    delta_tol = float(delta_tol)
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha={alpha} outside (0, 1)")
    if not 0.0 < delta_tol < 1.0 - alpha:
        raise DomainError(f"delta_tol={delta_tol} must lie in (0, 1 - alpha)")
    K = _first_feasible(alpha, lambda K: _coverage_ok(K, alpha, beta, delta_tol), k_max)
    if K is None:
        raise InfeasibleError(f"no calibration size <= {k_max} reaches the target", last=k_max)
    return K


# -- scenario discarding ----------------------------------------------------------


def max_discard_k(N, eps, beta, n_theta=1, *, with_flag=False):
    """Closed-form count of discardable constraints.

    floor(eps N - n_theta + 1 - sqrt(2 eps N ln((eps N)^(n_theta-1) / beta))),
    floored at zero.  With ``with_flag`` a ``(k, certifiable)`` pair is
    returned; ``certifiable`` is False when the bound is negative or its
    radicand is.
    """
    beta = _check_beta(beta)
    eN = float(eps) * N
    if not eN > n_theta:
        raise DomainError(f"eps*N={eN} must exceed n_theta={n_theta}")
    radicand = 2.0 * eN * ((n_theta - 1) * math.log(eN) - math.log(beta))
    if radicand < 0.0:
        k, ok = 0, False
    else:
        bound = eN - n_theta + 1.0 - math.sqrt(radicand)
        k, ok = (math.floor(bound), True) if bound >= 0.0 else (0, False)
    return (k, ok) if with_flag else k


def _log_discard_lhs(k, N, eps, n_theta):
    m = k + n_theta - 1
    if m >= N:
        return 0.0
    log_comb = math.lgamma(m + 1) - math.lgamma(k + 1) - math.lgamma(n_theta)
    return log_comb + log_binom_cdf(m, N, eps)


def exact_discard_k(N, eps, beta, n_theta=1, *, with_flag=False):
    """Largest k with C(k+n-1, k) * Bin_cdf(k+n-1, N, eps) <= beta.

    The left side is increasing in k, so the search is a bisection.  When
    even k = 0 fails, 0 is returned (with ``certifiable`` False under
    ``with_flag``).
    """
    beta = _check_beta(beta)
    log_beta = math.log(beta)
    if _log_discard_lhs(0, N, eps, n_theta) > log_beta:
        return (0, False) if with_flag else 0
    lo, hi = 0, N - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if _log_discard_lhs(mid, N, eps, n_theta) <= log_beta:
            lo = mid
        else:
            hi = mid - 1
    return (lo, True) if with_flag else lo


def scenario_discard(E, batch, k):
    """Drop the k largest scores and shrink the level to the largest kept one.

    Returns the adjusted set and the threshold, the (N-k)-th smallest score.
    Samples tied with the threshold stay inside.
    """
    N = _batch_size(batch)
    if int(k) != k or not 0 <= k < N:
        raise DomainError(f"k={k} must satisfy 0 <= k < N={N}")
    c_star = scores(E, batch).order_statistic(N - int(k))
    return E.with_level(c_star), c_star


def scenario_certify(E, batch, eps, beta, n_theta=1, *, exact=False):
    """Scenario discarding with k from the closed-form (or exact) bound."""
    beta = _check_beta(beta)
    N = _batch_size(batch)
    k = (exact_discard_k if exact else max_discard_k)(N, eps, beta, n_theta)
    adjusted, c_star = scenario_discard(E, batch, k)
    violations = count_violations(adjusted, batch)
    return adjusted, PacCertificate(Method.SCENARIO_DISCARD, float(eps), beta, N, violations, c_star)
