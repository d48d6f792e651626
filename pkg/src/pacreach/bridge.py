"""Mechanical checks of the equivalences between the certifiers.

* ``check_thm4``: binomial tail inversion vs. beta quantile (holdout vs.
  empirical conformal).
* ``joint_parameterization``: shared sample size and accuracy for which split
  conformal and scenario discarding retain the same number of samples.
* ``check_thm5``: conformal and scenario thresholds on one batch.
"""

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

from .certify import (
    _first_feasible,
    _floor,
    conformal_adjust,
    conformal_index,
    max_discard_k,
    scenario_discard,
)
from .errors import DomainError, InfeasibleError
from .specfun import beta_isf, binom_tail_inv, log_beta_sf

__all__ = [
    "EquivalenceReport",
    "JointParams",
    "check_thm4",
    "joint_parameterization",
    "epsilon_for_size",
    "size_for_epsilon",
    "matched_params",
    "check_thm5",
    "format_table",
]


@dataclass
class EquivalenceReport:
    theorem: str
    methods: tuple
    values: tuple
    difference: float
    passed: bool
    mode: str = "exact"
    retained: Optional[tuple] = None
    volumes: Optional[tuple] = None
    index_gap: Optional[int] = None
    params: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        for key in ("methods", "values", "retained", "volumes"):
            if d[key] is not None:
                d[key] = list(d[key])
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class JointParams:
    """Sample size S = K = N and accuracy epsilon = alpha shared by both procedures."""

    S: int
    epsilon: float
    beta: float
    k_discard: int
    residuals: tuple = (0.0, 0.0)


def check_thm4(k, M, beta, tol=1e-9):
    """Compare Bin-bar(k, M, beta) with Beta-bar(k+1, M-k, 1-beta).

    The beta quantile is taken through ``beta_isf`` so that 1 - beta is
    never rounded.
    """
    if not 0 <= k < M:
        raise DomainError(f"need 0 <= k < M, got k={k}, M={M}")
    e_bin = binom_tail_inv(k, M, beta)
    e_beta = beta_isf(k + 1, M - k, beta)
    diff = abs(e_bin - e_beta)
    return EquivalenceReport(
        theorem="thm4",
        methods=("holdout", "empirical-conformal"),
        values=(e_bin, e_beta),
        difference=diff,
        passed=diff <= tol,
        mode="numeric",
        params={"k": k, "M": M, "beta": beta, "tol": tol},
    )


def epsilon_for_size(S, beta):
    """Accuracy at which the conformal index and the closed-form discard count agree.

    Root of e^2 - 2 X e + 1 = 0 with X = 1 + S ln(1/beta), taken in the
    reciprocal form 1 / (X + sqrt(X^2 - 1)) to avoid cancellation.
    """
    X = 1.0 + S * math.log(1.0 / beta)
    return 1.0 / (X + math.sqrt((X - 1.0) * (X + 1.0)))


def _coverage_reached(S, eps, beta):
    # beta_upper(S+1-l, l, 1-beta) >= 1-eps  <=>  upper tail at 1-eps >= beta
    l = _floor((S + 1) * eps)
    if l < 1:
        return False
    return log_beta_sf(S + 1 - l, l, 1.0 - eps) >= math.log(beta)


def size_for_epsilon(eps, beta, S_cap=10**8):
    """Smallest S with l = floor((S+1) eps) >= 1 and beta_upper(S+1-l, l, 1-beta) >= 1-eps.

    Returns None when no such S exists below ``S_cap``.
    """
    return _first_feasible(eps, lambda S: _coverage_reached(S, eps, beta), S_cap)


def joint_parameterization(beta, S_cap=10**8, max_iter=200):
    """Solve the coupled size/accuracy equations by damped alternation.

    Alternates S -> epsilon_for_size(S) -> size_for_epsilon(epsilon) until
    the size moves by at most one.  The smallest-S fixed point encountered
    is returned; no uniqueness is claimed.  Raises ``InfeasibleError``
    (carrying the last ``(S, epsilon)`` iterate) when the alternation leaves
    ``[1, S_cap]`` or the size equation has no solution.
    """
    beta = float(beta)
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta={beta} outside (0, 1)")
    S, prev_step = 1, 0
    for _ in range(max_iter):
        eps = epsilon_for_size(S, beta)
        S_new = size_for_epsilon(eps, beta, S_cap)
        if S_new is None:
            why = "; floor((S+1) eps(S)) = 0 for every S when beta <= 1/e" if beta <= math.exp(-1.0) else ""
            raise InfeasibleError(f"no sample size <= {S_cap} reaches coverage 1 - {eps:.3g}{why}", last=(S, eps))
        if abs(S_new - S) <= 1:
            k_discard = max_discard_k(S, eps, beta, 1) if eps * S > 1 else 0
            residuals = (float(S_new - S), abs(epsilon_for_size(S, beta) - eps) / eps)
            return JointParams(S, eps, beta, k_discard, residuals)
        step = S_new - S
        if prev_step and (step > 0) != (prev_step > 0):
            S_new = max(1, round(math.sqrt(S * S_new)))
        prev_step = step
        S = S_new
    raise InfeasibleError(f"alternation did not settle in {max_iter} rounds", last=(S, eps))


def matched_params(S, eps, beta):
    """Parameters whose discard count reproduces the conformal index exactly."""
    return JointParams(S, eps, beta, S - conformal_index(S, eps))


def check_thm5(E, batch, params):
    """Conformal vs. scenario thresholds on one batch.

    ``mode`` is "exact" when the conformal index equals S - k_discard, in
    which case the thresholds must be the identical order statistic.
    Otherwise the index gap is reported and ``mode`` is "approximate".
    """
    S = len(batch)
    if S != params.S:
        raise DomainError(f"batch size {S} != params.S = {params.S}")
    idx = conformal_index(S, params.epsilon)
    kept = S - params.k_discard
    cp = conformal_adjust(E, batch, params.epsilon)
    so, c_star = scenario_discard(E, batch, params.k_discard)
    gap = kept - idx
    same = cp.level == so.level and cp.level == c_star
    return EquivalenceReport(
        theorem="thm5",
        methods=("split-conformal", "scenario-discard"),
        values=(cp.level, so.level),
        difference=abs(cp.level - so.level),
        passed=gap == 0 and same,
        mode="exact" if gap == 0 else "approximate",
        retained=(idx, kept),
        volumes=(cp.volume(), so.volume()),
        index_gap=gap,
        params={"S": S, "epsilon": params.epsilon, "beta": params.beta, "k_discard": params.k_discard},
    )


def format_table(reports):
    """Plain-text table, one line per report."""
    lines = [f"{'theorem':8} {'mode':11} {'pass':5} {'value 1':>22} {'value 2':>22} {'diff':>10}  params"]
    for r in reports:
        params = ", ".join(f"{k}={v}" for k, v in r.params.items())
        lines.append(
            f"{r.theorem:8} {r.mode:11} {str(r.passed):5} {r.values[0]:22.17g} {r.values[1]:22.17g} "
            f"{r.difference:10.3g}  {params}"
        )
    return "\n".join(lines)
