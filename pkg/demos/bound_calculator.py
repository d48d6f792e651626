"""
PAC bound calculator
=====================

How the accuracy epsilon trades against sample count, violations and
confidence, and how large the calibration and discard counts get.
"""

from pacreach import InfeasibleError, binom_tail_inv, calib_size_for, exact_discard_k, max_discard_k
from pacreach.bridge import epsilon_for_size, joint_parameterization

beta = 1e-9

# holdout epsilon for k violations out of M
for M in (100, 1500, 72347):
    row = "  ".join(f"{binom_tail_inv(k, M, beta):.5f}" for k in (0, 1, 5, 10))
    print(f"M = {M:6d}: eps(k = 0, 1, 5, 10) = {row}")

# calibration sizes for a one-sided coverage target 1 - alpha - delta
for delta in (0.05, 0.02, 0.005):
    print(f"alpha = 0.05, delta = {delta}: K = {calib_size_for(0.05, beta, delta)}")

# discardable samples, closed form and exact
for N in (1047, 72347):
    print(f"N = {N}: closed form k = {max_discard_k(N, 0.05, beta)}, exact k = {exact_discard_k(N, 0.05, beta)}")

# the joint size/accuracy pair only exists for loose confidence
print("eps(S) for S = 10^6:", epsilon_for_size(10**6, beta))
for b in (0.7, 0.5, beta):
    try:
        print(b, joint_parameterization(b))
    except InfeasibleError as exc:
        print(b, "infeasible:", exc)
