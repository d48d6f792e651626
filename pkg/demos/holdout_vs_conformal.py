"""
Holdout and empirical conformal bounds on the Duffing reachable set
=====================================================================

Fit an ellipsoid to 1500 terminal states, then certify it on fresh test
batches two ways.  The two epsilons agree run by run.
"""

from pacreach import (
    derive_seed,
    draw_samples,
    duffing,
    duffing_sampling,
    empirical_conformal_certify,
    fit_mvee,
    holdout_certify,
)

sys = duffing()
seed = 42

# training batch and the fitted set
train = draw_samples(sys, duffing_sampling(derive_seed(seed, 0)), 1500)
E = fit_mvee(train)
print(f"fitted ellipsoid: centre {E.center.round(4)}, volume {E.volume():.4f}")

# ten fresh test batches, each from its own stream
beta = 1e-9
for run in range(10):
    test = draw_samples(sys, duffing_sampling(derive_seed(seed, 1, run)), 1500)
    ho = holdout_certify(E, test, beta)
    ec = empirical_conformal_certify(E, test, beta)
    print(f"run {run}: k = {ho.violations:2d}  holdout {ho.epsilon:.10f}  conformal {ec.epsilon:.10f}")

# with no violations both reduce to 1 - beta^(1/M)
print("k = 0 closed form:", 1 - beta ** (1 / 1500))
