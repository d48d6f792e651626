"""
Shrinking a reachable set: split conformal against scenario discarding
========================================================================

Both procedures move the level of the same ellipsoid to an order
statistic of the batch scores.  At matched indices they coincide.
"""

from pacreach import (
    conformal_adjust,
    conformal_index,
    draw_samples,
    duffing,
    duffing_sampling,
    fit_mvee,
    max_discard_k,
    scenario_discard,
)
from pacreach.harness import render_svg

K = 1047
alpha = eps = 0.05
beta = 1e-9

batch = draw_samples(duffing(), duffing_sampling(seed=1), K)
E = fit_mvee(batch)

# conformal keeps the ceil((K+1)(1-alpha))-th score
idx = conformal_index(K, alpha)
cp = conformal_adjust(E, batch, alpha)

# scenario discarding drops k samples, k from the closed-form bound
k = max_discard_k(K, eps, beta)
so, c_star = scenario_discard(E, batch, k)

print(f"initial volume        {E.volume():.4f}")
print(f"conformal  removes {K - idx:4d}, volume {cp.volume():.4f}")
print(f"scenario   removes {k:4d}, volume {so.volume():.4f}")

# matching the discard count to the conformal index gives the same set
_, same = scenario_discard(E, batch, K - idx)
print("matched thresholds identical:", same == cp.level)

with open("conformal_vs_scenario.svg", "w") as fh:
    fh.write(render_svg([
        ("initial", E, "#002676", 1.0),
        ("conformal", cp, "#002676", 0.4),
        ("initial", E, "#ff0080", 1.0),
        ("scenario", so, "#ff0080", 0.4),
    ], points=batch.states))
print("wrote conformal_vs_scenario.svg")
