"""
Survival probabilities and the degree of the root
=================================================

A Poisson(x) Galton-Watson tree survives with probability theta(x), which is
zero up to x = 1 and then climbs with slope 2.  The root degree of the limiting
minimum spanning tree mixes Poisson laws driven by theta; here we tabulate it
two ways.
"""

import numpy as np

from mstlimit import aggregation, pgw_core

# theta near and far from criticality
for x in (1.001, 1.01, 1.1, 1.5, 2.0, 3.0, 5.0):
    print(f"theta({x:>5}) = {pgw_core.theta(x):.6f}   theta' = {pgw_core.theta_prime(x):.4f}")

# dual parameter: the subcritical rate with the same extinction behaviour
print("dual(2) =", pgw_core.dual(2.0))

# Closed-form mixture table against the three-part sampler
pmf = aggregation.aldous_degree_table(12)
rng = np.random.default_rng(1)
draws = aggregation.root_degree_sample(rng, 200_000)
freq = np.bincount(draws, minlength=pmf.size)[: pmf.size] / draws.size
print("\ndeg   pmf       sampled")
for d in range(1, 8):
    print(f"{d:>3}   {pmf[d]:.5f}   {freq[d]:.5f}")
print("mean degree of the sample:", draws.mean())
