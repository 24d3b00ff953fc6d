"""
Prim's algorithm on K_n versus invasion on the PWIT
===================================================

Seen from its start vertex, Prim's run on a large complete graph with
Exp(mean n-1) weights looks like invasion percolation on the Poisson weighted
infinite tree.  We compare the largest accepted weight and the radius-2 ball
shape of both.
"""

import math

import numpy as np

from mstlimit import complete_mst, lwc_metric, pgw_core, pwit

rng = np.random.default_rng(7)
n, k, reps = 5000, 400, 200

kn_max, pwit_max, kn_codes, t_codes = [], [], [], []
for rep in range(reps):
    graph = complete_mst.ImplicitCompleteGraph(n, seed=rep)
    run = complete_mst.prim_order(complete_mst.minimum_spanning_tree(graph))
    kn_max.append(run.edge_weights[:k].max())
    kn_codes.append(lwc_metric.canonical_code(run.tree(k), 0, 2, math.inf))

    inv = pwit.pwit_prim(k + 1, rng)
    pwit_max.append(inv.edge_weights.max())
    t_codes.append(lwc_metric.canonical_code(pwit.sample_t_ball(2, rng), 0, 2, math.inf))

# P(max weight <= y) should be close to theta(y) for both
for y in (1.2, 1.5, 2.0):
    a = np.mean(np.array(kn_max) <= y)
    b = np.mean(np.array(pwit_max) <= y)
    print(f"y={y}: K_n {a:.3f}  PWIT {b:.3f}  theta {pgw_core.theta(y):.3f}")

print("TV of radius-2 shapes:", lwc_metric.empirical_tv(kn_codes, t_codes))
