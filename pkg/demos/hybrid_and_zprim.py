"""
Cutting the Prim prefix and probing from outside
================================================

Fix z > 1.  The hybrid tree keeps what v_1 can reach in the forest of cheap
and early MST edges once the stretch of the Prim order between the last and
the next weight above z is removed.  With lambda = z it is just the prefix up
to that last heavy step.  z-Prim starts from a vertex outside the prefix and
grows through components of edges below z until it touches the prefix.
"""

import numpy as np

from mstlimit import complete_mst

graph = complete_mst.ImplicitCompleteGraph(4000, seed=3)
mst = complete_mst.minimum_spanning_tree(graph)

for lam in (1.1, 1.5, 3.0):
    tree = complete_mst.hybrid_construct(graph, 1.1, lam, k=200, mst=mst)
    if tree is None:
        print("g = 0 for this instance")
        break
    st = tree.meta["state"]
    print(f"lambda={lam}: g={st.g} d={st.d} |hybrid|={tree.n}")

state = complete_mst.hybrid_state(graph, 1.1, k=200, mst=mst)
below = graph.below(1.1)
rng = np.random.default_rng(0)
taus = []
for u in rng.choice(np.flatnonzero(~state.in_prefix), size=50):
    res = complete_mst.z_prim(graph, int(u), state, below)
    taus.append(res.tau)
print("z-Prim tau over 50 probes: mean", np.mean(taus), "max", max(taus), "1/(z-1)^2 =", 1 / 0.1**2)
