"""Local weak limit of the minimum spanning tree of the complete graph.

Numerics for Poisson Galton-Watson trees, invasion percolation on the Poisson
weighted infinite tree, the aggregation process that turns the invasion
cluster into the limit tree, and finite-n ground truth on K_n.
"""

from .trees import RootedWeightedTree

__all__ = ["RootedWeightedTree"]
__version__ = "0.1.0"
