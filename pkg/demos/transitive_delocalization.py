"""
Eigenvectors of vertex-transitive graphs
========================================

On a vertex-transitive graph the diagonal of every spectral projector is
flat, so no eigenvector can pile up on a few vertices. We check this on a
cycle and a hypercube, then draw random eigenbases and look at sup norms.
"""

import numpy as np

from deloc.graph_core import cayley_graph, cycle_graph, hypercube_group, star_graph
from deloc.sampling import random_eigenbasis, stirling_constants
from deloc.spectral import constancy_defect, decompose, eigenspace_window, projector_diagonal

# projector diagonals are flat on transitive graphs
for name, g in [("C_100", cycle_graph(100)), ("Q_6", cayley_graph(hypercube_group(6))), ("star_8", star_graph(8))]:
    d = decompose(g)
    worst = max(constancy_defect(projector_diagonal(d, eigenspace_window(d, k))) for k in range(len(d.groups)))
    print(f"{name:7s} n={g.n:3d}  max multiplicity {d.max_multiplicity:2d}  worst defect {worst:.2e}")

# every cycle eigenvector obeys |u(x)| <= sqrt(M/n)
d = decompose(cycle_graph(101))
print("C_101 sup:", np.abs(d.vectors).max(), "bound:", np.sqrt(d.max_multiplicity / 101))

# Haar-random eigenbasis of the hypercube, against the kappa sqrt(log n / n) scale
g = cayley_graph(hypercube_group(8))
d = decompose(g)
kappa = stirling_constants()["kappa"]
sups = np.array([np.abs(random_eigenbasis(d, s).vectors).max() for s in range(20)])
print(f"Q_8: mean sup {sups.mean():.4f}, kappa sqrt(log n / n) = {kappa * np.sqrt(np.log(g.n) / g.n):.4f}")
