"""
Entries of a random eigenvector look Gaussian
=============================================

The (-1)-eigenspace of K_{m+1} has dimension m. Pick a uniform unit vector
in it, scale by sqrt(n), and compare the empirical law of its entries with
N(0, 1). The distance is bracketed: a bounded-Lipschitz lower bound from
ramps and hats, and W1 above it.
"""

import numpy as np

from deloc.ergodic_stats import dbl_lower_bound, empirical_measure, w1_to_gaussian
from deloc.experiments import complete_eigenspace
from deloc.sampling import sample_window_vectors
from deloc.spectral import IndexSet, projector_diagonal

rng = np.random.default_rng(2)
for m in (9, 49, 199, 799):
    d, k = complete_eigenspace(m)
    sw = projector_diagonal(d, IndexSet(d.groups[k]))
    w1, lo = [], []
    for u in sample_window_vectors(sw, 50, rng):
        mu = empirical_measure(u)
        w1.append(w1_to_gaussian(mu))
        lo.append(dbl_lower_bound(mu))
    print(f"m={m:4d}  d_BL >= {np.mean(lo):.4f}   W1 = {np.mean(w1):.4f}")
