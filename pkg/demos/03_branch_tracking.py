"""
Following eigenvalue branches through a crossing
================================================

Sorting eigenvalues at each t produces kinks where two branches cross;
matching against a linear prediction follows the analytic branches.
"""
import numpy as np

from snperturb.perturb import track_branches, vanishing_order

A = np.diag([1.0, -1.0])
B = np.diag([-1.0, 1.0])
fam = track_branches(A, B, 2.0, 256)

h = fam.t_grid[1] - fam.t_grid[0]
sorted_top = np.sort(np.linalg.eigvalsh(A[None] + fam.t_grid[:, None, None] * B[None]))[:, -1]
print("slope jump of the sorted top eigenvalue:", np.ptp(np.diff(sorted_top) / h))
print("largest second divided difference on tracked branches:", fam.smoothness[:, 1].max())

# order of vanishing at t = 0 for a few synthetic branches
t = np.linspace(-1, 1, 257)
for name, lam in [("-1 + t", -1 + t), ("t", t), ("t^2 (1 + t)", t ** 2 * (1 + t)),
                  ("-0.1 t^3", -0.1 * t ** 3)]:
    print(f"{name:>12}: (m, mu0) =", vanishing_order(lam, t))

fam.to_csv("branches.csv")
print("wrote branches.csv with", len(fam.t_grid), "rows")
