"""
Refuting candidate embeddings of l_q^2
======================================

The rank-one row embedding realises q = 2 in every S_p and passes all
checks.  Synthetic norm curves with q != 2 are caught by the exponent fit,
and random pairs fail already on the grid.
"""
import math

import numpy as np

from snperturb.embed import EmbeddingClaim, construct_rank_one_control, refute
from snperturb.linalg import default_rng, random_hermitian
from snperturb.schatten import schatten_norm

for p in (1, 1.3, 2, 3, 4, math.inf):
    r = refute(construct_rank_one_control(p))
    print(f"control p = {p:>4}: {r.conclusion}  (grid residual {r.iqp_residual:.1e})")

p = 3.0
for q in (1.5, 2.0, 2.5, 3.0):
    curve = lambda t, q=q: (1 + np.abs(t) ** q) ** (p / q)
    r = refute(EmbeddingClaim(None, None, q, p), norm_curve=curve)
    print(f"synthetic q = {q}: fitted {r.fitted_q:.4f} -> {r.conclusion}")

rng = default_rng()
A, B = random_hermitian(3, rng), random_hermitian(3, rng)
A, B = A / schatten_norm(A, p), B / schatten_norm(B, p)
r = refute(EmbeddingClaim(A, B, 1.5, p, reduced=True))
print("random pair:", r.conclusion, f"(residual {r.iqp_residual:.3f})")
print(r.to_json(indent=1)[:400], "...")
