"""
The endpoints p = 1 and p = infinity
====================================

At p = inf a kernel condition makes the sup norm locally constant; the
curve (1 + |t|^1.5)^(1/1.5) has a second derivative that blows up.  At
p = 1 the trace norm is 2-uniformly PL-convex, which rules out q >= 4.
"""
import numpy as np

from snperturb.embed import pl_convexity_check
from snperturb.linalg import default_rng
from snperturb.perturb import analyticity_probe, fq_samples, sup_norm_kernel_test

kt = sup_norm_kernel_test(np.diag([1.0, 0.5]), np.diag([0.0, 1.0]))
print("Bx on top eigenvectors:", kt.top_vector_residuals)
print("||(I-P)A(I-P)||_inf   :", kt.rest_norm)
print("sup norm constant for |t| <", kt.locally_constant_radius)

t = np.linspace(-1, 1, 2 ** 14 + 1)
for q in (1.5, 2.0):
    probe = analyticity_probe(fq_samples(q, t), t, q)
    print(f"q = {q}: order {probe.order}, exponent {probe.exponent:+.3f} -> {probe.verdict}")

rng = default_rng()
x = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
y = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
r = pl_convexity_check(x, y)
print(f"PL-convexity: mean {r.mean:.4f} >= bound {r.lower_bound:.4f}: {r.holds}")
for q in (3.0, 3.4, 3.5, 4.0):
    print(f"claimed q = {q}: 1.5^q = {1.5 ** q:.4f} ->",
          "refuted" if pl_convexity_check(np.eye(1), np.eye(1), q_claimed=q).refuted else "allowed")
