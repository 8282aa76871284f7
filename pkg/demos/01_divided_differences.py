"""
Divided differences of |x|^p
============================

Confluent nodes, nearly coincident nodes and the symmetric second-order
weight that drives the second derivative of a Schatten power sum.
"""
import numpy as np

from snperturb.divdiff import FunctionSpec, divided_difference, fq_derivative, sym_second_dd

f = FunctionSpec.abs_pow(4)

# distinct nodes follow the usual recursion
print("f[3, 1]      =", divided_difference(FunctionSpec.abs_pow(2), [3, 1]))

# repeated nodes fall back to Taylor coefficients: f[d, d, d] = f''(d) / 2
d = 1.5
print("f[d, d, d]   =", divided_difference(f, [d, d, d]), " 6 d^2 =", 6 * d * d)

# two nodes 1e-12 apart do not lose digits
print("near-confluent:", divided_difference(f, [d, d + 1e-12, d - 1e-12]))

# the symmetric weight f[a, b, b] + f[b, a, a]
for p in (1.5, 2.0, 3.0, 4.0):
    print(f"p = {p}: weight(2, 1) = {sym_second_dd(p, 2.0, 1.0):.6f}")

# derivatives of (1 + |t|^q)^(1/q) blow up like t^(q - floor(q) - 1) near 0
t = np.logspace(-6, -3, 5)
print("f_1.5'' near 0:", np.array([fq_derivative(1.5, 2, s) for s in t]))
