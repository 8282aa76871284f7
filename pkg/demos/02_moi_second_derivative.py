"""
Second derivative through a multiple operator integral
======================================================

The full MOI T_{f^[2]}(B, B), its O(n^2) trace contraction and a five-point
finite difference all give the same number.
"""
import numpy as np

from snperturb.divdiff import FunctionSpec
from snperturb.linalg import default_rng, hermitian_eig, random_hermitian
from snperturb.moi import MoiSymbol, moi_apply, moi_trace_order2
from snperturb.schatten import second_derivative

rng = default_rng()
A, B = random_hermitian(6, rng), random_hermitian(6, rng)
p = 3.3
spec = hermitian_eig(A)

symbol = MoiSymbol.divided_difference(FunctionSpec.abs_pow(p), 2)
full = moi_apply(spec, symbol, [B, B]).trace.real
fast = moi_trace_order2(spec, p, B)
report = second_derivative(A, B, p)

print("Tr T(B, B), dense  :", full)
print("trace contraction  :", fast)
print("2 x trace          :", 2 * fast)
print("finite difference  :", report.fd_value, " relative residual", report.residual_vs_fd)

# the closed-form anchor: ||a diag(1,-1) + t b X||_4^4 = 2 (a^2 + b^2 t^2)^2
a = 2 ** -0.25
X = np.array([[0.0, 1.0], [1.0, 0.0]])
print("anchor             :", second_derivative(a * np.diag([1.0, -1.0]), a * X, 4).value)
