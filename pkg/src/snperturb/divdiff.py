"""Confluent divided differences of |x|^p, |x|^(p-1) sgn(x) and (1 + |t|^q)^(1/q).

Nodes are sorted (divided differences are symmetric) and evaluated with the
Newton table.  Any run of nodes that is tight relative to its distance from
the singular point 0 is evaluated by the Taylor expansion about its
midpoint,

    f[x_0..x_r] = sum_k f^(r+k)(m) / (r+k)! * h_k(x_0 - m, ..., x_r - m),

where h_k is the complete homogeneous symmetric polynomial.  The k = 0 term
is the confluent value f^(r)(m)/r!, so exactly repeated nodes fall out as a
special case and nearly coincident nodes never go through the cancelling
first-order quotient.
"""
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial

from .errors import DomainError

# Relative spread below which a run of nodes is expanded about its midpoint.
TIGHT_RATIO = 0.05
MAX_TAYLOR_ORDER = 40
GN_MAX_ORDER = 12


def _is_int(x):
    return float(x).is_integer()


def _falling(a, k):
    out = 1.0
    for j in range(k):
        out *= a - j
    return out


@dataclass(frozen=True)
class FunctionSpec:
    """One of the three scalar functions the perturbation formulas differentiate.

    ``kind`` is ``"abs_pow"`` (|x|^p), ``"abs_pow_sign"`` (|x|^(p-1) sgn x) or
    ``"fq"`` ((1 + |t|^q)^(1/q)); ``exponent`` is p or q and must exceed 1.
    """

    kind: str
    exponent: float

    def __post_init__(self):
        if self.kind not in ("abs_pow", "abs_pow_sign", "fq"):
            raise ValueError(f"unknown function kind {self.kind!r}")
        if not self.exponent > 1:
            raise DomainError(f"{self.kind} needs exponent > 1, got {self.exponent}")

    @classmethod
    def abs_pow(cls, p):
        return cls("abs_pow", float(p))

    @classmethod
    def abs_pow_sign(cls, p):
        return cls("abs_pow_sign", float(p))

    @classmethod
    def fq(cls, q):
        return cls("fq", float(q))

    @property
    def is_polynomial(self):
        e = self.exponent
        if self.kind == "abs_pow":
            return _is_int(e) and int(e) % 2 == 0
        if self.kind == "abs_pow_sign":
            return _is_int(e - 1) and int(e - 1) % 2 == 1
        return False

    @property
    def max_order(self):
        return GN_MAX_ORDER if self.kind == "fq" else MAX_TAYLOR_ORDER

    def __call__(self, x):
        return self.derivative(0, x)

    def derivative_exists_at_zero(self, k):
        if k == 0:
            return True
        e = self.exponent
        if self.kind == "abs_pow":
            return k < e or self.is_polynomial
        if self.kind == "abs_pow_sign":
            return k < e - 1 or self.is_polynomial
        # (1 + |t|^q)^(1/q) = 1 + |t|^q / q + O(|t|^2q)
        return k < e or (_is_int(e) and int(e) % 2 == 0 and k == e)

    def derivative(self, k, x):
        """k-th derivative at a real point."""
        x = float(x)
        e = self.exponent
        if x == 0.0:
            if not self.derivative_exists_at_zero(k):
                raise DomainError(
                    f"{self.kind}({e:g}) has no derivative of order {k} at 0")
            if k == 0:
                return 1.0 if self.kind == "fq" else 0.0
            if self.kind == "abs_pow":
                return float(math.factorial(k)) if self.is_polynomial and k == e else 0.0
            if self.kind == "abs_pow_sign":
                return float(math.factorial(k)) if self.is_polynomial and k == e - 1 else 0.0
            return float(math.factorial(k - 1)) if k == e else 0.0
        a = abs(x)
        sgn = 1.0 if x > 0 else -1.0
        if self.kind == "abs_pow":
            return _falling(e, k) * a ** (e - k) * sgn ** k
        if self.kind == "abs_pow_sign":
            return _falling(e - 1, k) * a ** (e - 1 - k) * sgn ** (k + 1)
        if k == 0:
            return (1.0 + a ** e) ** (1.0 / e)
        return fq_derivative(e, k, x)


@dataclass(frozen=True)
class GnPolynomial:
    """The polynomial factor g_n in f_q^(n)(t) = t^(q-n) (1+t^q)^(1/q-n) g_n(t^q)."""

    n: int
    q: float
    coefficients: tuple

    @property
    def polynomial(self):
        return Polynomial(self.coefficients)

    def __call__(self, s):
        return self.polynomial(s)


@lru_cache(maxsize=None)
def gn_polynomial(q, n):
    """g_n from g_1 = 1 and g_{n+1} = (q-n)(1+s)g_n + s(1-nq)g_n + q s(1+s)g_n'."""
    if n < 1:
        raise ValueError("g_n is defined for n >= 1")
    if n > GN_MAX_ORDER:
        raise ValueError(f"g_n recursion is capped at n = {GN_MAX_ORDER}")
    q = float(q)
    s = Polynomial([0.0, 1.0])
    g = Polynomial([1.0])
    for k in range(1, n):
        g = (q - k) * (1 + s) * g + s * (1 - k * q) * g + q * s * (1 + s) * g.deriv()
    return GnPolynomial(n, q, tuple(float(c) for c in g.coef))


def fq_derivative(q, n, t):
    """n-th derivative of (1 + |t|^q)^(1/q) at t != 0 via the g_n closed form."""
    q = float(q)
    if not q > 1:
        raise DomainError(f"f_q needs q > 1, got {q}")
    if n < 1:
        raise ValueError("derivative order must be >= 1")
    if t == 0:
        raise DomainError("closed-form derivative of f_q is singular at t = 0")
    a = abs(t)
    g = gn_polynomial(q, n)
    value = a ** (q - n) * (1.0 + a ** q) ** (1.0 / q - n) * g(a ** q)
    return float(value if t > 0 else (-1) ** n * value)


def _complete_homogeneous(y, kmax):
    """h_0..h_kmax of the values y."""
    h = np.zeros(kmax + 1)
    h[0] = 1.0
    for yi in y:
        for k in range(1, kmax + 1):
            h[k] += yi * h[k - 1]
    return h


def _taylor_block(f, x):
    """Divided difference over a tight run of sorted nodes, expanded about the midpoint."""
    r = len(x) - 1
    m = 0.5 * (x[0] + x[-1])
    if x[0] == x[-1]:
        m = x[0]
        return f.derivative(r, m) / math.factorial(r)
    y = np.asarray(x) - m
    kmax = f.max_order - r
    h = _complete_homogeneous(y, kmax)
    total = 0.0
    for k in range(0, kmax + 1):
        if k > 0 and h[k] == 0.0:
            continue
        term = f.derivative(r + k, m) / math.factorial(r + k) * h[k]
        total += term
        if k >= 2 and abs(term) <= 1e-17 * abs(total):
            break
    return total


def _tight(f, x):
    spread = x[-1] - x[0]
    if spread == 0.0:
        return True
    m = 0.5 * (x[0] + x[-1])
    if f.is_polynomial:
        scale = max(abs(x[0]), abs(x[-1]), 1.0)
        return spread <= TIGHT_RATIO * scale
    ratio = TIGHT_RATIO if f.kind != "fq" else 1e-3
    return spread <= ratio * abs(m)


def divided_difference(f, nodes):
    """Divided difference f[λ_0, ..., λ_r] with confluent (repeated) nodes allowed.

    Raises
    ------
    DomainError
        If a node repeated ``m`` times sits at 0 and ``f`` has no derivative
        of order ``m - 1`` there.
    """
    x = np.sort(np.asarray(nodes, dtype=float).ravel())
    if x.size == 0:
        raise ValueError("need at least one node")
    if not np.all(np.isfinite(x)):
        raise ValueError("nodes must be finite")
    zeros = int(np.count_nonzero(x == 0.0))
    if zeros > 1 and not f.derivative_exists_at_zero(zeros - 1):
        raise DomainError(
            f"node 0 repeated {zeros} times needs derivative of order {zeros - 1}, "
            f"which {f.kind}({f.exponent:g}) lacks at 0")
    n = len(x)
    table = [[0.0] * n for _ in range(n)]
    for width in range(n):
        for i in range(n - width):
            j = i + width
            if _tight(f, x[i:j + 1]):
                table[i][j] = _taylor_block(f, x[i:j + 1])
            else:
                table[i][j] = (table[i + 1][j] - table[i][j - 1]) / (x[j] - x[i])
    return float(table[0][n - 1])


def sym_second_dd(p, d_l, d_k):
    """f_p[d_l, d_k, d_k] + f_p[d_k, d_l, d_l] for f_p = |x|^p.

    Same-sign nodes use p |a|^(p-2) (1 - r^(p-1)) / (1 - r), r = b/a, with
    expm1/log1p so that nearly equal nodes keep full precision; opposite
    signs have no cancellation and use the direct quotient.
    """
    p = float(p)
    if not p > 1:
        raise DomainError(f"need p > 1, got {p}")
    a, b = float(d_l), float(d_k)
    if p < 2 and (a == 0.0 or b == 0.0):
        raise DomainError(f"p = {p:g} < 2 needs nonzero nodes (kernel of A hit)")
    if a == 0.0 and b == 0.0:
        return 2.0 if p == 2 else 0.0
    if a * b > 0:
        a, b = abs(a), abs(b)
        if b > a:
            a, b = b, a
        delta = (b - a) / a
        if delta == 0.0:
            return p * (p - 1.0) * a ** (p - 2.0)
        if delta > -0.5:
            return p * a ** (p - 2.0) * math.expm1((p - 1.0) * math.log1p(delta)) / delta
        # well separated: no cancellation in the direct quotient
        num = a ** p + b ** p - a * b * (a ** (p - 2.0) + b ** (p - 2.0))
        return p * num / (a - b) ** 2
    a, b = abs(a), abs(b)
    # opposite signs (or one zero node): d_l d_k = -|d_l||d_k|
    num = a ** p + b ** p
    if a > 0 and b > 0:
        num += a * b * (a ** (p - 2.0) + b ** (p - 2.0))
    return p * num / (a + b) ** 2
