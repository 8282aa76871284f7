"""Discrete multiple operator integrals on finite-dimensional spaces.

For Hermitian A = sum_i d_i P_i the operator

    T_phi(B_1, ..., B_n) = sum phi(d_i0, ..., d_in) P_i0 B_1 P_i1 ... B_n P_in

is evaluated in the eigenbasis of A: each B_k is conjugated by U, the
products are contracted against the symbol tensor with ``einsum``, and the
result is conjugated back.  Eigenvalues closer than ``GROUP_TOL`` times the
spectral radius are merged into one spectral point, so the symbol only ever
sees exact ties and the output does not depend on which eigenbasis the
solver returned inside a degenerate eigenspace.
"""
import string
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .divdiff import FunctionSpec, divided_difference
from .errors import DomainError
from .linalg import KERNEL_TOL, SpectralDecomposition, as_hermitian, hermitian_eig

GROUP_TOL = 1e-9

SYMBOL_KINDS = ("dd_abs_pow", "dd_abs_pow_sign", "constant_one", "projector_indicator")


@dataclass(frozen=True)
class MoiSymbol:
    """A symbol from the closed registry, with ``arity`` node slots.

    Build instances with the class constructors rather than directly.
    """

    kind: str
    arity: int
    function: FunctionSpec = None
    slot: int = 0
    point: float = 0.0

    def __post_init__(self):
        if self.kind not in SYMBOL_KINDS:
            raise ValueError(f"unknown symbol kind {self.kind!r}")
        if self.arity < 1:
            raise ValueError("symbol arity must be >= 1")

    @classmethod
    def divided_difference(cls, function, order):
        kinds = {"abs_pow": "dd_abs_pow", "abs_pow_sign": "dd_abs_pow_sign"}
        if function.kind not in kinds:
            raise ValueError(f"no MOI symbol registered for {function.kind!r}")
        return cls(kinds[function.kind], order + 1, function=function)

    @classmethod
    def constant_one(cls, arity):
        return cls("constant_one", arity)

    @classmethod
    def projector_indicator(cls, arity, slot, point):
        """1 when node ``slot`` equals ``point`` (as a spectral point of A), else 0."""
        if not 0 <= slot < arity:
            raise ValueError("slot out of range")
        return cls("projector_indicator", arity, slot=slot, point=float(point))

    def tensor(self, points, tol=0.0):
        """Symbol values on the grid ``points`` x ... x ``points``."""
        k = len(points)
        shape = (k,) * self.arity
        if self.kind == "constant_one":
            return np.ones(shape)
        if self.kind == "projector_indicator":
            hit = (np.abs(np.asarray(points) - self.point) <= tol).astype(float)
            view = [1] * self.arity
            view[self.slot] = k
            return np.broadcast_to(hit.reshape(view), shape).copy()
        out = np.empty(shape)
        # divided differences are symmetric: evaluate each multiset once
        cache = {}
        for idx in product(range(k), repeat=self.arity):
            key = tuple(sorted(idx))
            if key not in cache:
                cache[key] = divided_difference(self.function, [points[i] for i in key])
            out[idx] = cache[key]
        return out


@dataclass
class MoiResult:
    matrix: np.ndarray
    trace: complex = field(init=False)

    def __post_init__(self):
        self.trace = complex(np.trace(self.matrix))


def spectral_groups(eigenvalues, tol=GROUP_TOL):
    """Cluster nearly equal eigenvalues.

    Returns ``(points, labels)``: the cluster means and, for each eigenvalue,
    the index of its cluster.
    """
    d = np.asarray(eigenvalues, dtype=float)
    radius = np.max(np.abs(d)) if d.size else 0.0
    cut = tol * max(radius, 1e-300)
    order = np.argsort(d, kind="stable")
    labels = np.empty(len(d), dtype=int)
    points, members = [], []
    for i in order:
        if members and d[i] - d[members[-1][-1]] <= cut:
            members[-1].append(i)
        else:
            members.append([i])
    for g, idx in enumerate(members):
        labels[idx] = g
        points.append(float(np.mean(d[idx])))
    return np.array(points), labels


def _decomposition(A):
    if isinstance(A, SpectralDecomposition):
        return A
    return hermitian_eig(A)


def moi_apply(spec_A, symbol, Bs):
    """T^{A,...,A}_phi(B_1, ..., B_n) for a registry symbol of arity n + 1."""
    spec_A = _decomposition(spec_A)
    Bs = [np.asarray(B, dtype=complex) for B in Bs]
    n = spec_A.n
    for B in Bs:
        if B.shape != (n, n):
            raise ValueError(f"perturbation shape {B.shape} does not match A ({n}x{n})")
    if symbol.arity != len(Bs) + 1:
        raise ValueError(
            f"symbol of arity {symbol.arity} needs {symbol.arity - 1} perturbations, "
            f"got {len(Bs)}")
    points, labels = spectral_groups(spec_A.eigenvalues)
    radius = max(np.max(np.abs(points)), 1e-300)
    phi = symbol.tensor(points, tol=GROUP_TOL * radius)
    phi = phi[np.ix_(*([labels] * symbol.arity))]
    if not Bs:
        R = np.diag(np.diagonal(phi)).astype(complex)
        return MoiResult(spec_A.from_eigenbasis(R))
    Bt = [spec_A.to_eigenbasis(B) for B in Bs]
    letters = string.ascii_lowercase[:symbol.arity]
    terms = [letters] + [letters[k] + letters[k + 1] for k in range(len(Bs))]
    expr = ",".join(terms) + "->" + letters[0] + letters[-1]
    R = np.einsum(expr, phi, *Bt)
    return MoiResult(spec_A.from_eigenbasis(R))


def second_order_weights(eigenvalues, p, kernel_tol=KERNEL_TOL):
    """Matrix W with Tr T_{f_p^[2]}(B, B) = sum_l W_ll |b_ll|^2 + sum_{l<k} W_lk |b_lk|^2.

    Diagonal: f_p''(d)/2.  Off-diagonal: f_p[d_l,d_k,d_k] + f_p[d_k,d_l,d_l],
    with the coincident limit p(p-1)|d|^(p-2) for merged spectral points.
    """
    p = float(p)
    if not p > 1:
        raise DomainError(f"need p > 1, got {p}")
    points, labels = spectral_groups(eigenvalues)
    if p < 2 and np.any(np.abs(points) <= kernel_tol):
        raise DomainError(
            f"p = {p:g} < 2 needs A invertible near t = 0 for the second-derivative "
            f"formula; smallest |eigenvalue| is {np.min(np.abs(points)):.3e}")
    a = np.abs(points)
    if p == 2:
        coincident = np.full(len(points), 2.0)
    else:
        with np.errstate(divide="ignore"):
            coincident = np.where(a == 0, 0.0, p * (p - 1) * a ** (p - 2))
    x, y = np.meshgrid(points, points, indexing="ij")
    ax, ay = np.abs(x), np.abs(y)
    W = np.empty_like(x)
    same = x * y > 0
    hi, lo = np.maximum(ax, ay), np.minimum(ax, ay)
    with np.errstate(divide="ignore", invalid="ignore"):
        delta = (lo - hi) / hi
        ratio = np.where(delta == 0, p - 1.0, np.expm1((p - 1.0) * np.log1p(delta)) / delta)
        W_same = p * hi ** (p - 2.0) * ratio
        num = ax ** p + ay ** p + np.where((ax > 0) & (ay > 0),
                                           ax * ay * (ax ** (p - 2.0) + ay ** (p - 2.0)), 0.0)
        W_opp = p * num / (ax + ay) ** 2
    W = np.where(same, W_same, W_opp)
    both_zero = (ax == 0) & (ay == 0)
    W = np.where(both_zero, 2.0 if p == 2 else 0.0, W)
    np.fill_diagonal(W, coincident)
    W_full = W[np.ix_(labels, labels)]
    # merged but distinct indices use the coincident limit; the true diagonal is f''/2
    np.fill_diagonal(W_full, 0.5 * coincident[labels])
    return W_full


def moi_trace_order2(spec_A, p, B, kernel_tol=KERNEL_TOL):
    """Tr T^{A,A,A}_{f_p^[2]}(B, B) by the O(n^2) contraction over |b_lk|^2."""
    spec_A = _decomposition(spec_A)
    B = as_hermitian(B)
    if B.shape != (spec_A.n, spec_A.n):
        raise ValueError("B does not match the dimension of A")
    b2 = np.abs(spec_A.to_eigenbasis(B)) ** 2
    W = second_order_weights(spec_A.eigenvalues, p, kernel_tol)
    upper = np.triu(np.ones_like(W), 1)
    return float(np.sum(np.diag(W) * np.diag(b2)) + np.sum(upper * W * b2))


def moi_trace_truncated(spec_A, p, B, rank):
    """Second-order trace after compressing A and B to the top-``rank`` eigendirections of A.

    Directions are ranked by |d_i|, ties broken by the descending eigenvalue order.
    """
    spec_A = _decomposition(spec_A)
    if not p > 2:
        raise DomainError(f"truncation is used for p > 2, got {p}")
    if not 1 <= rank <= spec_A.n:
        raise ValueError(f"rank must lie in [1, {spec_A.n}], got {rank}")
    keep = np.argsort(-np.abs(spec_A.eigenvalues), kind="stable")[:rank]
    Bt = spec_A.to_eigenbasis(as_hermitian(B))[np.ix_(keep, keep)]
    compressed = SpectralDecomposition(spec_A.eigenvalues[keep], np.eye(rank, dtype=complex))
    return moi_trace_order2(compressed, p, Bt)
