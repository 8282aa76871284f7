"""Schatten norms and derivatives of t -> ||A + tB||_p^p.

Every derivative is computed by a trace formula and, unless switched off,
checked against a finite difference of the exact power sum.  Both
computations run on the pencil rescaled so that ||A||_inf + ||B||_inf <= 2,
and the homogeneity identity ||cM||_p^p = c^p ||M||_p^p undoes the scaling.
"""
import math
from dataclasses import asdict, dataclass

import numpy as np

from .divdiff import FunctionSpec
from .errors import DomainError
from .linalg import (KERNEL_TOL, abs_power, as_hermitian, as_matrix, hermitian_eig,
                     polar_sign, svd)
from .moi import MoiSymbol, moi_apply, moi_trace_order2

FD_TOLERANCE = {1: 1e-7, 2: 1e-5, 3: 1e-4}
RESCALE_RADIUS = 2.0
BJ_ANGLES = 64
BJ_RADII = (1e-3, 1e-2, 1e-1)


def parse_p(p):
    """Normalize a Schatten index: a real > 0, ``"inf"``/``inf`` or ``"one"``."""
    if isinstance(p, str):
        key = p.strip().lower()
        if key in ("inf", "infinity", "oo"):
            return math.inf
        if key == "one":
            return 1.0
        try:
            p = float(key)
        except ValueError:
            raise ValueError(f"cannot read a Schatten index from {p!r}") from None
    p = float(p)
    if math.isnan(p) or p <= 0:
        raise ValueError(f"Schatten index must be positive, got {p}")
    return p


def _require_smooth_range(p):
    p = parse_p(p)
    if not 1 < p < math.inf:
        raise DomainError(f"derivative calculus needs 1 < p < inf, got p = {p}")
    return p


def norm_from_singular_values(s, p):
    s = np.asarray(s, dtype=float)
    top = np.max(s, axis=-1, initial=0.0)
    if p == math.inf:
        return top
    with np.errstate(invalid="ignore", divide="ignore"):
        scaled = np.where(top[..., None] > 0, s / np.where(top > 0, top, 1.0)[..., None], 0.0)
    return top * np.sum(scaled ** p, axis=-1) ** (1.0 / p)


def schatten_norm(M, p):
    """Schatten p-norm of a complex matrix (Jacobi SVD)."""
    p = parse_p(p)
    s, _, _ = svd(as_matrix(M))
    return float(norm_from_singular_values(s, p))


def schatten_norms(stack, p):
    """Schatten p-norms of a stack of matrices (batched LAPACK)."""
    p = parse_p(p)
    s = np.linalg.svd(np.asarray(stack, dtype=complex), compute_uv=False)
    return norm_from_singular_values(s, p)


def power_sum(A, B, ts, p):
    """sum_i |lambda_i(A + tB)|^p for Hermitian A, B and each t in ``ts``."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    stack = A[None, :, :] + ts[:, None, None] * B[None, :, :]
    lam = np.abs(np.linalg.eigvalsh(stack))
    return np.sum(lam ** p, axis=-1)


@dataclass
class DerivativeReport:
    order: int
    value: float
    method: str
    residual_vs_fd: float = None
    fd_value: float = None
    tolerance: float = None

    def __post_init__(self):
        for name in ("value", "residual_vs_fd", "fd_value", "tolerance"):
            v = getattr(self, name)
            if v is not None:
                setattr(self, name, float(v))

    @property
    def within_tolerance(self):
        return self.residual_vs_fd is None or self.residual_vs_fd <= self.tolerance

    def to_dict(self):
        return asdict(self)


def _rescaled(A, B):
    A = as_hermitian(A)
    B = as_hermitian(B)
    if A.shape != B.shape:
        raise ValueError(f"A and B differ in shape: {A.shape} vs {B.shape}")
    size = np.linalg.norm(A, 2) + np.linalg.norm(B, 2)
    c = 1.0 if size <= RESCALE_RADIUS else RESCALE_RADIUS / size
    return A * c, B * c, c


def _symmetric_eigvals_extended(S, sweeps=30):
    """Eigenvalues of a real symmetric longdouble matrix by cyclic Jacobi."""
    S = S.copy()
    n = S.shape[0]
    scale = np.sqrt(np.sum(S * S))
    eps = np.finfo(np.longdouble).eps
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.triu(S, 1) ** 2))
        if off <= eps * scale / 2:
            break
        for i in range(n - 1):
            for j in range(i + 1, n):
                g = S[i, j]
                if abs(g) <= eps * eps * scale:
                    continue
                theta = (S[j, j] - S[i, i]) / (2 * g)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1)) if theta else \
                    np.longdouble(1)
                c = 1 / np.sqrt(t * t + 1)
                s = t * c
                Si, Sj = S[:, i].copy(), S[:, j].copy()
                S[:, i], S[:, j] = c * Si - s * Sj, s * Si + c * Sj
                Si, Sj = S[i, :].copy(), S[j, :].copy()
                S[i, :], S[j, :] = c * Si - s * Sj, s * Si + c * Sj
    return np.diag(S)


def _power_sum_extended(d, Bp, ts, p):
    """Power sum of diag(d) + tB' in extended precision.

    The Hermitian matrix is embedded as the real symmetric [[X, -Y], [Y, X]],
    which carries every eigenvalue twice.
    """
    ld = np.longdouble
    X = np.diag(d.astype(ld))
    Xb, Yb = Bp.real.astype(ld), Bp.imag.astype(ld)
    out = []
    for t in ts:
        t = ld(t)
        re, im = X + t * Xb, t * Yb
        S = np.block([[re, -im], [im, re]])
        lam = _symmetric_eigvals_extended(S)
        out.append(np.sum(np.abs(lam) ** ld(p)) / 2)
    return out


def _fd(A, B, p, order):
    """Finite-difference estimate of the order-th t-derivative of the power sum at 0."""
    f = lambda ts: power_sum(A, B, ts, p)
    if order == 1:
        # A tiny step against O(||A||^p) values: evaluate in A's eigenbasis in
        # extended precision so the oracle is not limited by eps * f / h.
        h = 1e-6 / (1.0 + np.linalg.norm(B, 2))
        d, U = np.linalg.eigh(A)
        fp, fm = _power_sum_extended(d, U.conj().T @ B @ U, [h, -h], p)
        return float((fp - fm) / (2 * np.longdouble(h)))
    if order == 2:
        h = 1e-4
        v = f([2 * h, h, 0.0, -h, -2 * h])
        return (-v[0] + 16 * v[1] - 30 * v[2] + 16 * v[3] - v[4]) / (12 * h * h)
    if order == 3:
        def third(h):
            v = f([2 * h, h, -h, -2 * h])
            return (v[0] - 2 * v[1] + 2 * v[2] - v[3]) / (2 * h ** 3)
        h = 1e-2
        return (4 * third(h / 2) - third(h)) / 3
    raise ValueError(f"no finite-difference stencil for order {order}")


def _natural_scale(spec_A, B, p, order):
    """A size the order-r derivative is measured against: p^r rho^(p-r) ||B||^r."""
    rho = max(spec_A.spectral_radius(), 1e-300)
    nb = np.linalg.norm(B, 2)
    return p ** order * rho ** (p - order) * nb ** order


def _report(order, value, A, B, p, spec_A, fd_check, tolerance):
    if not fd_check:
        return value, None, None
    fd = float(_fd(A, B, p, order))
    scale = max(abs(value), abs(fd), _natural_scale(spec_A, B, p, order))
    residual = abs(value - fd) / scale if scale > 0 else 0.0
    return value, residual, fd


def first_derivative(A, B, p, kernel_tol=KERNEL_TOL, fd_check=True):
    """d/dt ||A+tB||_p^p at t = 0, equal to p Tr(B |A|^(p-1) sgn A)."""
    p = _require_smooth_range(p)
    As, Bs, c = _rescaled(A, B)
    spec = hermitian_eig(As)
    K = abs_power(As, p - 1, kernel_tol * c, spec) @ polar_sign(As, kernel_tol * c, spec)
    value = p * float(np.trace(Bs @ K).real)
    value, residual, fd = _report(1, value, As, Bs, p, spec, fd_check, FD_TOLERANCE[1])
    back = c ** p
    return DerivativeReport(1, value / back, "trace_formula", residual,
                            None if fd is None else fd / back, FD_TOLERANCE[1])


def second_derivative(A, B, p, kernel_tol=KERNEL_TOL, fd_check=True):
    """d^2/dt^2 ||A+tB||_p^p at t = 0 from the second-order MOI trace.

    Raises DomainError for p < 2 when A has an eigenvalue within
    ``kernel_tol`` of 0; the regularized limit in :mod:`snperturb.embed`
    handles that case.
    """
    p = _require_smooth_range(p)
    As, Bs, c = _rescaled(A, B)
    spec = hermitian_eig(As)
    value = 2.0 * moi_trace_order2(spec, p, Bs, kernel_tol * c)
    value, residual, fd = _report(2, value, As, Bs, p, spec, fd_check, FD_TOLERANCE[2])
    back = c ** p
    return DerivativeReport(2, value / back, "moi", residual,
                            None if fd is None else fd / back, FD_TOLERANCE[2])


def rth_derivative(A, B, p, r, kernel_tol=KERNEL_TOL, fd_check=True):
    """r-th derivative (r <= 3) as r! Tr T_{f_p^[r]}(B, ..., B)."""
    p = _require_smooth_range(p)
    if r not in (1, 2, 3):
        raise ValueError(f"derivative order must be 1, 2 or 3, got {r}")
    fp = FunctionSpec.abs_pow(p)
    if not (r < p or fp.is_polynomial):
        raise DomainError(f"|x|^{p:g} is not {r} times differentiable at 0 (need r < p)")
    if r == 1:
        return first_derivative(A, B, p, kernel_tol, fd_check)
    if r == 2:
        return second_derivative(A, B, p, kernel_tol, fd_check)
    As, Bs, c = _rescaled(A, B)
    spec = hermitian_eig(As)
    symbol = MoiSymbol.divided_difference(fp, 3)
    value = 6.0 * moi_apply(spec, symbol, [Bs, Bs, Bs]).trace.real
    value, residual, fd = _report(3, value, As, Bs, p, spec, fd_check, FD_TOLERANCE[3])
    back = c ** p
    return DerivativeReport(3, value / back, "moi", residual,
                            None if fd is None else fd / back, FD_TOLERANCE[3])


@dataclass
class BJResult:
    trace_value: float
    tolerance: float
    verdict: bool
    min_probe: dict

    def to_dict(self):
        return asdict(self)


def bj_orthogonal(A, B, p, kernel_tol=KERNEL_TOL):
    """Birkhoff-James orthogonality A _|_ B in S_p by the trace criterion and a z-grid.

    ``verdict`` comes from |Tr(|A|^(p-1) sgn(A) B)| <= 1e-8 p ||A||_p^(p-1) ||B||_p.
    The probe minimizes ||A + zB||_p over 64 angles and radii 1e-3, 1e-2, 1e-1
    and records whether nothing on the grid beats ||A||_p.
    """
    p = _require_smooth_range(p)
    A = as_hermitian(A)
    B = as_hermitian(B)
    if A.shape != B.shape:
        raise ValueError(f"A and B differ in shape: {A.shape} vs {B.shape}")
    spec = hermitian_eig(A)
    K = abs_power(A, p - 1, kernel_tol, spec) @ polar_sign(A, kernel_tol, spec)
    trace_value = float(np.trace(K @ B).real)
    na = float(norm_from_singular_values(np.abs(spec.eigenvalues), p))
    nb = float(schatten_norms(B[None], p)[0])
    tol = 1e-8 * p * na ** (p - 1) * nb
    verdict = abs(trace_value) <= tol

    angles = 2 * np.pi * np.arange(BJ_ANGLES) / BJ_ANGLES
    zs = np.concatenate([r * np.exp(1j * angles) for r in BJ_RADII])
    norms = schatten_norms(A[None] + zs[:, None, None] * B[None], p)
    k = int(np.argmin(norms))
    # a first-order gain |tau| r / ||A||^(p-1) at r = 1e-3 beats this once |tau| > tol
    grid_tol = max(1e-3 * tol / (p * max(na, 1e-300) ** (p - 1)), 1e-13 * na)
    probe = {
        "norm_at_zero": na,
        "min_norm": float(norms[k]),
        "z_at_min": [float(zs[k].real), float(zs[k].imag)],
        "grid_tolerance": grid_tol,
        "attained_at_zero": bool(norms[k] >= na - grid_tol),
        "angles": BJ_ANGLES,
        "radii": list(BJ_RADII),
    }
    return BJResult(trace_value, tol, bool(verdict), probe)


@dataclass
class TaylorCheck:
    t: np.ndarray
    residuals: np.ndarray
    exponent: float
    order: int


def taylor_coefficients(A, B, p, m):
    """c_k = (1/k!) d^k/dt^k ||A+tB||_p^p at 0 for k = 1..m, as Tr T_{f_p^[k]}(B, ..., B)."""
    fp = FunctionSpec.abs_pow(p)
    spec = hermitian_eig(A)
    out = []
    for k in range(1, m + 1):
        symbol = MoiSymbol.divided_difference(fp, k)
        out.append(moi_apply(spec, symbol, [B] * k).trace.real)
    return out


def taylor_check(A, B, p, ts=None):
    """Remainder of the order-m Taylor polynomial of ||A+tB||_p^p, m = ceil(p) - 1.

    Returns the remainders on a dyadic ladder (2^-4 .. 2^-10 by default) and
    their log-log slope, which should be at least p.
    """
    p = _require_smooth_range(p)
    m = math.ceil(p) - 1
    if m < 2:
        raise DomainError(f"Taylor check needs p > 2, got {p}")
    A = as_hermitian(A)
    B = as_hermitian(B)
    if ts is None:
        ts = 2.0 ** -np.arange(4, 11)
    ts = np.asarray(ts, dtype=float)
    coeffs = taylor_coefficients(A, B, p, m)
    base = power_sum(A, B, [0.0], p)[0]
    exact = power_sum(A, B, ts, p)
    partial = base + sum(c * ts ** (k + 1) for k, c in enumerate(coeffs))
    res = np.abs(exact - partial)
    floor = 1e3 * np.finfo(float).eps * max(base, 1.0)
    usable = res > floor
    if np.count_nonzero(usable) >= 2:
        slope = np.polyfit(np.log(ts[usable]), np.log(res[usable]), 1)[0]
    else:
        slope = math.inf
    return TaylorCheck(ts, res, float(slope), m)
