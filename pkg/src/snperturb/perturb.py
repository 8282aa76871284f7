"""Eigenvalue branches of a Hermitian pencil A + tB and the endpoint diagnostics.

Branches are followed through crossings by predicting each eigenvalue
linearly from the two previous grid points and solving an assignment
problem between predictions and the new spectrum.  Sorting would instead
swap labels at every crossing and put a kink into each branch.
"""
import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .divdiff import FunctionSpec
from .errors import ConvergenceError, DomainError
from .linalg import as_hermitian, hermitian_eig, pencil_eigvalsh

MIN_STEPS = 64
TIE_TOL = 1e-12
ZERO_TOL = 1e-10
ORDER_ROUNDING = 0.15
UNIT_EIG_TOL = 1e-8
KERNEL_TEST_TOL = 1e-7
MIN_WINDOW_POINTS = 8


@dataclass
class BranchFamily:
    t_grid: np.ndarray
    branches: np.ndarray          # shape (n, len(t_grid))
    match_costs: np.ndarray       # assignment cost at each step (0 for the first two)
    flags: list = field(default_factory=list)
    smoothness: np.ndarray = None  # max |divided difference| of orders 1..3, per branch
    vanishing_orders: list = None
    leading_coeffs: list = None

    @property
    def n(self):
        return self.branches.shape[0]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"lambda_{i + 1}" for i in range(self.n)])
            for k, t in enumerate(self.t_grid):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in self.branches[:, k]])


def _assign(prev1, prev2, current):
    """Match ``current`` eigenvalues to branches predicted from the two previous values.

    Returns (order, cost, tie) where current[order[i]] continues branch i.
    """
    pred = 2.0 * prev1 - prev2
    cost = np.abs(pred[:, None] - current[None, :])
    rows, cols = linear_sum_assignment(cost)
    order = np.empty(len(pred), dtype=int)
    order[rows] = cols
    srt = np.sort(pred)
    tie = bool(np.any(np.diff(srt) <= TIE_TOL * max(1.0, np.max(np.abs(pred)))))
    return order, float(cost[rows, cols].sum()), tie


def _refined_step(A, B, t0, t1, prev1, prev2, substeps=4):
    """Cross one grid interval in ``substeps`` pieces; returns branch values at t1."""
    h = (t1 - t0) / substeps
    # rebuild the previous point at the finer spacing from the linear predictor
    p1, p2 = prev1, prev1 - (prev1 - prev2) / substeps
    ts = t0 + h * np.arange(1, substeps + 1)
    spectra = pencil_eigvalsh(A, B, ts)
    for lam in spectra:
        order, _, _ = _assign(p1, p2, lam)
        p1, p2 = lam[order], p1
    return p1


def divided_difference_bounds(values, h, max_order=3):
    """max |k-th divided difference| of equally spaced samples, k = 1..max_order."""
    out = []
    d = np.asarray(values, dtype=float)
    for k in range(1, max_order + 1):
        d = np.diff(d)
        out.append(float(np.max(np.abs(d))) / (math.factorial(k) * h ** k) if d.size else 0.0)
    return out


def track_branches(A, B, t_max, steps):
    """Follow the eigenvalue branches of A + tB on a uniform grid over [-t_max, t_max].

    ``steps`` must be even (so t = 0 is a grid point) and at least 64.
    """
    A = as_hermitian(A)
    B = as_hermitian(B)
    if A.shape != B.shape:
        raise ValueError(f"A and B differ in shape: {A.shape} vs {B.shape}")
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    if steps < MIN_STEPS or steps % 2:
        raise ValueError(f"steps must be an even integer >= {MIN_STEPS}, got {steps}")
    t_grid = np.linspace(-t_max, t_max, steps + 1)
    t_grid[steps // 2] = 0.0
    spectra = pencil_eigvalsh(A, B, t_grid)
    n = A.shape[0]
    branches = np.empty((n, len(t_grid)))
    costs = np.zeros(len(t_grid))
    flags = []
    branches[:, 0] = spectra[0]
    branches[:, 1] = spectra[1]
    for k in range(2, len(t_grid)):
        order, cost, tie = _assign(branches[:, k - 1], branches[:, k - 2], spectra[k])
        if tie:
            flags.append({"step": k, "t": float(t_grid[k]), "issue": "tied predictions",
                          "action": "refined x4, ties broken by branch index"})
            refined = _refined_step(A, B, t_grid[k - 1], t_grid[k],
                                    branches[:, k - 1], branches[:, k - 2])
            # snap refined values back onto the exact spectrum at t_k
            cost_m = np.abs(refined[:, None] - spectra[k][None, :])
            rows, cols = linear_sum_assignment(cost_m)
            order = np.empty(n, dtype=int)
            order[rows] = cols
            cost = float(cost_m[rows, cols].sum())
        branches[:, k] = spectra[k][order]
        costs[k] = cost

    h = t_grid[1] - t_grid[0]
    smooth = np.array([divided_difference_bounds(b, h) for b in branches])
    scale = np.linalg.norm(A, 2) + t_max * np.linalg.norm(B, 2)
    zero_tol = ZERO_TOL * max(scale, 1e-300)
    orders, coeffs = [], []
    for i, b in enumerate(branches):
        try:
            m, mu0 = vanishing_order(b, t_grid, zero_tol=zero_tol)
        except ConvergenceError as exc:
            flags.append({"branch": i, "issue": str(exc)})
            m, mu0 = None, None
        orders.append(m)
        coeffs.append(mu0)
    return BranchFamily(t_grid, branches, costs, flags, smooth, orders, coeffs)


def vanishing_order(branch, t_grid, zero_tol=None):
    """Order m and leading coefficient mu(0) in lambda(t) = t^m mu(t).

    m is the log-log slope of |lambda| over the decade of grid points
    nearest 0 (both sides), accepted when within 0.15 of an integer.
    mu(0) is the linear extrapolation of lambda(t) / t^m to t = 0.
    Returns ``("identically_zero", 0.0)`` for a branch that vanishes on the
    whole grid.
    """
    lam = np.asarray(branch, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    if lam.shape != t.shape:
        raise ValueError("branch and grid differ in length")
    if zero_tol is None:
        zero_tol = ZERO_TOL * max(np.max(np.abs(lam)), 1e-300)
    i0 = int(np.argmin(np.abs(t)))
    if abs(t[i0]) > 1e-14 * max(np.max(np.abs(t)), 1.0):
        raise DomainError("grid does not contain t = 0")
    if np.all(np.abs(lam) <= zero_tol):
        return "identically_zero", 0.0
    if abs(lam[i0]) > zero_tol:
        return 0, float(lam[i0])
    h = np.min(np.abs(np.diff(t)))
    window = (np.abs(t) > 0) & (np.abs(t) <= 10 * h * (1 + 1e-9)) & (np.abs(lam) > zero_tol)
    if np.count_nonzero(window) < 3:
        raise ConvergenceError("too few nonzero samples near t = 0 to fit a vanishing order")
    slope = np.polyfit(np.log(np.abs(t[window])), np.log(np.abs(lam[window])), 1)[0]
    m = int(round(slope))
    if abs(slope - m) > ORDER_ROUNDING or m < 1:
        raise ConvergenceError(
            f"log-log slope {slope:.3f} near t = 0 is not close to a positive integer")
    ratio = lam[window] / t[window] ** m
    mu0 = np.polyfit(t[window], ratio, 1)[1]
    return m, float(mu0)


@dataclass
class KernelTestResult:
    top_vector_residuals: list
    pb_max: float
    rest_norm: float
    locally_constant_radius: float
    obstruction_met: bool
    refutes_finite_q: bool
    verdict: str
    tolerance: float = KERNEL_TEST_TOL


def sup_norm_kernel_test(A, B):
    """Necessary condition Bx = 0 on the +-1 eigenvectors of A for (I_{q,inf}) with q > 2.

    Also reports ||(I-P)A(I-P)||_inf; when Bx = 0 and that is below 1 the
    sup norm of A + tB equals 1 on a neighbourhood of 0, which no curve
    (1 + |t|^q)^(1/q) with finite q can do.
    """
    A = as_hermitian(A)
    B = as_hermitian(B)
    if A.shape != B.shape:
        raise ValueError(f"A and B differ in shape: {A.shape} vs {B.shape}")
    spec = hermitian_eig(A)
    d = spec.eigenvalues
    if abs(np.max(np.abs(d)) - 1.0) > 1e-9:
        raise DomainError(f"need ||A||_inf = 1, got {np.max(np.abs(d)):.12g}")
    top = np.abs(np.abs(d) - 1.0) <= UNIT_EIG_TOL
    X = spec.eigenvectors[:, top]
    residuals = [float(np.linalg.norm(B @ X[:, j])) for j in range(X.shape[1])]
    P = X @ X.conj().T
    pb_max = float(np.max(np.abs(P @ B)))
    rest = float(np.max(np.abs(d[~top]))) if np.any(~top) else 0.0
    met = all(r <= KERNEL_TEST_TOL for r in residuals)
    nb = np.linalg.norm(B, 2)
    if met:
        radius = math.inf if nb == 0 else (1.0 - rest) / nb
        verdict = "obstruction met"
    else:
        radius = 0.0
        verdict = "pair cannot satisfy (I_{q,inf}) with q>2"
    return KernelTestResult(residuals, pb_max, rest, radius, met, bool(met and radius > 0), verdict)


@dataclass
class AnalyticityProbe:
    order: int
    exponent: float
    expected_exponent: float
    widths: np.ndarray
    estimates: np.ndarray
    verdict: str


def analyticity_probe(samples, t_grid, q, fit_windows=5):
    """Growth of the (floor(q)+1)-th derivative of a norm curve as t -> 0.

    On each side of 0 and for shrinking widths w = t_max / 2^j, the
    derivative is estimated by a divided difference on equally spaced
    grid points spanning [w/2, w].  The log-log slope of the estimates
    against w over the smallest ``fit_windows`` widths is compared with
    q - floor(q) - 1, the rate of f_q^(floor(q)+1)(t) for non-integer q.
    """
    y = np.asarray(samples, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    if y.shape != t.shape:
        raise ValueError("samples and grid differ in length")
    q = float(q)
    if not q > 1:
        raise DomainError(f"need q > 1, got {q}")
    k = int(math.floor(q)) + 1
    h = float(np.min(np.diff(t)))
    i0 = int(np.argmin(np.abs(t)))
    t_max = min(abs(t[0]), abs(t[-1]))
    widths, estimates = [], []
    w = t_max / 2
    while True:
        pts = int(round(w / 2 / h)) + 1
        if pts < MIN_WINDOW_POINTS:
            break
        spacing = (pts - 1) // k
        if spacing < 1:
            break
        per_side = []
        for sign in (1, -1):
            start = i0 + sign * int(round(w / 2 / h))
            idx = [start + sign * j * spacing for j in range(k + 1)]
            if min(idx) < 0 or max(idx) >= len(t):
                per_side = None
                break
            nodes = t[idx]
            # k-th divided difference of equally spaced samples times k!
            diff = np.diff(y[idx], n=k) if sign > 0 else np.diff(y[idx][::-1], n=k)
            step = abs(nodes[1] - nodes[0])
            per_side.append(abs(float(diff[0])) / step ** k)
        if per_side is None:
            break
        widths.append(w)
        estimates.append(per_side)
        w /= 2
    if len(widths) < 3:
        raise DomainError(
            f"grid too coarse: need at least {MIN_WINDOW_POINTS} points per window "
            f"in 3 windows, got {len(widths)} windows")
    widths = np.array(widths)
    estimates = np.array(estimates)
    use = slice(max(0, len(widths) - fit_windows), len(widths))
    lw = np.repeat(np.log(widths[use]), 2)
    le = np.log(np.maximum(estimates[use].ravel(), 1e-300))
    exponent = float(np.polyfit(lw, le, 1)[0])
    frac = q - math.floor(q)
    expected = frac - 1.0
    if frac == 0.0:
        if int(q) % 2 == 0:
            verdict = "consistent with analyticity"
        else:
            verdict = "integer-q boundary, inconclusive"
    elif abs(exponent - expected) <= 0.1:
        verdict = "analytic-extension impossible"
    elif exponent >= -0.1:
        verdict = "consistent with analyticity"
    else:
        verdict = "inconclusive"
    return AnalyticityProbe(k, exponent, expected, widths, estimates, verdict)


def fq_samples(q, t_grid):
    """Samples of (1 + |t|^q)^(1/q), the norm curve a (I_{q,p}) pair must produce."""
    f = FunctionSpec.fq(q)
    return np.array([f(t) for t in np.asarray(t_grid, dtype=float)])
