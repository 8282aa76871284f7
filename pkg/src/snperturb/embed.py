"""Isometric-embedding claims: the (I_{q,p}) check, the self-adjoint reduction, and
the staged refutation pipeline.

A claim is a pair (A, B) with the assertion ||A + tB||_p = ||(1, t)||_q for all
real t.  :func:`refute` first checks that assertion on a grid and then runs
the obstruction that applies to the (q, p) cell:

* 1 < p < inf, finite q: the first derivative of ||A+tB||_p^p must vanish
  (Birkhoff-James orthogonality), its second derivative a_2 is finite and
  positive, and the curve minus 1 must therefore start like a_2 t^2.  The
  claimed curve starts like (p/q)|t|^q, so only q = 2 survives.
* p = inf: a kernel condition for q > 2, an analyticity test for q < 2.
* p = 1: PL-convexity for q >= 4, the analyticity test for non-integer q < 4.
* q = inf: max{1, |t|^p} has a corner at t = 1, while ||A+tB||_p^p is C^1.
"""
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError
from .linalg import (KERNEL_TOL, as_hermitian, as_matrix, hermitian_eig,
                     polar_sign)
from .moi import moi_trace_order2
from .perturb import analyticity_probe, sup_norm_kernel_test
from .schatten import (bj_orthogonal, first_derivative, norm_from_singular_values,
                       parse_p, schatten_norms, second_derivative)

IQP_TOL = 1e-7
IQP_GRID = (-4.0, 4.0, 513)
FIT_WINDOW = (1e-3, 1e-1, 40)
EXPONENT_TOL = 0.05
DEFAULT_LADDER = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5)
PL_CONSTANT = 0.5
PL_ANGLES = 256
PROBE_GRID = (-1.0, 1.0, 2 ** 14)


@dataclass
class EmbeddingClaim:
    A: np.ndarray
    B: np.ndarray
    q: float
    p: float
    reduced: bool = False

    def __post_init__(self):
        self.q = parse_p(self.q)
        self.p = parse_p(self.p)
        if not self.q > 1:
            raise ValueError(f"claimed q must exceed 1, got {self.q}")
        if not self.p >= 1:
            raise ValueError(f"p must be at least 1, got {self.p}")
        if self.A is not None:
            self.A = as_matrix(self.A)
            self.B = as_matrix(self.B)
            if self.A.shape != self.B.shape:
                raise ValueError(f"A and B differ in shape: {self.A.shape} vs {self.B.shape}")


def _scalar(x):
    return 2.0 ** (-1.0 / x) if x != math.inf else 1.0


def reduce_to_selfadjoint(A, B, p):
    """X -> 2^(-1/p) [[0, X], [X*, 0]] applied to both generators.

    The map is real-linear and ||z A_new + w B_new||_p = ||z A + w B||_p for
    real z, w.
    """
    p = parse_p(p)
    A = as_matrix(A)
    B = as_matrix(B)
    if A.shape != B.shape:
        raise ValueError(f"A and B differ in shape: {A.shape} vs {B.shape}")
    c = _scalar(p)

    def lift(X):
        m, n = X.shape
        out = np.zeros((m + n, m + n), dtype=complex)
        out[:m, m:] = X
        out[m:, :m] = X.conj().T
        return c * out

    return lift(A), lift(B)


def diagonalize_pair(A, B):
    """Rotate a Hermitian pair so that A is real diagonal (descending)."""
    spec = hermitian_eig(A)
    U = spec.eigenvectors
    Bt = U.conj().T @ as_hermitian(B) @ U
    return np.diag(spec.eigenvalues).astype(complex), 0.5 * (Bt + Bt.conj().T)


def prepare(claim):
    """Reduced, diagonalized copy of a claim."""
    A, B = claim.A, claim.B
    if not claim.reduced:
        A, B = reduce_to_selfadjoint(A, B, claim.p)
    A, B = diagonalize_pair(A, B)
    return EmbeddingClaim(A, B, claim.q, claim.p, reduced=True)


def lq_curve(t, q):
    """||(1, t)||_q."""
    t = np.abs(np.asarray(t, dtype=float))
    if q == math.inf:
        return np.maximum(1.0, t)
    hi = np.maximum(1.0, t)
    lo = np.minimum(1.0, t)
    return hi * (1.0 + (lo / hi) ** q) ** (1.0 / q)


def pencil_norms(A, B, ts, p):
    """||A + tB||_p for Hermitian A, B over a vector of t."""
    ts = np.asarray(ts, dtype=float)
    lam = np.abs(np.linalg.eigvalsh(A[None] + ts[:, None, None] * B[None]))
    return norm_from_singular_values(lam, p)


@dataclass
class IqpResidual:
    t: np.ndarray
    residuals: np.ndarray
    max_residual: float
    t_at_max: float
    tolerance: float = IQP_TOL

    @property
    def passed(self):
        return self.max_residual <= self.tolerance


def verify_iqp(claim, grid=IQP_GRID, norm_curve=None):
    """Residuals |‖A+tB‖_p − ||(1,t)||_q| on a uniform grid (default 513 points on [-4, 4]).

    ``norm_curve``, if given, replaces the matrices: it maps an array of t
    to ||A+tB||_p^p (or to the norm itself when p = inf).
    """
    lo, hi, count = grid
    t = np.linspace(lo, hi, int(count))
    if norm_curve is not None:
        vals = np.asarray(norm_curve(t), dtype=float)
        norms = vals if claim.p == math.inf else np.abs(vals) ** (1.0 / claim.p)
    else:
        c = claim if claim.reduced else prepare(claim)
        norms = pencil_norms(as_hermitian(c.A), as_hermitian(c.B), t, claim.p)
    res = np.abs(norms - lq_curve(t, claim.q))
    k = int(np.argmax(res))
    return IqpResidual(t, res, float(res[k]), float(t[k]))


def check_ab_nonzero(claim, iqp_passed=None):
    """Whether ||AB||_max > 1e-10, with the largest entry as witness.

    For 1 < p != q < inf a genuine (I_{q,p}) pair always has AB != 0; if
    AB = 0 and ``iqp_passed`` is true the result carries an inconsistency flag.
    """
    c = claim if claim.reduced else prepare(claim)
    AB = c.A @ c.B
    i, j = np.unravel_index(int(np.argmax(np.abs(AB))), AB.shape)
    value = float(np.abs(AB[i, j]))
    nonzero = value > 1e-10
    inconsistent = bool(not nonzero and iqp_passed and claim.q != claim.p)
    return {"nonzero": nonzero, "witness": [int(i), int(j), value],
            "inconsistent": inconsistent, "tolerance": 1e-10}


def construct_rank_one_control(p):
    """The row embedding (z, w) -> [[z, w], [0, 0]], reduced and diagonalized, claiming q = 2."""
    p = parse_p(p)
    A = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
    B = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    A, B = reduce_to_selfadjoint(A, B, p)
    A, B = diagonalize_pair(A, B)
    return EmbeddingClaim(A, B, 2.0, p, reduced=True)


@dataclass
class RegularizedSecondDerivative:
    value: float
    ladder: list
    values: list
    rate: float
    divergent: bool


def second_derivative_regularized(A, B, p, x_ladder=DEFAULT_LADDER):
    """lim_{x -> 0+} of the second derivative of ||A + xI + tB||_p^p at t = 0.

    Each rung uses the direct formula on the invertible shift A + xI.  The
    limit is extrapolated from the last three rungs using the observed
    decay rate of the increments.  The sequence is flagged divergent when a
    rung grows by a factor of 10 or more, or when the increments stop
    shrinking, which is how the kernel-block term x^(p-2) |b|^2 shows up.
    """
    p = float(p)
    if not 1 < p < 2:
        raise DomainError(f"the regularized path is for 1 < p < 2, got {p}")
    A = as_hermitian(A)
    B = as_hermitian(B)
    ladder = [float(x) for x in x_ladder]
    if len(ladder) < 3 or any(x <= 0 for x in ladder) or any(
            b >= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("ladder must hold at least three positive, decreasing values")
    n = A.shape[0]
    vals = []
    for x in ladder:
        shifted = A + x * np.eye(n)
        vals.append(2.0 * moi_trace_order2(hermitian_eig(shifted), p, B, kernel_tol=0.0))
    v = np.array(vals)
    inc = np.abs(np.diff(v))
    grew = any(abs(b) >= 10 * abs(a) and abs(a) > 0 for a, b in zip(v, v[1:]))
    nonshrinking = inc[-1] > 0 and inc[-1] >= inc[-2]
    divergent = bool(grew or nonshrinking)
    ratio = ladder[-2] / ladder[-1]
    if inc[-1] == 0:
        rate, limit = math.inf, float(v[-1])
    elif divergent:
        rate, limit = float("nan"), math.inf
    else:
        rate = math.log(inc[-2] / inc[-1]) / math.log(ratio)
        factor = ratio ** rate
        limit = float((factor * v[-1] - v[-2]) / (factor - 1.0))
    return RegularizedSecondDerivative(limit, ladder, [float(a) for a in v], rate, divergent)


@dataclass
class ExponentFit:
    q_hat: float
    width: float
    a2: float
    leading: float
    coefficient: float
    rms: float


def _project(t, g, L):
    X = np.stack([t ** 2, t ** L], axis=1) / np.abs(g)[:, None]
    s = np.sign(g)
    c, *_ = np.linalg.lstsq(X, s, rcond=1e-12)
    return float(np.linalg.norm(X @ c - s) / math.sqrt(len(t))), c


def _free_exponent(t, g):
    from scipy.optimize import minimize_scalar
    grid = np.arange(1.02, 8.0 + 1e-9, 0.01)
    rs = np.array([_project(t, g, L)[0] for L in grid])
    i = int(np.argmin(rs))
    best = minimize_scalar(lambda L: _project(t, g, L)[0],
                           bounds=(max(1.01, grid[i] - 0.01), grid[i] + 0.01),
                           method="bounded", options={"xatol": 1e-7})
    L = float(best.x)
    rms, c = _project(t, g, L)
    cut = 2.0 * rms + 1e-12
    near = grid[rs <= cut]
    width = max(0.005, (near.max() - near.min()) / 2) if near.size else 0.005
    return L, c, rms, width


def fit_exponent(t, g_even, a2=None):
    """Exponent q in g(t) ~ a_2 t^2 + c |t|^q fitted to the even part of a curve minus 1.

    With ``a2`` known (from the matrices) the t^2 term is subtracted first.
    A remaining term with an even-integer exponent is analytic, so the
    curve's leading behaviour is a_2 t^2 and q_hat = 2; otherwise q_hat is
    the exponent of the non-analytic term.  Without ``a2`` the two terms are
    fitted jointly by variable projection over the free exponent.
    """
    t = np.asarray(t, dtype=float)
    g = np.asarray(g_even, dtype=float)
    scale = float(np.max(np.abs(g)))
    if scale == 0.0:
        raise DomainError("curve is flat at the fitting scale; no exponent to fit")
    if a2 is not None:
        rem = g - a2 * t ** 2
        if np.max(np.abs(rem)) <= 1e-9 * scale:
            return ExponentFit(2.0, 0.005, float(a2), 2.0, float(a2), 0.0)
        L, c, rms, width = _free_exponent(t, rem)
        a2_total = float(a2 + c[0])
        if _even_integer(L) or abs(c[1]) * t[-1] ** L <= 1e-6 * scale:
            return ExponentFit(2.0, width, a2_total, 2.0, a2_total, rms)
        q_hat = L
        return ExponentFit(q_hat, width, a2_total, min(2.0, L), float(c[1]), rms)
    L, c, rms, width = _free_exponent(t, g)
    a2_fit = float(c[0])
    sig2 = abs(a2_fit) * t[-1] ** 2 > 1e-6 * scale
    sigL = abs(c[1]) * t[-1] ** L > 1e-6 * scale
    if not sigL or (_even_integer(L) and sig2):
        q_hat = 2.0 if sig2 else L
        coeff = a2_fit if sig2 else float(c[1])
        return ExponentFit(q_hat, width, a2_fit, q_hat, coeff, rms)
    return ExponentFit(L, width, a2_fit, min(L, 2.0) if sig2 else L, float(c[1]), rms)


def _even_integer(x):
    return abs(x - 2 * round(x / 2)) <= EXPONENT_TOL and round(x) >= 2


def even_part_minus_one(curve, t):
    """(curve(t) + curve(-t)) / 2 - curve(0); odd terms such as a_1 t drop out."""
    t = np.asarray(t, dtype=float)
    return 0.5 * (np.asarray(curve(t)) + np.asarray(curve(-t))) - float(np.asarray(curve(np.zeros(1)))[0])


@dataclass
class PLConvexity:
    mean: float
    lower_bound: float
    holds: bool
    q_claimed: float = None
    claimed_mean: float = None
    refuted: bool = None
    angles: int = PL_ANGLES
    tolerance: float = 1e-6


def pl_convexity_check(x, y, q_claimed=None, angles=PL_ANGLES, tol=1e-6):
    """Circular mean of ||x + e^{i theta} y||_1^2 against ||x||_1^2 + (1/2) ||y||_1^2.

    Under (I_{q,1}) both generators have trace norm 1 and every
    ||x + e^{i theta} y||_1 equals 2^(1/q), so the mean is 4^(1/q) and the
    inequality needs (1 + 1/2)^q <= 4.
    """
    x = as_matrix(x)
    y = as_matrix(y)
    if x.shape != y.shape:
        raise ValueError(f"x and y differ in shape: {x.shape} vs {y.shape}")
    theta = 2 * np.pi * np.arange(angles) / angles
    stack = x[None] + np.exp(1j * theta)[:, None, None] * y[None]
    norms = schatten_norms(stack, 1.0)
    mean = float(np.mean(norms ** 2))
    nx = float(schatten_norms(x[None], 1.0)[0])
    ny = float(schatten_norms(y[None], 1.0)[0])
    bound = nx ** 2 + PL_CONSTANT * ny ** 2
    out = PLConvexity(mean, bound, mean >= bound - tol, angles=angles, tolerance=tol)
    if q_claimed is not None:
        q = parse_p(q_claimed)
        out.q_claimed = q
        out.claimed_mean = 1.0 if q == math.inf else 4.0 ** (1.0 / q)
        out.refuted = bool((1.0 + PL_CONSTANT) ** q > 4.0)
    return out


@dataclass
class RefutationReport:
    q: float
    p: float
    iqp_residual: float
    iqp_tolerance: float = IQP_TOL
    bj_ok: bool = None
    bj_trace: float = None
    ab_check: dict = None
    second_deriv: float = None
    second_deriv_method: str = None
    branch: str = None
    kernel_margin: float = None
    regularization: dict = None
    fitted_q: float = None
    fitted_q_width: float = None
    fitted_a2: float = None
    pl_verdict: dict = None
    endpoint_verdict: dict = None
    stages: list = field(default_factory=list)
    conclusion: str = None

    def to_dict(self):
        return _jsonable(asdict(self))

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _cell(q, p):
    """Which obstruction applies to (q, p)."""
    if q == p:
        return "equal_indices"
    if q == 2:
        return "hilbert"
    if p == 1:
        if q == 3 or q == math.inf:
            return "out_of_scope"
        return "pl_convexity" if q >= 4 else "branch_sum"
    if p == math.inf:
        if q == 3:
            return "out_of_scope"
        return "sup_norm_kernel" if q > 2 else "analyticity"
    if q == math.inf:
        return "q_infinity_kink"
    return "finite"


def _stage(report, name, passed, **detail):
    report.stages.append({"name": name, "passed": bool(passed), **_jsonable(detail)})
    if not passed and report.conclusion is None:
        report.conclusion = f"refuted_at({name})"


def _sample_curve(claim, norm_curve, t):
    """||A+tB||_p^p (or the sup norm when p = inf) at the points t."""
    if norm_curve is not None:
        return np.asarray(norm_curve(np.asarray(t, dtype=float)), dtype=float)
    n = pencil_norms(claim.A, claim.B, t, claim.p)
    return n if claim.p == math.inf else n ** claim.p


def _finite_stages(report, claim, norm_curve):
    p, q = claim.p, claim.q
    lo, hi, count = FIT_WINDOW
    ts = np.logspace(math.log10(lo), math.log10(hi), count)
    curve = lambda t: _sample_curve(claim, norm_curve, t)
    a2 = None
    if norm_curve is None:
        A = as_hermitian(claim.A)
        B = as_hermitian(claim.B)
        bj = bj_orthogonal(A, B, p)
        report.bj_ok, report.bj_trace = bj.verdict, bj.trace_value
        _stage(report, "bj", bj.verdict, trace=bj.trace_value, tolerance=bj.tolerance,
               grid_minimum_at_zero=bj.min_probe["attained_at_zero"])
        if 1 < p < math.inf and q < math.inf:
            report.ab_check = check_ab_nonzero(claim, iqp_passed=True)
        d = np.real(np.diag(A))
        margin = float(np.min(np.abs(d)))
        report.kernel_margin = margin
        report.branch = "invertible" if margin > KERNEL_TOL else "kernel"
        if p >= 2 or margin > KERNEL_TOL:
            sd = second_derivative(A, B, p).value
            report.second_deriv, report.second_deriv_method = sd, "direct"
            a2 = sd / 2.0
        else:
            reg = second_derivative_regularized(A, B, p)
            report.regularization = asdict(reg)
            report.second_deriv_method = "regularized"
            if not reg.divergent:
                report.second_deriv = reg.value
                a2 = reg.value / 2.0
        _stage(report, "second_derivative", a2 is not None and a2 > 0,
               value=report.second_deriv, method=report.second_deriv_method)
    else:
        h = 1e-6
        a1 = float((curve(np.array([h]))[0] - curve(np.array([-h]))[0]) / (2 * h))
        report.bj_trace = a1 / p
        report.bj_ok = abs(a1) <= 1e-6
        _stage(report, "bj", report.bj_ok, first_derivative=a1, tolerance=1e-6)
    g = even_part_minus_one(curve, ts)
    fit = fit_exponent(ts, g, a2=a2)
    report.fitted_q, report.fitted_q_width, report.fitted_a2 = fit.q_hat, fit.width, fit.a2
    ok = abs(fit.q_hat - 2.0) <= EXPONENT_TOL and q == 2
    _stage(report, "exponent_fit", ok, fitted_q=fit.q_hat, width=fit.width,
           fitted_a2=fit.a2, claimed_q=q, window=list(FIT_WINDOW), tolerance=EXPONENT_TOL)


def _probe_curve(report, claim, norm_curve, stage):
    lo, hi, count = PROBE_GRID
    t = np.linspace(lo, hi, count + 1)
    # only reached for p = 1 and p = inf, where the sampled curve is the norm itself
    samples = _sample_curve(claim, norm_curve, t)
    probe = analyticity_probe(samples, t, claim.q)
    record = {"order": probe.order, "exponent": probe.exponent,
              "expected_exponent": probe.expected_exponent, "verdict": probe.verdict}
    report.endpoint_verdict = {"check": stage, **record}
    _stage(report, stage, probe.verdict != "analytic-extension impossible", **record)


def _kink_stage(report, claim, norm_curve):
    p = claim.p
    if norm_curve is None:
        A = as_hermitian(claim.A)
        B = as_hermitian(claim.B)
        derivative = first_derivative(A + B, B, p, fd_check=False).value
        left = right = derivative
    else:
        h = 1e-6
        f = lambda s: float(norm_curve(np.array([s]))[0])
        left = (f(1.0) - f(1.0 - h)) / h
        right = (f(1.0 + h) - f(1.0)) / h
    # the claimed curve max{1, |t|^p} has one-sided slopes 0 and p at t = 1
    jump = abs(right - left)
    smooth = jump <= 1e-3 * p
    record = {"left_slope": left, "right_slope": right, "claimed_jump": p, "observed_jump": jump}
    report.endpoint_verdict = {"check": "q_infinity_kink", **record}
    _stage(report, "q_infinity_kink", not smooth, **record)


def refute(claim, norm_curve=None, run_all_stages=False):
    """Run the refutation pipeline and return a :class:`RefutationReport`.

    ``norm_curve`` replaces the matrices with a synthetic curve t -> ||A+tB||_p^p
    (the sup norm itself when p = inf); such runs can at best end in
    ``consistent_only_if_q_eq_2``.
    """
    if norm_curve is None:
        if claim.A is None:
            raise ValueError("claim has no matrices and no norm curve was supplied")
        claim = prepare(claim)
    q, p = claim.q, claim.p
    iqp = verify_iqp(claim, norm_curve=norm_curve)
    report = RefutationReport(q=q, p=p, iqp_residual=iqp.max_residual)
    _stage(report, "iqp_grid", iqp.passed, max_residual=iqp.max_residual,
           t_at_max=iqp.t_at_max, tolerance=IQP_TOL)
    if report.conclusion is not None and not run_all_stages:
        return report

    cell = _cell(q, p)
    if cell == "out_of_scope":
        report.stages.append({"name": "scope", "passed": True, "cell": [q, p]})
        if report.conclusion is None:
            report.conclusion = "out_of_theorem_scope"
        return report
    finite_p = 1 < p < math.inf and q < math.inf
    # a synthetic curve has no matrices, so the q = p exemption cannot be checked
    if finite_p and (cell in ("finite", "hilbert") or norm_curve is not None):
        _finite_stages(report, claim, norm_curve)
    elif cell == "sup_norm_kernel":
        if norm_curve is None:
            try:
                kt = sup_norm_kernel_test(claim.A, claim.B)
            except DomainError as exc:
                _stage(report, "sup_norm_kernel", False, error=str(exc))
                return _finish(report, norm_curve)
            record = {"top_vector_residuals": kt.top_vector_residuals,
                      "rest_norm": kt.rest_norm, "pb_max": kt.pb_max,
                      "locally_constant_radius": kt.locally_constant_radius,
                      "verdict": kt.verdict}
            report.endpoint_verdict = {"check": "sup_norm_kernel", **record}
            # either Bx != 0 (necessary condition fails) or the norm is locally constant
            _stage(report, "sup_norm_kernel", False, **record)
        else:
            _probe_curve(report, claim, norm_curve, "analyticity")
    elif cell == "analyticity":
        _probe_curve(report, claim, norm_curve, "analyticity")
    elif cell == "branch_sum":
        _probe_curve(report, claim, norm_curve, "branch_sum")
    elif cell == "pl_convexity":
        if norm_curve is None:
            pl = pl_convexity_check(claim.A, claim.B, q_claimed=q)
        else:
            pl = PLConvexity(float("nan"), float("nan"), True, q, 4.0 ** (1.0 / q),
                             bool(1.5 ** q > 4.0))
        report.pl_verdict = _jsonable(asdict(pl))
        _stage(report, "pl_convexity", not pl.refuted, q_claimed=q,
               threshold=math.log(4) / math.log(1 + PL_CONSTANT))
    elif cell == "q_infinity_kink":
        _kink_stage(report, claim, norm_curve)

    return _finish(report, norm_curve)


def _finish(report, norm_curve):
    if report.conclusion is None:
        if norm_curve is not None:
            report.conclusion = "consistent_only_if_q_eq_2"
        else:
            report.conclusion = "verified_numerically"
    return report
