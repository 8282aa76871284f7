import math

import numpy as np
import pytest

from snperturb.embed import (EmbeddingClaim, check_ab_nonzero, construct_rank_one_control,
                             fit_exponent, lq_curve, pl_convexity_check, reduce_to_selfadjoint,
                             refute, second_derivative_regularized, verify_iqp)
from snperturb.errors import DomainError
from snperturb.linalg import default_rng, random_hermitian
from snperturb.schatten import schatten_norm, second_derivative

X = np.array([[0.0, 1.0], [1.0, 0.0]])
DISJOINT = (np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))


def test_lq_curve():
    assert lq_curve(1.0, 2) == pytest.approx(math.sqrt(2))
    assert lq_curve(-3.0, math.inf) == 3.0
    assert lq_curve(1e200, 1.5) == pytest.approx(1e200)


def test_reduce_hermitian_norm(rng):
    A = random_hermitian(3, rng)
    for p in (1.0, 2.5, math.inf):
        A_new, _ = reduce_to_selfadjoint(A, A, p)
        assert schatten_norm(A_new, p) == pytest.approx(schatten_norm(A, p))


def test_reduce_rank_one_pair():
    A, B = np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([[0.0, 1.0], [0.0, 0.0]])
    A_new, B_new = reduce_to_selfadjoint(A, B, 2)
    assert A_new.shape == (4, 4)
    s = np.linalg.svd(A_new, compute_uv=False)
    assert math.sqrt(np.sum(s ** 2)) == pytest.approx(1)
    assert np.allclose(A_new, A_new.conj().T) and np.allclose(B_new, B_new.conj().T)


@pytest.mark.parametrize("p", [1.0, 1.7, 3.0, math.inf])
def test_reduce_preserves_pencil_norms(p):
    rng = np.random.default_rng(17)
    A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    B = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    A_new, B_new = reduce_to_selfadjoint(A, B, p)
    for z, w in rng.standard_normal((100, 2)):
        assert schatten_norm(z * A_new + w * B_new, p) == \
            pytest.approx(schatten_norm(z * A + w * B, p), rel=1e-10)


def test_verify_iqp_examples():
    for p in (1.5, 3.0, 4.0):
        r = verify_iqp(EmbeddingClaim(*DISJOINT, p, p, reduced=True))
        assert r.max_residual == pytest.approx(0, abs=1e-15)
    r = verify_iqp(EmbeddingClaim(*DISJOINT, 3, 4, reduced=True))
    assert r.max_residual >= abs(2 ** (1 / 3) - 2 ** (1 / 4)) - 1e-15
    assert not r.passed


@pytest.mark.parametrize("p", [1, 2, 3.7, math.inf])
def test_rank_one_control_iqp(p):
    claim = construct_rank_one_control(p)
    r = verify_iqp(claim)
    assert r.passed and r.max_residual <= 1e-10
    # oracle: the rank-one singular value sqrt(1 + t^2)
    M = lambda t: np.array([[1.0, t], [0.0, 0.0]])
    for t in (-3.0, 0.4, 2.0):
        assert schatten_norm(M(t), p) == pytest.approx(math.sqrt(1 + t * t))
    assert np.allclose(claim.A, np.diag(np.diag(claim.A).real))


def test_ab_check():
    assert not check_ab_nonzero(EmbeddingClaim(*DISJOINT, 3, 3, reduced=True))["nonzero"]
    c = construct_rank_one_control(3)
    res = check_ab_nonzero(c)
    assert res["nonzero"]
    assert res["witness"][2] == pytest.approx(np.max(np.abs(c.A @ c.B)))
    A = np.diag([1.0, -0.5])
    assert check_ab_nonzero(EmbeddingClaim(A, A, 3, 2, reduced=True))["nonzero"]
    flagged = check_ab_nonzero(EmbeddingClaim(*DISJOINT, 3, 4, reduced=True), iqp_passed=True)
    assert flagged["inconsistent"]


def test_claim_validation():
    with pytest.raises(ValueError):
        EmbeddingClaim(np.eye(2), np.eye(3), 2, 3)
    with pytest.raises(ValueError):
        EmbeddingClaim(np.eye(2), np.eye(2), 1.0, 3)
    with pytest.raises(ValueError):
        EmbeddingClaim(np.eye(2), np.eye(2), 2, 0.5)


def test_refute_examples():
    assert refute(construct_rank_one_control(4)).conclusion == "verified_numerically"
    r = refute(EmbeddingClaim(*DISJOINT, 3, 4, reduced=True))
    assert r.conclusion == "refuted_at(iqp_grid)"
    curve = lambda t: (1 + np.abs(t) ** 2.5) ** (3 / 2.5)
    r = refute(EmbeddingClaim(None, None, 2.5, 3), norm_curve=curve)
    assert abs(r.fitted_q - 2.5) <= 0.05
    assert r.conclusion == "refuted_at(exponent_fit)"


def test_report_json_roundtrip():
    import json
    r = refute(construct_rank_one_control(math.inf))
    data = json.loads(r.to_json())
    assert data["p"] == "inf" and data["conclusion"] == "verified_numerically"
    assert data["stages"][0]["name"] == "iqp_grid"
    assert "tolerance" in data["stages"][0]


def test_control_reports_stage_numbers():
    r = refute(construct_rank_one_control(3))
    names = [s["name"] for s in r.stages]
    assert names == ["iqp_grid", "bj", "second_derivative", "exponent_fit"]
    assert r.bj_ok and r.ab_check["nonzero"]
    assert r.fitted_q == 2.0 and r.second_deriv > 0


def test_control_below_two_uses_regularization():
    r = refute(construct_rank_one_control(1.3))
    assert r.branch == "kernel" and r.second_deriv_method == "regularized"
    assert r.conclusion == "verified_numerically"


def test_out_of_scope_cells():
    # p = 1 with q = 3, and p = inf with q = 3: verdict withheld when the grid passes
    curve1 = lambda t: (1 + np.abs(t) ** 3) ** (1 / 3)
    for p in (1.0, math.inf):
        r = refute(EmbeddingClaim(None, None, 3, p), norm_curve=curve1)
        assert r.conclusion == "out_of_theorem_scope"


def test_pl_cell_refutes_q4():
    curve = lambda t: (1 + np.abs(t) ** 4) ** (1 / 4)
    r = refute(EmbeddingClaim(None, None, 4, 1), norm_curve=curve)
    assert r.conclusion == "refuted_at(pl_convexity)"


def test_sup_norm_and_analyticity_cells():
    r = refute(EmbeddingClaim(None, None, 1.5, math.inf),
               norm_curve=lambda t: (1 + np.abs(t) ** 1.5) ** (1 / 1.5))
    assert r.conclusion == "refuted_at(analyticity)"
    r = refute(EmbeddingClaim(None, None, 1.5, 1),
               norm_curve=lambda t: (1 + np.abs(t) ** 1.5) ** (1 / 1.5))
    assert r.conclusion == "refuted_at(branch_sum)"


def test_q_infinity_kink():
    p = 3.0
    r = refute(EmbeddingClaim(None, None, math.inf, p),
               norm_curve=lambda t: np.maximum(1.0, np.abs(t)) ** p)
    assert r.stages[0]["passed"]
    # the claimed curve itself has the kink; a smooth pencil curve cannot reproduce it
    assert r.endpoint_verdict["observed_jump"] == pytest.approx(p, rel=1e-4)
    smooth = refute(EmbeddingClaim(np.diag([0.8, -0.6]), X * 0.7, math.inf, p, reduced=True),
                    run_all_stages=True)
    assert "refuted_at" in smooth.conclusion
    kink = [s for s in smooth.stages if s["name"] == "q_infinity_kink"][0]
    assert not kink["passed"]


@pytest.mark.parametrize("q", [1.5, 2.0, 2.5, 3.0])
def test_fit_exponent_with_quadratic_and_cubic_terms(q):
    p = 3.0
    a2 = 0.4
    t = np.logspace(-3, -1, 40)
    g = (p / q) * t ** q + a2 * t ** 2 + 0.1 * t ** 4
    fit = fit_exponent(t, g)
    assert abs(fit.q_hat - q) <= 0.05


def test_fit_exponent_flat_curve():
    t = np.logspace(-3, -1, 40)
    with pytest.raises(DomainError):
        fit_exponent(t, 0 * t)


def test_regularized_matches_direct_when_invertible(rng):
    A = np.diag([1.0, -0.6, 0.3])
    B = random_hermitian(3, rng)
    reg = second_derivative_regularized(A, B, 1.5)
    # the ladder shifts A, so compare with the limit of the shifted direct values
    direct = second_derivative(A, B, 1.5).value
    assert reg.value == pytest.approx(direct, rel=1e-5)
    assert not reg.divergent


def test_regularized_kernel_block_diverges():
    reg = second_derivative_regularized(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), 1.5)
    assert reg.divergent and reg.value == math.inf


def test_regularized_cross_block_finite():
    p = 1.5
    c = 2 ** (-1 / p)
    A, B = np.diag([1.0, 0.0]), c * X
    reg = second_derivative_regularized(A, B, p)
    # cross weight p (|d|^p + |0|^p - d*0*(...)) / d^2 = p at d = 1, doubled for the derivative
    oracle = 2 * p * c ** 2
    assert not reg.divergent
    assert reg.value == pytest.approx(oracle, rel=1e-3)


def test_regularized_rejects_bad_input():
    with pytest.raises(DomainError):
        second_derivative_regularized(np.eye(2), np.eye(2), 2.5)
    with pytest.raises(ValueError):
        second_derivative_regularized(np.eye(2), np.eye(2), 1.5, [1e-2, 1e-1, 1e-3])


def test_pl_convexity_examples():
    r = pl_convexity_check(np.eye(1), np.eye(1))
    assert r.mean == pytest.approx(2) and r.lower_bound == pytest.approx(1.5) and r.holds
    assert pl_convexity_check(np.eye(1), np.eye(1), q_claimed=4).refuted
    assert not pl_convexity_check(np.eye(1), np.eye(1), q_claimed=3).refuted


def test_branch_through_zero_diagonal_pairs():
    # a branch t * b through 0 with p < 2: claims q != p must not survive
    rng = default_rng()
    for p in (1.3, 1.7):
        for q in (1.5, 2.5, 3.0):
            if q == p:
                continue
            for _ in range(20):
                a = np.append(rng.standard_normal(2), 0.0)
                b = rng.standard_normal(3)
                A = np.diag(a / np.sum(np.abs(a) ** p) ** (1 / p))
                B = np.diag(b / np.sum(np.abs(b) ** p) ** (1 / p))
                assert refute(EmbeddingClaim(A, B, q, p, reduced=True)).conclusion != \
                    "verified_numerically"


@pytest.mark.parametrize("q,p", [(1.5, 3.0), (3.0, 4.0), (4.0, 1.5), (math.inf, 3.0),
                                 (4.0, 1.0), (1.5, 1.0), (1.5, math.inf)])
def test_soundness_fuzz(q, p):
    rng = default_rng()
    at_grid = 0
    for _ in range(1000):
        n = int(rng.integers(2, 5))
        A, B = random_hermitian(n, rng), random_hermitian(n, rng)
        A, B = A / schatten_norm(A, p), B / schatten_norm(B, p)
        r = refute(EmbeddingClaim(A, B, q, p, reduced=True))
        assert r.conclusion != "verified_numerically"
        at_grid += r.conclusion == "refuted_at(iqp_grid)"
    assert at_grid >= 990
