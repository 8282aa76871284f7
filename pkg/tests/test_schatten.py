import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import invertible_hermitian
from snperturb.errors import DomainError
from snperturb.linalg import random_hermitian, random_unitary
from snperturb.schatten import (bj_orthogonal, first_derivative, parse_p, rth_derivative,
                                schatten_norm, second_derivative, taylor_check)

X = np.array([[0.0, 1.0], [1.0, 0.0]])


def test_norm_examples(rng):
    assert schatten_norm([[3, 0], [0, -4]], 1) == pytest.approx(7)
    assert schatten_norm([[3, 0], [0, -4]], "one") == pytest.approx(7)
    assert schatten_norm([[3, 0], [0, -4]], "inf") == pytest.approx(4)
    z, w = 1 - 2j, 0.5j
    for p in (1, 1.5, 3, math.inf):
        assert schatten_norm([[z, w], [0, 0]], p) == pytest.approx(math.hypot(abs(z), abs(w)))
    M = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    assert schatten_norm(M, 2) == pytest.approx(np.sqrt(np.sum(np.abs(M) ** 2)))


def test_parse_p():
    assert parse_p("inf") == math.inf and parse_p("one") == 1.0 and parse_p("2.5") == 2.5
    with pytest.raises(ValueError):
        parse_p("zero")
    with pytest.raises(ValueError):
        parse_p(-1)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.sampled_from([1.0, 1.7, 2.0, 3.3, math.inf]),
       st.integers(0, 2 ** 32 - 1))
def test_unitary_invariance(n, p, seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    U, V = random_unitary(n, rng), random_unitary(n, rng)
    assert schatten_norm(U @ M @ V, p) == pytest.approx(schatten_norm(M, p), rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.sampled_from([1.0, 1.7, 2.0, 3.3]),
       st.integers(0, 2 ** 32 - 1))
def test_block_identity(m, n, p, seed):
    rng = np.random.default_rng(seed)
    Y = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    big = np.block([[np.zeros((m, m)), Y], [Y.conj().T, np.zeros((n, n))]])
    assert schatten_norm(big, p) ** p == pytest.approx(2 * schatten_norm(Y, p) ** p, rel=1e-9)
    assert schatten_norm(big, math.inf) == pytest.approx(schatten_norm(Y, math.inf), rel=1e-12)


def test_first_derivative_examples(rng):
    assert first_derivative(np.diag([2.0, -1.0]), np.eye(2), 3).value == pytest.approx(9)
    for p in (1.5, 2.5, 4.0):
        assert first_derivative(np.diag([1.0, 0.0]), X, p).value == pytest.approx(0, abs=1e-12)
    A = random_hermitian(4, rng)
    A = A / schatten_norm(A, 2.7)
    assert first_derivative(A, A, 2.7).value == pytest.approx(2.7)


def test_second_derivative_examples(rng):
    A, B = random_hermitian(4, rng), random_hermitian(4, rng)
    assert second_derivative(A, B, 2).value == pytest.approx(2 * np.sum(np.abs(B) ** 2))
    a = 2 ** -0.25
    assert second_derivative(a * np.diag([1.0, -1.0]), a * X, 4).value == pytest.approx(4)
    assert second_derivative(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), 3).value == 0


def test_second_derivative_singular_below_two():
    with pytest.raises(DomainError):
        second_derivative(np.diag([1.0, 0.0]), X, 1.5)


def test_rescaling_outside_radius_two(rng):
    # large inputs are rescaled into spectral radius 2 and scaled back
    A, B = 5 * invertible_hermitian(4, rng), 3 * random_hermitian(4, rng)
    r = second_derivative(A, B, 3.0)
    assert r.within_tolerance
    small = second_derivative(A / 5, B / 5, 3.0).value
    assert r.value == pytest.approx(5 ** 3 * small, rel=1e-10)


def test_rth_derivative(rng):
    A, B = invertible_hermitian(4, rng), random_hermitian(4, rng)
    assert rth_derivative(A, B, 3.0, 2).value == pytest.approx(second_derivative(A, B, 3.0).value,
                                                              rel=1e-9)
    r3 = rth_derivative(A, B, 4.5, 3)
    assert abs(r3.value - r3.fd_value) <= 1e-4 * abs(r3.fd_value)
    assert rth_derivative(A, np.zeros((4, 4)), 4.5, 3).value == 0
    with pytest.raises(DomainError):
        rth_derivative(A, B, 2.5, 3)
    # an even-integer p is a polynomial, smooth at every order
    assert rth_derivative(A, B, 2.0, 3).value == pytest.approx(0, abs=1e-9)


@pytest.mark.parametrize("r", [1, 2, 3])
def test_homogeneity(r, rng):
    p = 3.6
    A, B = invertible_hermitian(4, rng), random_hermitian(4, rng)
    c, s = 0.7, 1.9
    base = rth_derivative(A, B, p, r, fd_check=False).value
    scaled = rth_derivative(c * A, s * B, p, r, fd_check=False).value
    assert scaled == pytest.approx(c ** (p - r) * s ** r * base, rel=1e-9)


def test_fd_tolerances_declared(rng):
    A, B = invertible_hermitian(5, rng), random_hermitian(5, rng)
    for p in (1.5, 2.0, 3.0, 4.7):
        r1, r2 = first_derivative(A, B, p), second_derivative(A, B, p)
        assert r1.within_tolerance and r1.tolerance == 1e-7
        assert r2.within_tolerance and r2.tolerance == 1e-5


def test_endpoint_p_rejected():
    with pytest.raises(DomainError):
        first_derivative(np.eye(2), np.eye(2), 1.0)
    with pytest.raises(DomainError):
        second_derivative(np.eye(2), np.eye(2), math.inf)


def test_bj_examples(rng):
    r = bj_orthogonal(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), 3)
    assert r.trace_value == 0 and r.verdict and r.min_probe["attained_at_zero"]
    A = random_hermitian(3, rng)
    A = A / schatten_norm(A, 2.5)
    r = bj_orthogonal(A, A, 2.5)
    assert r.trace_value == pytest.approx(1) and not r.verdict
    assert not r.min_probe["attained_at_zero"]
    for p in (1.5, 3.0):
        c = 2 ** (-1 / p)
        r = bj_orthogonal(c * np.diag([1.0, -1.0]), c * X, p)
        assert r.trace_value == pytest.approx(0, abs=1e-15) and r.verdict
        assert r.min_probe["attained_at_zero"]


def test_taylor_check(rng):
    A, B = random_hermitian(4, rng), random_hermitian(4, rng)
    A, B = A / schatten_norm(A, 2.5), B / schatten_norm(B, 2.5)
    assert taylor_check(A, B, 2.5).exponent >= 2.4
    zero = taylor_check(A, np.zeros((4, 4)), 2.5)
    assert np.all(zero.residuals <= 1e-14)


def test_taylor_check_commuting_scalar_remainder():
    a = np.array([0.5, 0.0, -0.3])
    b = np.array([0.4, 0.7, 0.2])
    p = 3.5
    res = taylor_check(np.diag(a), np.diag(b), p)
    # scalar oracle: only the zero node contributes a non-polynomial remainder
    t = res.t
    exact = np.sum(np.abs(a[:, None] + t * b[:, None]) ** p, axis=0)
    partial = 0.0
    for ai, bi in zip(a, b):
        if ai == 0:
            continue
        s = abs(ai)
        d1 = p * s ** (p - 1) * np.sign(ai) * bi
        d2 = p * (p - 1) * s ** (p - 2) * bi ** 2 / 2
        d3 = p * (p - 1) * (p - 2) * s ** (p - 3) * np.sign(ai) * bi ** 3 / 6
        partial = partial + s ** p + d1 * t + d2 * t ** 2 + d3 * t ** 3
    assert np.allclose(res.residuals, np.abs(exact - partial), rtol=1e-6, atol=1e-15)
    assert abs(res.exponent - 3.5) <= 0.1


def test_taylor_check_needs_p_above_two():
    with pytest.raises(DomainError):
        taylor_check(np.eye(2), np.eye(2), 1.8)
