import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from snperturb.errors import ConvergenceError
from snperturb.linalg import (abs_power, as_hermitian, hermitian_eig, polar_sign,
                              random_hermitian, random_unitary, singular_values, svd)


def test_eig_diagonal_sorted():
    spec = hermitian_eig(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(spec.eigenvalues, [3, 2, 1])
    assert np.allclose(np.abs(spec.eigenvectors), np.eye(3)[:, [0, 2, 1]])


def test_eig_pauli_x():
    spec = hermitian_eig([[0, 1], [1, 0]])
    assert np.allclose(spec.eigenvalues, [1, -1])
    v = spec.eigenvectors
    assert np.isclose(abs(np.vdot(v[:, 0], [1, 1])) / np.sqrt(2), 1)
    assert np.isclose(abs(np.vdot(v[:, 1], [1, -1])) / np.sqrt(2), 1)


def test_eig_random_reconstruction(rng):
    M = random_hermitian(8, rng)
    spec = hermitian_eig(M)
    assert np.max(np.abs(spec.reconstruct() - M)) <= 1e-10 * (1 + np.max(np.abs(M)))
    U = spec.eigenvectors
    assert np.max(np.abs(U.conj().T @ U - np.eye(8))) <= 1e-10
    assert np.allclose(spec.eigenvalues, np.sort(np.linalg.eigvalsh(M))[::-1], atol=1e-12)


def test_eig_iteration_cap_reports_residual(rng):
    with pytest.raises(ConvergenceError) as info:
        hermitian_eig(random_hermitian(6, rng), max_sweeps=1)
    assert info.value.residual > 0


def test_lapack_cross_check(rng):
    M = random_hermitian(7, rng)
    a = hermitian_eig(M).eigenvalues
    b = hermitian_eig(M, method="lapack").eigenvalues
    assert np.allclose(a, b, atol=1e-12)


def test_non_hermitian_rejected():
    with pytest.raises(ValueError):
        as_hermitian([[1, 2], [0, 1]])
    with pytest.raises(ValueError):
        as_hermitian([[np.nan, 0], [0, 1]])


def test_svd_rank_one():
    s, U, V = svd([[3, 4], [0, 0]])
    assert np.allclose(s, [5, 0])


def test_svd_identity():
    s, _, _ = svd(np.eye(3))
    assert np.allclose(s, 1)


def test_svd_rectangular(rng):
    M = rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6))
    s, U, V = svd(M)
    assert np.max(np.abs((U * s) @ V.conj().T - M)) <= 1e-10 * (1 + np.max(np.abs(M)))
    # oracle: eigenvalues of M M*
    oracle = np.sqrt(np.sort(np.linalg.eigvalsh(M @ M.conj().T))[::-1])
    assert np.allclose(s, oracle, atol=1e-10)
    assert np.all(np.diff(s) <= 0)


def test_polar_sign_examples():
    assert np.allclose(polar_sign(np.diag([2.0, -3.0, 0.0]), 1e-10), np.diag([1, -1, 0]))
    rng = np.random.default_rng(3)
    X = rng.standard_normal((4, 4))
    assert np.allclose(polar_sign(X @ X.T + np.eye(4)), np.eye(4), atol=1e-12)
    assert np.allclose(polar_sign(np.diag([1e-14, 1.0]), 1e-10), np.diag([0, 1]))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 7), st.integers(0, 2 ** 32 - 1))
def test_polar_sign_times_abs(n, seed):
    rng = np.random.default_rng(seed)
    M = random_hermitian(n, rng)
    if np.min(np.abs(np.linalg.eigvalsh(M))) < 1e-8:
        return
    S = polar_sign(M, kernel_tol=0.0)
    assert np.max(np.abs(S @ abs_power(M, 1.0, kernel_tol=0.0) - M)) <= 1e-9
    assert np.allclose(np.sort(np.abs(np.linalg.eigvalsh(S))), 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2 ** 32 - 1))
def test_svd_of_hermitian_is_abs_spectrum(n, seed):
    M = random_hermitian(n, np.random.default_rng(seed))
    s, _, _ = svd(M)
    assert np.allclose(s, np.sort(np.abs(np.linalg.eigvalsh(M)))[::-1], atol=1e-9)
    assert np.allclose(singular_values(M), s, atol=1e-9)


def test_random_unitary(rng):
    U = random_unitary(5, rng)
    assert np.allclose(U.conj().T @ U, np.eye(5), atol=1e-12)
