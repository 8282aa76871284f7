import numpy as np
import pytest

from snperturb.linalg import default_rng, random_hermitian

ACCEPTANCE_LINES = []


def record(criterion, passed, detail):
    ACCEPTANCE_LINES.append(f"criterion {criterion:>2}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return default_rng()


def invertible_hermitian(n, rng, min_gap=0.1):
    while True:
        A = random_hermitian(n, rng)
        if np.min(np.abs(np.linalg.eigvalsh(A))) >= min_gap:
            return A


def normalized_diagonal_pair(n, p, rng):
    """Real diagonal A and Hermitian B, both of Schatten norm 1."""
    from snperturb.schatten import schatten_norm
    A = np.diag(rng.standard_normal(n)).astype(complex)
    B = random_hermitian(n, rng)
    return A / schatten_norm(A, p), B / schatten_norm(B, p)
