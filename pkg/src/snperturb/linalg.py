"""Dense complex-matrix kernels: Hermitian eigendecomposition, SVD, polar sign.

The decompositions here are cyclic Jacobi methods written directly against
numpy arrays. They are accurate for the small pencils this package works
with (n up to a few hundred). Bulk grid sweeps, where thousands of tiny
spectra are needed at once, go through :func:`pencil_eigvalsh` and
:func:`singular_values`, which hand the whole stack to LAPACK.
"""
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError

KERNEL_TOL = 1e-10
HERMITIAN_TOL = 1e-12
DEFAULT_SEED = 42


def default_rng(seed=None):
    """Random generator seeded from ``SNPERTURB_SEED`` (default 42)."""
    if seed is None:
        seed = int(os.environ.get("SNPERTURB_SEED", DEFAULT_SEED))
    return np.random.default_rng(seed)


def as_matrix(M):
    """Return ``M`` as a finite complex 2-d array."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {M.shape}")
    if M.size == 0:
        raise ValueError("matrix has no entries")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def is_hermitian(M, tol=HERMITIAN_TOL):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    scale = 1.0 + np.max(np.abs(M))
    return np.max(np.abs(M - M.conj().T)) <= tol * scale


def as_hermitian(M, tol=HERMITIAN_TOL):
    """Validate that ``M`` is Hermitian and return the symmetrized copy (M + M*)/2."""
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"Hermitian matrix must be square, got shape {M.shape}")
    if not is_hermitian(M, tol):
        dev = np.max(np.abs(M - M.conj().T))
        raise ValueError(f"matrix is not Hermitian (max |M - M*| = {dev:.3e})")
    return 0.5 * (M + M.conj().T)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Real eigenvalues (descending) and a unitary matrix of eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self):
        return len(self.eigenvalues)

    def reconstruct(self):
        U = self.eigenvectors
        return (U * self.eigenvalues) @ U.conj().T

    def function(self, values):
        """U diag(values) U* for a vector of transformed eigenvalues."""
        U = self.eigenvectors
        return (U * np.asarray(values)) @ U.conj().T

    def to_eigenbasis(self, B):
        """Matrix entries of ``B`` in the eigenbasis, U* B U."""
        U = self.eigenvectors
        return U.conj().T @ B @ U

    def from_eigenbasis(self, Bt):
        U = self.eigenvectors
        return U @ Bt @ U.conj().T

    def spectral_radius(self):
        return float(np.max(np.abs(self.eigenvalues)))


def _rotation(a, b, g):
    """Unitary 2x2 J with J* [[a, g], [conj(g), b]] J diagonal (a, b real)."""
    r = abs(g)
    phase = g / r
    theta = (b - a) / (2.0 * r)
    if abs(theta) > 1e150:
        t = 0.5 / theta
    else:
        t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c
    # diag(1, conj(phase)) maps the block to a real symmetric one; then a plain rotation.
    return np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])


def _offdiag_norm(A):
    return np.linalg.norm(A - np.diag(np.diag(A)))


def hermitian_eig(M, tol=1e-13, max_sweeps=100, method="jacobi"):
    """Eigendecomposition of a Hermitian matrix.

    Parameters
    ----------
    M : array_like
        Hermitian matrix; validated and symmetrized.
    tol : float
        Sweeps stop once the off-diagonal Frobenius norm drops below
        ``tol * ||M||_F``.
    max_sweeps : int
        Cap on cyclic sweeps before :class:`ConvergenceError` is raised.
    method : {"jacobi", "lapack"}
        ``"lapack"`` delegates to ``numpy.linalg.eigh``; used only as a
        cross-check and for very large inputs.

    Returns
    -------
    SpectralDecomposition
        Eigenvalues sorted in descending order.
    """
    A = as_hermitian(M).copy()
    n = A.shape[0]
    if method == "lapack":
        w, V = np.linalg.eigh(A)
        order = np.argsort(-w, kind="stable")
        return SpectralDecomposition(w[order], V[:, order])
    if method != "jacobi":
        raise ValueError(f"unknown method {method!r}")

    V = np.eye(n, dtype=complex)
    threshold = tol * np.linalg.norm(A)
    for _ in range(max_sweeps):
        if _offdiag_norm(A) <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                g = A[p, q]
                if g == 0:
                    continue
                J = _rotation(A[p, p].real, A[q, q].real, g)
                idx = [p, q]
                A[:, idx] = A[:, idx] @ J
                A[idx, :] = J.conj().T @ A[idx, :]
                A[p, q] = A[q, p] = 0.0
                A[p, p] = A[p, p].real
                A[q, q] = A[q, q].real
                V[:, idx] = V[:, idx] @ J
    else:
        off = _offdiag_norm(A)
        if off > threshold:
            raise ConvergenceError(
                f"Jacobi eigensolver did not converge in {max_sweeps} sweeps "
                f"(off-diagonal residual {off:.3e})", residual=off)

    w = np.diag(A).real.copy()
    order = np.argsort(-w, kind="stable")
    return SpectralDecomposition(w[order], V[:, order])


def _complete_columns(U, filled):
    """Replace the columns of U not flagged in ``filled`` by an orthonormal completion."""
    m, k = U.shape
    basis = [U[:, j] for j in range(k) if filled[j]]
    out = U.copy()
    candidates = iter(np.eye(m, dtype=complex).T)
    for j in range(k):
        if filled[j]:
            continue
        for e in candidates:
            v = e.copy()
            for b in basis:
                v -= np.vdot(b, v) * b
            for b in basis:  # second pass for orthogonality
                v -= np.vdot(b, v) * b
            nv = np.linalg.norm(v)
            if nv > 1e-8:
                v /= nv
                out[:, j] = v
                basis.append(v)
                break
    return out


def svd(M, tol=1e-14, max_sweeps=100):
    """Thin SVD by one-sided Jacobi rotations.

    Returns ``(s, U, V)`` with ``s`` descending, ``U`` of shape (m, k), ``V``
    of shape (n, k), k = min(m, n), and ``M = U diag(s) V*``.
    """
    M = as_matrix(M)
    m, n = M.shape
    if m < n:
        s, U, V = svd(M.conj().T, tol=tol, max_sweeps=max_sweeps)
        return s, V, U

    W = M.copy()
    V = np.eye(n, dtype=complex)
    # columns below this squared norm are numerically zero; rotating them is noise
    floor = (np.finfo(float).eps * np.linalg.norm(M)) ** 2
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                a = np.vdot(W[:, p], W[:, p]).real
                b = np.vdot(W[:, q], W[:, q]).real
                g = np.vdot(W[:, p], W[:, q])
                if abs(g) <= tol * np.sqrt(a * b) or min(a, b) <= floor:
                    continue
                rotated = True
                J = _rotation(a, b, g)
                idx = [p, q]
                W[:, idx] = W[:, idx] @ J
                V[:, idx] = V[:, idx] @ J
        if not rotated:
            break
    else:
        G = W.conj().T @ W
        off = _offdiag_norm(G)
        if off > tol * max(np.linalg.norm(G), 1e-300):
            raise ConvergenceError(
                f"one-sided Jacobi SVD did not converge in {max_sweeps} sweeps "
                f"(column coupling {off:.3e})", residual=off)

    s = np.linalg.norm(W, axis=0)
    order = np.argsort(-s, kind="stable")
    s, W, V = s[order], W[:, order], V[:, order]
    cutoff = max(m, n) * np.finfo(float).eps * (s[0] if s[0] > 0 else 1.0)
    filled = s > cutoff
    U = np.zeros((m, n), dtype=complex)
    U[:, filled] = W[:, filled] / s[filled]
    if not np.all(filled):
        U = _complete_columns(U, filled)
    return s, U, V


def singular_values(M):
    """Singular values, descending (LAPACK)."""
    M = np.asarray(M, dtype=complex)
    if M.ndim == 2 and M.shape[0] == M.shape[1] and is_hermitian(M):
        return np.sort(np.abs(np.linalg.eigvalsh(M)))[::-1]
    return np.linalg.svd(M, compute_uv=False)


def pencil_eigvalsh(A, B, ts):
    """Eigenvalues (ascending) of A + tB for each t, as an array of shape (len(ts), n)."""
    ts = np.asarray(ts, dtype=float)
    stack = A[None, :, :] + ts[:, None, None] * B[None, :, :]
    return np.linalg.eigvalsh(stack)


def polar_sign(M, kernel_tol=KERNEL_TOL, spec=None):
    """Partial isometry of the polar decomposition of a Hermitian matrix.

    Eigenvalues with ``|d| <= kernel_tol`` are treated as kernel and mapped to 0.
    """
    if kernel_tol < 0:
        raise ValueError("kernel_tol must be nonnegative")
    spec = spec or hermitian_eig(M)
    d = spec.eigenvalues
    sgn = np.where(np.abs(d) <= kernel_tol, 0.0, np.sign(d))
    return spec.function(sgn)


def abs_power(M, power, kernel_tol=KERNEL_TOL, spec=None):
    """|M|^power for Hermitian M, zero on the numerical kernel."""
    spec = spec or hermitian_eig(M)
    d = np.abs(spec.eigenvalues)
    vals = np.where(d <= kernel_tol, 0.0, d ** power) if power > 0 else d ** power
    return spec.function(vals)


def random_hermitian(n, rng, scale=1.0):
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * 0.5 * (X + X.conj().T)


def random_unitary(n, rng):
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(X)
    return Q * (np.diag(R) / np.abs(np.diag(R)))
