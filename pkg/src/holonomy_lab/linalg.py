"""Dense complex linear algebra for the small (dim <= 32) matrices used here.

Matrices are plain ``numpy`` complex arrays. The single-matrix eigensolver is
a cyclic Jacobi iteration; the batched exponential used inside the time
steppers goes through LAPACK (``numpy.linalg.eigh``) for speed and is
cross-checked against the Jacobi path in the test-suite.
"""
from __future__ import annotations

import numpy as np

from .errors import InvalidInputError, NumericalError

MAX_DIM = 32
HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise InvalidInputError(f"expected a 2-d matrix, got shape {m.shape}")
    return m


def matmul(a, b) -> np.ndarray:
    """Complex matrix product with an explicit dimension check."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise InvalidInputError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def dagger(a) -> np.ndarray:
    return np.conj(np.swapaxes(np.asarray(a), -1, -2))


def hermiticity_error(h) -> float:
    h = np.asarray(h)
    return float(np.max(np.abs(h - dagger(h)), initial=0.0))


def unitarity_error(u) -> float:
    u = np.asarray(u)
    eye = np.eye(u.shape[-1])
    return float(np.max(np.abs(dagger(u) @ u - eye), initial=0.0))


def is_hermitian(h, tol: float = HERMITIAN_TOL) -> bool:
    # relative to the matrix scale: Hamiltonians in rad/s reach 1e10
    scale = max(1.0, float(np.max(np.abs(h), initial=0.0)))
    return hermiticity_error(h) <= tol * scale


def is_unitary(u, tol: float = UNITARY_TOL) -> bool:
    return unitarity_error(u) <= tol


def _require_hermitian(h: np.ndarray) -> None:
    if h.shape[0] != h.shape[1]:
        raise InvalidInputError(f"matrix must be square, got {h.shape}")
    if h.shape[0] > MAX_DIM:
        raise InvalidInputError(f"dimension {h.shape[0]} exceeds {MAX_DIM}")
    if not is_hermitian(h):
        raise InvalidInputError(
            f"matrix is not Hermitian (max|H - H^dag| = {hermiticity_error(h):.3e})")


def jacobi_eigh(h, tol: float = 1e-15, max_sweeps: int = 100):
    """Cyclic Jacobi diagonalisation of a complex Hermitian matrix.

    Each (p, q) rotation first strips the phase of ``h[p, q]`` and then
    applies a real Givens rotation, so the iteration is the textbook real
    algorithm in disguise.

    Returns ``(eigenvalues, eigenvectors)`` with ascending eigenvalues and
    eigenvectors as columns.
    """
    a = as_matrix(h).copy()
    _require_hermitian(a)
    n = a.shape[0]
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), np.finfo(float).tiny)

    off_mask = ~np.eye(n, dtype=bool)

    def off_norm(m):
        return float(np.linalg.norm(m[off_mask]))

    for _ in range(max_sweeps):
        if off_norm(a) <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                phase = apq / mag
                theta = 0.5 * np.arctan2(2.0 * mag, (a[p, p] - a[q, q]).real)
                c, s = np.cos(theta), np.sin(theta)
                # columns p, q of J = diag(1, conj(phase)) @ [[c, -s], [s, c]]
                jp = np.array([c, s * np.conj(phase)])
                jq = np.array([-s, c * np.conj(phase)])
                cols = a[:, [p, q]]
                new_p = cols @ jp
                new_q = cols @ jq
                a[:, p], a[:, q] = new_p, new_q
                rows = a[[p, q], :]
                new_rp = np.conj(jp) @ rows
                new_rq = np.conj(jq) @ rows
                a[p, :], a[q, :] = new_rp, new_rq
                a[p, q] = a[q, p] = 0.0
                vcols = v[:, [p, q]]
                v[:, p], v[:, q] = vcols @ jp, vcols @ jq
    residual = off_norm(a) / scale
    if residual > max(tol, 1e-13) * 10:
        raise NumericalError(
            f"Jacobi iteration did not converge in {max_sweeps} sweeps", residual=residual)
    w = np.diag(a).real
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def eig_hermitian(h):
    """Ascending eigenvalues and unitary eigenvector matrix of ``h``."""
    return jacobi_eigh(h)


def expm_hermitian(h, scale: float) -> np.ndarray:
    """Return ``exp(i * scale * h)`` for Hermitian ``h``."""
    w, v = eig_hermitian(h)
    return (v * np.exp(1j * scale * w)) @ v.conj().T


def _eigh_each(hs):
    w = np.empty(hs.shape[:-1])
    v = np.empty_like(hs)
    for i, h in enumerate(hs):
        try:
            w[i], v[i] = np.linalg.eigh(h)
        except np.linalg.LinAlgError:
            w[i], v[i] = jacobi_eigh(h)
    return w, v


def expm_hermitian_batch(hs, scale) -> np.ndarray:
    """Vectorised ``exp(i * scale * h)`` over a stack ``hs`` of shape (n, d, d).

    ``scale`` may be a scalar or an array broadcastable to ``(n,)``.
    """
    hs = np.asarray(hs, dtype=complex)
    hs = 0.5 * (hs + dagger(hs))
    try:
        w, v = np.linalg.eigh(hs)
    except np.linalg.LinAlgError:
        # LAPACK's divide-and-conquer driver occasionally gives up on a
        # perfectly ordinary matrix; redo the stack one by one
        w, v = _eigh_each(hs)
    scale = np.asarray(scale, dtype=float)
    if scale.ndim:
        scale = scale[:, None]
    phases = np.exp(1j * scale * w)
    return (v * phases[..., None, :]) @ dagger(v)
