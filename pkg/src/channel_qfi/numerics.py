"""Dense complex linear-algebra primitives used by every other module.

Conventions: matrices are numpy complex128 arrays; vectorization is
row-major, |A>> = sum_ij A_ij |i>|j>, so that <<A|B>> = Tr(A^dag B) and
vec(K A) = (K otimes I) vec(A).
"""

from __future__ import annotations

import numpy as np

from .errors import NotHermitian, NotPSD, ShapeError

TAU_HERM = 1e-9
TAU_PSD = 1e-9
TAU_RANK = 1e-9


def tau_null(scale: float = 0.0) -> float:
    """Support cutoff 1e-9 * (1 + scale), scale typically ||A||."""
    return 1e-9 * (1.0 + abs(scale))


def as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2:
        raise ShapeError(f"expected a matrix, got ndim={A.ndim}")
    return A


def herm_residual(A) -> float:
    """Largest entry of |A - A^dag|."""
    A = as_matrix(A)
    return float(np.max(np.abs(A - A.conj().T))) if A.size else 0.0


def check_hermitian(A, tol: float = TAU_HERM, name: str = "matrix") -> np.ndarray:
    A = as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise NotHermitian(f"{name} is not square: {A.shape}")
    res = herm_residual(A)
    if res > tol * (1.0 + float(np.max(np.abs(A)))):
        raise NotHermitian(f"{name} is not Hermitian (residual {res:.3e})")
    return 0.5 * (A + A.conj().T)


def hermitianize(A) -> np.ndarray:
    A = as_matrix(A)
    return 0.5 * (A + A.conj().T)


def herm_eig(A, tol: float = TAU_HERM):
    """Eigendecomposition of a Hermitian matrix.

    Returns (w, V) with w real ascending and V unitary columns so that
    V diag(w) V^dag reconstructs A. Raises NotHermitian when the input
    fails the Hermiticity tolerance.
    """
    A = check_hermitian(A, tol)
    w, V = np.linalg.eigh(A)
    return w, V


def operator_norm(A) -> float:
    """Largest singular value."""
    A = as_matrix(A)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def trace_norm(A) -> float:
    """Sum of singular values."""
    A = as_matrix(A)
    if A.size == 0:
        return 0.0
    return float(np.sum(np.linalg.svd(A, compute_uv=False)))


def sld_solve(A, B, tol_psd: float = TAU_PSD) -> np.ndarray:
    """Solve the symmetric-logarithmic-derivative equation B = (LA + AL)/2.

    A must be PSD. The solution is taken in A's eigenbasis,
    L_ij = 2 B_ij / (a_i + a_j), and set to zero whenever a_i + a_j falls
    at or below the support cutoff, which makes L the pseudo-solution
    reproducing B everywhere except the kernel-kernel block of A:
    (LA + AL)/2 = B - Q B Q with Q the kernel projector.
    """
    A = check_hermitian(A, name="A")
    B = check_hermitian(B, name="B")
    if A.shape != B.shape:
        raise ShapeError(f"shape mismatch {A.shape} vs {B.shape}")
    w, V = np.linalg.eigh(A)
    scale = float(w[-1]) if w.size else 0.0
    if w.size and float(w[0]) < -tol_psd * (1.0 + abs(scale)):
        raise NotPSD(f"matrix has eigenvalue {w[0]:.3e}")
    cutoff = tau_null(scale)
    Bt = V.conj().T @ B @ V
    denom = w[:, None] + w[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        Lt = np.where(denom > cutoff, 2.0 * Bt / denom, 0.0)
    return hermitianize(V @ Lt @ V.conj().T)


def vectorize(A) -> np.ndarray:
    """Row-major vectorization |A>> of a matrix."""
    return as_matrix(A).reshape(-1)


def devectorize(v, shape=None) -> np.ndarray:
    """Inverse of vectorize; defaults to a square shape."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    if shape is None:
        d = int(round(np.sqrt(v.size)))
        if d * d != v.size:
            raise ShapeError(f"vector of length {v.size} is not square")
        shape = (d, d)
    if shape[0] * shape[1] != v.size:
        raise ShapeError(f"cannot reshape length {v.size} to {shape}")
    return v.reshape(shape)


def unitary_exp(G, s: float = 1.0) -> np.ndarray:
    """exp(i s G) for Hermitian G, via eigendecomposition."""
    w, V = herm_eig(G)
    return (V * np.exp(1j * s * w)) @ V.conj().T


def pinv(A, tol: float = TAU_RANK) -> np.ndarray:
    """Moore-Penrose pseudoinverse with a relative singular-value cutoff."""
    A = as_matrix(A)
    return np.linalg.pinv(A, rcond=tol)


def psd_sqrt(A, tol_psd: float = TAU_PSD) -> np.ndarray:
    """Hermitian square root of a PSD matrix (negative noise clipped)."""
    w, V = herm_eig(A)
    scale = float(w[-1]) if w.size else 0.0
    if w.size and float(w[0]) < -tol_psd * (1.0 + abs(scale)):
        raise NotPSD(f"matrix has eigenvalue {w[0]:.3e}")
    return hermitianize((V * np.sqrt(np.clip(w, 0.0, None))) @ V.conj().T)


def gram_schmidt(vectors, tol: float = TAU_RANK):
    """Orthonormalize a list of vectors, dropping dependent ones.

    Two-pass classical Gram-Schmidt; returns the kept orthonormal vectors.
    """
    basis = []
    scale = max((float(np.linalg.norm(v)) for v in vectors), default=0.0)
    cut = tol * (1.0 + scale)
    for v in vectors:
        u = np.asarray(v, dtype=complex).reshape(-1).copy()
        for _ in range(2):
            for b in basis:
                u -= np.vdot(b, u) * b
        nrm = float(np.linalg.norm(u))
        if nrm > cut:
            basis.append(u / nrm)
    return basis


def gram_schmidt_complete(vectors, dim: int, tol: float = TAU_RANK) -> np.ndarray:
    """Orthonormal basis of C^dim whose first vectors span the input span.

    Dependent inputs are dropped at tolerance; the remainder is filled
    deterministically from standard basis vectors. Returns a dim x dim
    unitary whose columns are the basis.
    """
    basis = gram_schmidt(vectors, tol)
    k = 0
    while len(basis) < dim:
        if k >= dim:
            raise ShapeError("could not complete basis (inputs exceed dim?)")
        e = np.zeros(dim, dtype=complex)
        e[k] = 1.0
        u = e
        for _ in range(2):
            for b in basis:
                u = u - np.vdot(b, u) * b
        nrm = float(np.linalg.norm(u))
        if nrm > 0.5:  # standard vector far from current span
            basis.append(u / nrm)
        k += 1
    return np.column_stack(basis)


def herm_basis(d: int):
    """Orthonormal basis of the real space of d x d Hermitian matrices.

    Order: E_kk diagonals, then for i<j the symmetric pair
    (E_ij + E_ji)/sqrt(2) and (-i E_ij + i E_ji)/sqrt(2). Orthonormal
    under Tr(A B).
    """
    out = []
    for k in range(d):
        M = np.zeros((d, d), dtype=complex)
        M[k, k] = 1.0
        out.append(M)
    r2 = 1.0 / np.sqrt(2.0)
    for i in range(d):
        for j in range(i + 1, d):
            M = np.zeros((d, d), dtype=complex)
            M[i, j] = r2
            M[j, i] = r2
            out.append(M)
            M = np.zeros((d, d), dtype=complex)
            M[i, j] = -1j * r2
            M[j, i] = 1j * r2
            out.append(M)
    return out


def herm_coords(A, basis=None) -> np.ndarray:
    """Real coordinates of a Hermitian matrix in herm_basis order."""
    A = as_matrix(A)
    d = A.shape[0]
    if basis is None:
        basis = herm_basis(d)
    return np.array([np.real(np.trace(b @ A)) for b in basis])


def herm_from_coords(x, d: int, basis=None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if basis is None:
        basis = herm_basis(d)
    A = np.zeros((d, d), dtype=complex)
    for c, b in zip(x, basis):
        A += c * b
    return A


def purify(rho) -> np.ndarray:
    """Purification of a d-dim density matrix on C^d (x) C^d."""
    w, V = herm_eig(rho)
    d = rho.shape[0]
    psi = np.zeros(d * d, dtype=complex)
    for k in range(d):
        lam = max(float(w[k]), 0.0)
        if lam > 0.0:
            psi += np.sqrt(lam) * np.kron(V[:, k], _std_vec(d, k))
    n = float(np.linalg.norm(psi))
    if n == 0.0:
        raise NotPSD("cannot purify the zero matrix")
    return psi / n


def _std_vec(d: int, k: int) -> np.ndarray:
    e = np.zeros(d, dtype=complex)
    e[k] = 1.0
    return e
