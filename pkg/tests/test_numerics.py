import numpy as np
import pytest

from channel_qfi import numerics as nm
from channel_qfi.errors import NotHermitian, NotPSD, ShapeError

from conftest import random_complex, random_herm


def test_hermitianize_and_residual(rng):
    A = random_complex(rng, (4, 4))
    H = nm.hermitianize(A)
    assert nm.herm_residual(H) < 1e-15
    assert nm.herm_residual(A) > 0.1


def test_check_hermitian_rejects(rng):
    A = random_complex(rng, (3, 3))
    with pytest.raises(NotHermitian):
        nm.check_hermitian(A)
    with pytest.raises(NotHermitian):
        nm.check_hermitian(random_complex(rng, (2, 3)))


def test_herm_eig_reconstructs(rng):
    H = random_herm(rng, 5)
    w, V = nm.herm_eig(H)
    assert np.all(np.diff(w) >= 0)
    assert np.allclose((V * w) @ V.conj().T, H, atol=1e-12)


def test_vectorize_row_major():
    A = np.array([[1, 2], [3, 4]], dtype=complex)
    v = nm.vectorize(A)
    assert np.array_equal(v, np.array([1, 2, 3, 4], dtype=complex))
    assert np.array_equal(nm.devectorize(v), A)
    # <<A|B>> = Tr(A^dag B)
    B = np.array([[0, 1j], [5, 1]], dtype=complex)
    assert np.isclose(np.vdot(v, nm.vectorize(B)), np.trace(A.conj().T @ B))


def test_vectorize_kron_identity(rng):
    # vec(K A) = (K (x) I) vec(A) in the row-major convention
    K = random_complex(rng, (3, 3))
    A = random_complex(rng, (3, 3))
    lhs = nm.vectorize(K @ A)
    rhs = np.kron(K, np.eye(3)) @ nm.vectorize(A)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_devectorize_shape_errors():
    with pytest.raises(ShapeError):
        nm.devectorize(np.arange(5, dtype=complex))
    with pytest.raises(ShapeError):
        nm.devectorize(np.arange(6, dtype=complex), (2, 2))


def test_sld_solve_full_rank(rng):
    A = random_herm(rng, 4)
    A = A @ A + 0.1 * np.eye(4)  # positive definite
    B = random_herm(rng, 4)
    L = nm.sld_solve(A, B)
    assert np.allclose(0.5 * (L @ A + A @ L), B, atol=1e-10)


def test_sld_solve_kernel_block_dropped(rng):
    # rank-deficient A: the pseudo-solution reproduces B except on the
    # kernel-kernel block (pairs with a_i + a_j = 0)
    A = np.diag([0.7, 0.3, 0.0]).astype(complex)
    B = random_herm(rng, 3)
    L = nm.sld_solve(A, B)
    target = B.copy()
    target[2, 2] = 0.0
    assert np.allclose(0.5 * (L @ A + A @ L), target, atol=1e-10)


def test_sld_solve_rejects_indefinite(rng):
    with pytest.raises(NotPSD):
        nm.sld_solve(np.diag([1.0, -0.5]).astype(complex), random_herm(rng, 2))


def test_unitary_exp_matches_series(rng):
    G = random_herm(rng, 4)
    s = 0.37
    U = nm.unitary_exp(G, s)
    assert np.allclose(U @ U.conj().T, np.eye(4), atol=1e-12)
    # series oracle
    T = np.eye(4, dtype=complex)
    term = np.eye(4, dtype=complex)
    for k in range(1, 30):
        term = term @ (1j * s * G) / k
        T += term
    assert np.allclose(U, T, atol=1e-12)


def test_psd_sqrt(rng):
    A = random_herm(rng, 4)
    A = A @ A
    S = nm.psd_sqrt(A)
    assert np.allclose(S @ S, A, atol=1e-10)
    with pytest.raises(NotPSD):
        nm.psd_sqrt(np.diag([1.0, -1.0]).astype(complex))


def test_gram_schmidt_drops_dependent(rng):
    v1 = random_complex(rng, (4,))
    v2 = random_complex(rng, (4,))
    basis = nm.gram_schmidt([v1, 2.0 * v1, v2, v1 + v2])
    assert len(basis) == 2
    G = np.array([[np.vdot(a, b) for b in basis] for a in basis])
    assert np.allclose(G, np.eye(2), atol=1e-12)


def test_gram_schmidt_complete_is_unitary(rng):
    vs = [random_complex(rng, (5,)) for _ in range(2)]
    U = nm.gram_schmidt_complete(vs, 5)
    assert U.shape == (5, 5)
    assert np.allclose(U.conj().T @ U, np.eye(5), atol=1e-10)
    # first columns span the inputs
    proj = U[:, :2] @ U[:, :2].conj().T
    for v in vs:
        assert np.allclose(proj @ v, v, atol=1e-10)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_herm_basis_orthonormal(d):
    basis = nm.herm_basis(d)
    assert len(basis) == d * d
    for i, A in enumerate(basis):
        assert nm.herm_residual(A) < 1e-15
        for j, B in enumerate(basis):
            ip = np.trace(A @ B).real
            assert abs(ip - (1.0 if i == j else 0.0)) < 1e-12


def test_herm_coords_roundtrip(rng):
    H = random_herm(rng, 3)
    x = nm.herm_coords(H)
    assert np.allclose(nm.herm_from_coords(x, 3), H, atol=1e-12)


def test_purify_reduces_back(rng):
    rho = random_herm(rng, 3)
    rho = rho @ rho
    rho /= np.trace(rho).real
    psi = nm.purify(rho)
    full = np.outer(psi, psi.conj()).reshape(3, 3, 3, 3)
    red = np.trace(full, axis1=1, axis2=3)
    assert np.allclose(red, rho, atol=1e-10)


def test_norms(rng):
    A = np.diag([3.0, -4.0]).astype(complex)
    assert nm.operator_norm(A) == pytest.approx(4.0)
    assert nm.trace_norm(A) == pytest.approx(7.0)
