import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from core.errors import DimensionMismatch, NonHermitian, NonSquare, Singular
from services import numerics


def _random_hermitian(n, rng):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (z + z.conj().T) / 2


@pytest.mark.parametrize("n", [1, 2, 5, 9])
def test_jacobi_matches_lapack(n, rng):
    h = _random_hermitian(n, rng)
    jacobi = numerics.eigen_hermitian(h, method="jacobi")
    lapack = numerics.eigen_hermitian(h, method="lapack")
    assert_allclose(jacobi.eigenvalues, lapack.eigenvalues, atol=1e-10)
    assert_allclose(jacobi.reconstruct(), h, atol=1e-10)
    v = jacobi.eigenvectors
    assert_allclose(v.conj().T @ v, np.eye(n), atol=1e-10)


def test_eigenvalues_descending(rng):
    values = numerics.eigen_hermitian(_random_hermitian(6, rng)).eigenvalues
    assert np.all(np.diff(values) <= 0)


def test_eigen_rejects_bad_input():
    with pytest.raises(NonSquare):
        numerics.eigen_hermitian(np.zeros((2, 3)))
    with pytest.raises(NonHermitian):
        numerics.eigen_hermitian(np.array([[0, 1], [0, 0]]))


def test_partial_trace_of_product(rng):
    a = numerics.random_density_matrix(2, rng)
    b = numerics.random_density_matrix(3, rng)
    ab = numerics.kron(a, b)
    assert_allclose(numerics.partial_trace(ab, 2, 3, keep="A"), a, atol=1e-12)
    assert_allclose(numerics.partial_trace(ab, 2, 3, keep="B"), b, atol=1e-12)
    with pytest.raises(DimensionMismatch):
        numerics.partial_trace(ab, 3, 3)


def test_singular_values_match_svd(rng):
    m = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
    assert_allclose(numerics.singular_values(m), np.linalg.svd(m, compute_uv=False), atol=1e-12)


def test_numerical_rank(rng):
    u = rng.standard_normal((5, 2))
    v = rng.standard_normal((2, 5))
    assert numerics.numerical_rank(u @ v) == 2
    assert numerics.numerical_rank(np.zeros((3, 3))) == 0


def test_inverse(rng):
    m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    assert_allclose(numerics.inverse(m) @ m, np.eye(4), atol=1e-10)
    with pytest.raises(Singular):
        numerics.inverse(np.array([[1.0, 2.0], [2.0, 4.0]]))


@pytest.mark.parametrize("n", [1, 3, 6, 12])
def test_eig_general_matches_numpy(n, rng):
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    ours = np.sort_complex(numerics.eig_general(m))
    reference = np.sort_complex(np.linalg.eigvals(m))
    assert_allclose(ours, reference, atol=1e-8)


def test_eig_general_size_limit():
    with pytest.raises(DimensionMismatch):
        numerics.eig_general(np.eye(13))


def test_haar_unitary_is_unitary():
    u = numerics.sample("haar_unitary", 4, 3)
    assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-12)


def test_samples_are_reproducible():
    assert_allclose(numerics.sample("pure_state", 5, 11), numerics.sample("pure_state", 5, 11))


def test_random_density_matrix_is_a_state(rng):
    rho = numerics.random_density_matrix(4, rng)
    assert numerics.is_hermitian(rho)
    assert math.isclose(np.trace(rho).real, 1.0, abs_tol=1e-12)
    assert np.linalg.eigvalsh(rho)[0] > -1e-12


def test_random_projective_povm_complete(rng):
    povm = numerics.random_projective_povm(3, rng)
    assert_allclose(sum(povm), np.eye(3), atol=1e-12)
    for p in povm:
        assert_allclose(p @ p, p, atol=1e-12)


def test_sample_rejects_unknown_kind():
    with pytest.raises(ValueError):
        numerics.sample("ginibre", 2, 0)
    with pytest.raises(DimensionMismatch):
        numerics.sample("pure_state", 0, 0)


def test_entropies():
    assert numerics.entropy_of_distribution([0.25] * 4) == pytest.approx(2.0)
    assert numerics.entropy_of_distribution([1.0, 0.0]) == 0.0
    psi = numerics.random_pure_state(3, 5)
    assert numerics.von_neumann_entropy(np.outer(psi, psi.conj())) == pytest.approx(0.0, abs=1e-9)
    assert numerics.von_neumann_entropy(np.eye(9) / 9) == pytest.approx(math.log2(9))


def test_purity_and_inv_sqrt(rng):
    rho = numerics.random_density_matrix(3, rng)
    assert numerics.purity(rho) == pytest.approx(np.sum(np.linalg.eigvalsh(rho) ** 2))
    root = numerics.matrix_inv_sqrt(rho)
    assert_allclose(root @ rho @ root, np.eye(3), atol=1e-8)
