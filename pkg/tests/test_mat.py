import numpy as np
import pytest

from brownmeasure import mat


def test_invert_examples(rng):
    assert np.allclose(mat.invert(mat.identity(2)), np.eye(2))
    assert np.allclose(mat.invert(np.diag([2j, 2j])), np.diag([-0.5j, -0.5j]))
    m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)) + 6 * np.eye(6)
    inv = mat.invert(m)
    assert np.linalg.norm(m @ inv - np.eye(6)) <= 1e-10 * 6
    assert np.linalg.norm(mat.invert(inv) - m) <= 1e-8 * np.linalg.norm(m)


def test_invert_singular():
    with pytest.raises(mat.SingularMatrix):
        mat.invert(np.array([[1, 2], [2, 4]], dtype=complex))
    with pytest.raises(mat.SingularMatrix):
        mat.invert(np.zeros((3, 3)))


def test_as_matrix_rejects_non_square():
    with pytest.raises(ValueError):
        mat.as_matrix(np.zeros((2, 3)))


def test_imag_part(rng):
    assert np.allclose(mat.imag_part(np.diag([1j, 1j])), np.eye(2))
    h = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = h + h.conj().T
    assert np.allclose(mat.imag_part(h), 0)
    eps, lam = 0.3, 0.7 - 0.2j
    lam_eps = np.array([[1j * eps, lam], [np.conj(lam), 1j * eps]])
    assert np.allclose(mat.imag_part(lam_eps), eps * np.eye(2))
    m = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    assert np.allclose(mat.imag_part(m) + mat.imag_part(m.conj().T), 0)
    assert mat.is_hermitian(mat.imag_part(m))


def test_min_eig_hermitian():
    assert mat.min_eig_hermitian(np.eye(2)) == pytest.approx(1)
    assert mat.min_eig_hermitian(np.diag([3.0, -5.0])) == pytest.approx(-5)
    assert mat.min_eig_hermitian(np.array([[2.0, 1.0], [1.0, 2.0]])) == pytest.approx(1, abs=1e-12)
    assert mat.min_eig_hermitian(-2.5 * np.eye(4)) == pytest.approx(-2.5, abs=1e-12)
    with pytest.raises(mat.NotHermitian):
        mat.min_eig_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))


@pytest.mark.parametrize("m", [2, 3, 6])
def test_batch_inv_matches_numpy(rng, m):
    a = rng.normal(size=(7, m, m)) + 1j * rng.normal(size=(7, m, m)) + 3 * np.eye(m)
    assert np.allclose(mat.batch_inv(a), np.linalg.inv(a))
