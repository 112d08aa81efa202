"""Small dense complex matrix kernel.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  The functions
here add the checks the rest of the package relies on (singularity
threshold, hermiticity) on top of LAPACK.
"""

import warnings

import numpy as np

__all__ = [
    "SingularMatrix",
    "NotHermitian",
    "as_matrix",
    "identity",
    "invert",
    "imag_part",
    "is_hermitian",
    "min_eig_hermitian",
    "batch_inv",
]

HERMITIAN_TOL = 1e-12
PIVOT_TOL = 1e-14


class SingularMatrix(ArithmeticError):
    pass


class NotHermitian(ValueError):
    pass


def as_matrix(m):
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    return a


def identity(n):
    return np.eye(n, dtype=complex)


def invert(m):
    """
    Inverse of a square complex matrix by partially pivoted LU.

    Raises
    ------
    SingularMatrix
        If a pivot falls below ``1e-14 * ||m||_inf``.
    """
    from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

    a = as_matrix(m)
    scale = np.abs(a).sum(axis=1).max()
    if scale == 0.0:
        raise SingularMatrix("zero matrix")
    with warnings.catch_warnings():
        # exact zero pivots are reported below as SingularMatrix
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(a, check_finite=True)
    pivots = np.abs(np.diag(lu))
    if pivots.min() <= PIVOT_TOL * scale:
        raise SingularMatrix(
            f"pivot {pivots.min():.3e} below threshold {PIVOT_TOL * scale:.3e}")
    return lu_solve((lu, piv), np.eye(a.shape[0], dtype=complex))


def imag_part(m):
    """Hermitian imaginary part ``(m - m^*) / 2i``."""
    a = np.asarray(m, dtype=complex)
    return (a - np.conj(np.swapaxes(a, -1, -2))) / 2j


def is_hermitian(m, tol=HERMITIAN_TOL):
    a = np.asarray(m, dtype=complex)
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    return bool(np.abs(a - a.conj().T).max(initial=0.0) <= tol * scale)


def min_eig_hermitian(m, tol=HERMITIAN_TOL):
    """Smallest eigenvalue of a hermitian matrix."""
    a = as_matrix(m)
    if not is_hermitian(a, tol):
        raise NotHermitian("matrix is not hermitian within tolerance")
    a = 0.5 * (a + a.conj().T)
    return float(np.linalg.eigvalsh(a)[0])


def batch_inv(a):
    """
    Invert a stack of square matrices along the last two axes.

    2x2 stacks use the adjugate formula, which is several times faster than
    the generic LAPACK path for the sizes met in quadrature loops.
    """
    a = np.asarray(a)
    if a.shape[-1] == 2:
        p, q = a[..., 0, 0], a[..., 0, 1]
        r, s = a[..., 1, 0], a[..., 1, 1]
        det = p * s - q * r
        out = np.empty_like(a)
        out[..., 0, 0] = s / det
        out[..., 0, 1] = -q / det
        out[..., 1, 0] = -r / det
        out[..., 1, 1] = p / det
        return out
    return np.linalg.inv(a)
