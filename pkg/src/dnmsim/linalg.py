"""Dense complex linear algebra helpers.

States and operators are plain ``numpy.ndarray`` matrices (complex128,
C-order).  These wrappers add the shape/Hermiticity validation the rest of
the package relies on; the heavy lifting is delegated to numpy/LAPACK.
"""
from __future__ import annotations

import numpy as np

from .errors import DimensionMismatchError, NonHermitianError

__all__ = [
    "as_complex_matrix",
    "matmul",
    "kron",
    "hermitian_eigenvalues",
    "expectation",
    "dag",
]

#: Largest asymmetry ``max|M - M^dag|`` tolerated by hermitian_eigenvalues.
HERMITICITY_TOL = 1e-10


def as_complex_matrix(m) -> np.ndarray:
    """Coerce to a square complex128 matrix, validating the shape."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(
            f"expected a square matrix, got shape {a.shape}"
        )
    return a


def dag(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.conj(m.T)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit dimension check.

    Raises
    ------
    DimensionMismatchError
        If the inner dimensions differ (the error names both shapes).
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionMismatchError(
            f"cannot multiply shapes {a.shape} x {b.shape}"
        )
    return a @ b


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker (tensor) product of two matrices."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionMismatchError(
            f"kron expects two matrices, got shapes {a.shape}, {b.shape}"
        )
    return np.kron(a, b)


def hermitian_eigenvalues(m: np.ndarray, tol: float = HERMITICITY_TOL) -> np.ndarray:
    """Real eigenvalues of a Hermitian matrix, ascending.

    The input is symmetrized as ``(M + M^dag)/2`` before the solve.  If the
    asymmetry ``max|M - M^dag|`` exceeds ``tol`` the matrix is rejected
    instead of silently symmetrized.
    """
    m = as_complex_matrix(m)
    asym = np.max(np.abs(m - dag(m))) if m.size else 0.0
    if asym > tol:
        raise NonHermitianError(
            f"matrix is not Hermitian: max|M - M^dag| = {asym:.3e} > {tol:.1e}"
        )
    return np.linalg.eigvalsh(0.5 * (m + dag(m)))


def expectation(operator: np.ndarray, rho: np.ndarray) -> complex:
    """``Tr[operator @ rho]`` with a dimension check.

    Returned as a complex number; callers that expect a real observable
    (Hermitian operator, Hermitian state) should take ``.real`` after
    checking the imaginary part is negligible.
    """
    operator = np.asarray(operator)
    rho = np.asarray(rho)
    if operator.shape != rho.shape or operator.ndim != 2:
        raise DimensionMismatchError(
            f"operator/state shape mismatch: {operator.shape} vs {rho.shape}"
        )
    # Tr[A B] without forming the product: sum_ij A_ij B_ji
    return complex(np.sum(operator * rho.T))
