"""Dense complex-matrix kernel: products, tensor products, partial traces,
Hermitian eigendecomposition and Hermitian-generated matrix exponentials.

All operations are pure functions on immutable numpy arrays and are designed
and tested for dimensions up to 64 (system x probe scale).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, ValidationError

# Frobenius tolerance for hermiticity validation gates.
HERMITICITY_TOL = 1e-10


def as_matrix(x) -> np.ndarray:
    """Coerce input to a 2-D complex128 array."""
    a = np.asarray(x, dtype=complex)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got ndim={a.ndim}")
    return a


def dagger(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.conj(a.T)


def frob(a: np.ndarray) -> float:
    """Frobenius norm."""
    return float(np.linalg.norm(a))


def is_hermitian(a: np.ndarray, tol: float = HERMITICITY_TOL) -> bool:
    a = as_matrix(a)
    return a.shape[0] == a.shape[1] and frob(a - dagger(a)) <= tol


def require_hermitian(a: np.ndarray, tol: float = HERMITICITY_TOL, what: str = "matrix") -> np.ndarray:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"{what} must be square, got {a.shape}")
    if frob(a - dagger(a)) > tol:
        raise ValidationError(f"{what} is not Hermitian within {tol:g} (Frobenius)")
    return a


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product a @ b with an explicit shape gate."""
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product, a-index major / b-index minor block order."""
    return np.kron(as_matrix(a), as_matrix(b))


def partial_trace(x: np.ndarray, dims: tuple[int, int], keep: str) -> np.ndarray:
    """Trace out one tensor factor of a (dA*dB) x (dA*dB) matrix.

    ``keep`` selects the surviving subsystem: ``"A"`` (first factor) or
    ``"B"`` (second factor).
    """
    x = as_matrix(x)
    da, db = dims
    if x.shape != (da * db, da * db):
        raise ShapeError(f"expected shape {(da * db, da * db)}, got {x.shape}")
    r = x.reshape(da, db, da, db)
    if keep == "A":
        return np.trace(r, axis1=1, axis2=3)
    if keep == "B":
        return np.trace(r, axis1=0, axis2=2)
    raise ValidationError(f"keep must be 'A' or 'B', got {keep!r}")


@dataclass(frozen=True)
class HermitianEigen:
    """Spectral decomposition of a Hermitian matrix.

    ``eigenvalues`` are real and ascending; ``eigenvectors`` holds the
    corresponding orthonormal eigenvectors as columns.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dagger(v)


def herm_eigen(x: np.ndarray, tol: float = HERMITICITY_TOL) -> HermitianEigen:
    """Eigendecomposition of a Hermitian matrix (validated within ``tol``)."""
    x = require_hermitian(x, tol)
    w, v = np.linalg.eigh(x)
    return HermitianEigen(eigenvalues=w, eigenvectors=v)


def herm_expm(h: np.ndarray, scale: complex = 1.0) -> np.ndarray:
    """exp(scale * h) for Hermitian h, via eigendecomposition.

    For ``scale = -1j * t`` with real t the result is unitary.
    """
    eig = herm_eigen(h)
    v = eig.eigenvectors
    return (v * np.exp(scale * eig.eigenvalues)) @ dagger(v)
