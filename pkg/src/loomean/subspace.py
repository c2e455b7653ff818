"""Orthonormal bases, projectors, and distances between subspaces."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SubspaceEstimate",
    "principal_directions",
    "projector_from_basis",
    "subspace_error",
    "subspace_from_vectors",
]

_CONSTRUCT_TOL = 1e-10


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # deterministic orientation: the largest-magnitude coordinate of each
    # column is made positive (first index wins ties)
    out = vectors.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        lead = np.argmax(np.abs(col))
        if col[lead] < 0.0:
            out[:, k] = -col
    return out


def projector_from_basis(basis: np.ndarray) -> np.ndarray:
    return basis @ basis.T


def principal_directions(moment: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Descending eigenvalues of a symmetric matrix and its top-p
    eigenvectors with the deterministic sign convention."""
    moment = np.asarray(moment, dtype=float)
    if moment.ndim != 2 or moment.shape[0] != moment.shape[1]:
        raise ValueError("moment matrix must be square")
    d = moment.shape[0]
    if not 1 <= p <= d:
        raise ValueError(f"p must be between 1 and {d}")
    values, vectors = np.linalg.eigh((moment + moment.T) / 2.0)
    values = values[::-1]
    vectors = vectors[:, ::-1]
    return values, _fix_signs(vectors[:, :p])


@dataclass(frozen=True)
class SubspaceEstimate:
    """An estimated index space: orthonormal basis, its projector, and the
    full spectrum (descending) of the moment matrix behind it."""

    basis: np.ndarray
    projector: np.ndarray
    eigenvalues: np.ndarray

    def __post_init__(self) -> None:
        basis = np.asarray(self.basis, dtype=float)
        proj = np.asarray(self.projector, dtype=float)
        values = np.asarray(self.eigenvalues, dtype=float)
        d, p = basis.shape
        if proj.shape != (d, d):
            raise ValueError("projector shape does not match the basis")
        if values.shape != (d,):
            raise ValueError("eigenvalues must have one entry per ambient dimension")
        if np.max(np.abs(basis.T @ basis - np.eye(p))) > _CONSTRUCT_TOL:
            raise ValueError("basis columns are not orthonormal")
        if np.max(np.abs(proj - proj.T)) > _CONSTRUCT_TOL:
            raise ValueError("projector is not symmetric")
        if np.max(np.abs(proj @ proj - proj)) > _CONSTRUCT_TOL:
            raise ValueError("projector is not idempotent")
        if abs(np.trace(proj) - p) > _CONSTRUCT_TOL:
            raise ValueError("projector trace does not equal the subspace dimension")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "projector", proj)
        object.__setattr__(self, "eigenvalues", values)

    @property
    def p(self) -> int:
        return int(self.basis.shape[1])


def subspace_from_vectors(vectors: np.ndarray, p: int) -> SubspaceEstimate:
    """Principal subspace of the second-moment matrix of a vector set
    (rows are candidate directions)."""
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim != 2:
        raise ValueError("expected a (count, d) array of direction vectors")
    moment = vectors.T @ vectors
    values, basis = principal_directions(moment, p)
    return SubspaceEstimate(basis, projector_from_basis(basis), values)


def _check_projector(mat: np.ndarray, tol: float, label: str) -> np.ndarray:
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{label} must be a square matrix")
    if np.max(np.abs(mat - mat.T)) > tol:
        raise ValueError(f"{label} is not symmetric")
    if np.max(np.abs(mat @ mat - mat)) > tol:
        raise ValueError(f"{label} is not idempotent")
    return mat


def subspace_error(p_hat, p_true, tol: float = 1e-8) -> float:
    """Frobenius distance between two orthogonal projectors.

    Both arguments are validated to be projectors (symmetric and idempotent
    within ``tol``).  For one-dimensional subspaces the distance ranges from
    0 (equal) to sqrt(2) (orthogonal).
    """
    a = _check_projector(p_hat, tol, "estimated projector")
    b = _check_projector(p_true, tol, "reference projector")
    if a.shape != b.shape:
        raise ValueError("projectors live in different ambient dimensions")
    return float(np.linalg.norm(a - b))
