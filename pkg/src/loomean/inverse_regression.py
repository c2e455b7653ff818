"""Sliced inverse-regression estimators of the index space.

Both estimators standardize X, slice the sample on the response, build a
candidate matrix from the within-slice moments of the standardized
predictors, and back-transform its principal directions.  SIR uses slice
means and misses symmetric links; SAVE uses slice covariances and misses
odd links.
"""
from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ._binning import equal_count_bins
from .subspace import SubspaceEstimate, _fix_signs, principal_directions, projector_from_basis

__all__ = ["SAVE", "SIR", "SlicedInverseRegression"]

# Relative eigenvalue ridge below which the covariance is treated as singular.
_SINGULAR_RTOL = 1e-10


def _standardize(x: np.ndarray):
    """Center x and whiten with the inverse symmetric square root of its
    covariance; raises on numerically singular covariance."""
    mean = x.mean(axis=0)
    centred = x - mean
    cov = centred.T @ centred / x.shape[0]
    values, vectors = np.linalg.eigh(cov)
    if values[-1] <= 0.0 or values[0] <= _SINGULAR_RTOL * values[-1]:
        raise ValueError("covariance of X is singular; drop redundant columns")
    inv_root = (vectors / np.sqrt(values)) @ vectors.T
    return centred @ inv_root, inv_root


class SlicedInverseRegression(TransformerMixin, BaseEstimator):
    """Shared machinery for slice-based inverse regression.

    Parameters
    ----------
    p : int, default 1
        Dimension of the index space.
    n_slices : int, default 10
        Equal-count slices of the response.

    Attributes
    ----------
    basis_ : (d, p) orthonormal basis of the estimated index space.
    projector_ : (d, d) orthogonal projector onto it.
    eigenvalues_ : (d,) descending spectrum of the candidate matrix.
    """

    def __init__(self, p: int = 1, n_slices: int = 10) -> None:
        self.p = p
        self.n_slices = n_slices

    def _candidate_matrix(self, z, y_slices, weights):
        raise NotImplementedError

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        n, d = X.shape
        if not 1 <= self.p <= d:
            raise ValueError(f"p must be between 1 and {d}")
        if self.n_slices < 2:
            raise ValueError("need at least 2 slices")
        if n < 2 * self.n_slices:
            raise ValueError("need at least 2 observations per slice")
        if np.ptp(y) == 0.0:
            warnings.warn("response is constant; slices carry no information", stacklevel=2)
        z, inv_root = _standardize(X)
        slices = equal_count_bins(y, self.n_slices)
        weights = np.bincount(slices, minlength=self.n_slices) / n
        moment = self._candidate_matrix(z, slices, weights)
        values, z_basis = principal_directions(moment, self.p)
        # Directions for z map back to directions for x through the same
        # inverse root, then get re-orthonormalized.
        basis, _ = np.linalg.qr(inv_root @ z_basis)
        basis = _fix_signs(basis)
        self.subspace_ = SubspaceEstimate(basis, projector_from_basis(basis), values)
        self.basis_ = basis
        self.projector_ = self.subspace_.projector
        self.eigenvalues_ = values
        self.n_features_in_ = d
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self)
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError("dimension mismatch with the fitted data")
        return X @ self.basis_


class SIR(SlicedInverseRegression):
    """Sliced inverse regression: principal directions of the weighted
    second moment of within-slice means of the standardized predictors."""

    def _candidate_matrix(self, z, y_slices, weights):
        d = z.shape[1]
        moment = np.zeros((d, d))
        for h in range(self.n_slices):
            members = y_slices == h
            m = z[members].mean(axis=0)
            moment += weights[h] * np.outer(m, m)
        return moment


class SAVE(SlicedInverseRegression):
    """Sliced average variance estimation: principal directions of the
    weighted mean of ``(I - V_h)^2`` with V_h the within-slice covariance
    of the standardized predictors."""

    def _candidate_matrix(self, z, y_slices, weights):
        d = z.shape[1]
        eye = np.eye(d)
        moment = np.zeros((d, d))
        for h in range(self.n_slices):
            members = z[y_slices == h]
            centred = members - members.mean(axis=0)
            v = centred.T @ centred / members.shape[0]
            gap = eye - v
            moment += weights[h] * (gap @ gap)
        return moment
