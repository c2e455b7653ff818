"""Index-space estimation from density-weighted average gradients of
radial test functions.

For Y = g(B'X) + noise, the vector ``mean(Y_i grad psi(X_i) / fhat_i)``
estimates ``integral of g grad psi``, which lies in the index space for any
smooth compactly supported psi.  Using one bump-shaped test function per
sample point gives a cloud of candidate directions; the ones whose
projections show the strongest dependence with Y are kept and their
principal subspace is the estimate.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ._binning import equal_count_bins
from ._validation import as_response, as_sample, check_bandwidth
from .density import DEFAULT_FLOOR, loo_density, loo_kde_gradient, usable_points
from .exceptions import EstimationError
from .kernels import EPANECHNIKOV, KernelSpec, adetf_bandwidth
from .subspace import SubspaceEstimate, projector_from_basis, subspace_from_vectors

__all__ = [
    "ADE",
    "ADETF",
    "AdaptiveADETF",
    "CandidateSet",
    "TestFunction",
    "dependence_score",
    "index_direction",
    "sample_scale",
]


def sample_scale(x: np.ndarray) -> float:
    """Root mean squared distance of the sample to its mean, the scale that
    drives the default bandwidth and test-function radius."""
    x = as_sample(x)
    centred = x - x.mean(axis=0)
    return float(np.sqrt(np.mean(np.sum(centred * centred, axis=1))))


@dataclass(frozen=True)
class TestFunction:
    """Radial polynomial bump ``psi(x) = (1 - z^2)^2`` with
    ``z = |x - center| / scale``, supported on the ball of radius ``scale``."""

    center: np.ndarray
    scale: float

    def __post_init__(self) -> None:
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        if center.ndim != 1 or not np.all(np.isfinite(center)):
            raise ValueError("center must be a finite vector")
        if not (np.isfinite(self.scale) and self.scale > 0.0):
            raise ValueError("scale must be positive")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def dimension(self) -> int:
        return int(self.center.shape[0])

    def _diff(self, points) -> np.ndarray:
        x = np.asarray(points, dtype=float)
        if x.ndim == 1 and self.dimension == 1:
            x = x[:, None]
        return x - self.center

    def value(self, points) -> np.ndarray:
        diff = self._diff(points)
        zsq = np.sum(diff * diff, axis=-1) / self.scale**2
        return np.where(zsq < 1.0, np.square(1.0 - zsq), 0.0)

    def gradient(self, points) -> np.ndarray:
        """Closed-form gradient, ``-(4 / scale^2) (1 - z^2) (x - center)``
        inside the support ball and 0 outside."""
        diff = self._diff(points)
        zsq = np.sum(diff * diff, axis=-1) / self.scale**2
        factor = np.where(zsq < 1.0, -(4.0 / self.scale**2) * (1.0 - zsq), 0.0)
        return factor[..., np.newaxis] * diff


def dependence_score(y, z, n_bins: int | None = None) -> float:
    """Pearson-type dependence statistic over an equal-count contingency
    table of two scalar samples.

    Bins are rank-based with the last bin absorbing the remainder; the
    statistic is ``sum over cells of (p - p_row q_col)^2 / (p_row q_col)``.
    Degenerate (constant) input scores 0 with a warning.  The default bin
    count is floor(sqrt(n)), which always satisfies the ``n >= n_bins^2``
    requirement.
    """
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    if y.ndim != 1 or y.shape != z.shape:
        raise ValueError("y and z must be 1-d arrays of equal length")
    n = y.shape[0]
    if n_bins is None:
        n_bins = math.isqrt(n)
    if n_bins < 2:
        raise ValueError("need at least 2 bins")
    if n < n_bins * n_bins:
        raise ValueError(f"need at least n_bins^2 = {n_bins * n_bins} observations, got {n}")
    if np.ptp(y) == 0.0 or np.ptp(z) == 0.0:
        warnings.warn("dependence score of a constant sample is 0", stacklevel=2)
        return 0.0
    iy = equal_count_bins(y, n_bins)
    iz = equal_count_bins(z, n_bins)
    counts = np.zeros((n_bins, n_bins))
    np.add.at(counts, (iy, iz), 1.0)
    probs = counts / n
    row = probs.sum(axis=1)
    col = probs.sum(axis=0)
    expected = np.outer(row, col)
    return float(np.sum(np.square(probs - expected) / expected))


def index_direction(
    x,
    y,
    test_function: TestFunction,
    kernel=None,
    h=None,
    *,
    table=None,
    floor: float = DEFAULT_FLOOR,
    floor_policy: str = "skip",
    workers: int = 1,
) -> np.ndarray:
    """Candidate index direction ``(1/n) sum(Y_i grad psi(X_i) / fhat_i)``
    for a single test function."""
    x = as_sample(x, min_rows=2)
    n, d = x.shape
    y = as_response(y, n)
    if test_function.dimension != d:
        raise ValueError("test function dimension does not match the sample")
    if table is None:
        if h is None:
            h = adetf_bandwidth(n, d, sample_scale(x))
        table = loo_density(x, kernel, h, floor=floor, workers=workers)
    mask = usable_points(table, floor_policy)
    grads = test_function.gradient(x[mask])
    weights = y[mask] / table.density[mask]
    return weights @ grads / n


def _candidate_directions(points, weights, centers, scale) -> np.ndarray:
    """Stack of ``sum_i w_i grad psi_k(X_i)`` over test functions centred at
    ``centers``; weights already fold in the response, density, and 1/n."""
    n, d = points.shape
    k_total = centers.shape[0]
    out = np.empty((k_total, d))
    block = max(1, 2_000_000 // max(n * d, 1))
    inv_sq = 1.0 / scale**2
    for start in range(0, k_total, block):
        stop = min(start + block, k_total)
        diff = points[None, :, :] - centers[start:stop, None, :]
        zsq = np.sum(diff * diff, axis=-1) * inv_sq
        factor = np.where(zsq < 1.0, (zsq - 1.0) * (4.0 * inv_sq), 0.0)
        out[start:stop] = np.einsum("kn,knd->kd", factor * weights[None, :], diff)
    return out


@dataclass(frozen=True)
class CandidateSet:
    """All candidate directions with their dependence scores and the
    indices of the ones kept for the principal-subspace step."""

    directions: np.ndarray
    scores: np.ndarray
    selected: np.ndarray


def _solve_index_space(x, y, p, spec, h, h0, n_bins, n_select, floor, floor_policy, workers, transform=None):
    n, d = x.shape
    points = x if transform is None else x @ transform
    if h0 is None:
        h0 = sample_scale(points)
    table = loo_density(points, spec, h, floor=floor, workers=workers)
    mask = usable_points(table, floor_policy)
    weights = np.zeros(n)
    weights[mask] = y[mask] / table.density[mask]
    weights /= n
    directions = _candidate_directions(points, weights, points, h0)
    if transform is not None:
        directions = directions @ transform
    norms = np.linalg.norm(directions, axis=1)
    if not np.any(norms > 0.0):
        raise EstimationError("all candidate directions vanished")
    if n_bins is None:
        n_bins = math.isqrt(n)
    scores = np.full(n, -np.inf)
    for k in np.flatnonzero(norms > 0.0):
        scores[k] = dependence_score(y, x @ directions[k], n_bins)
    if n_select is None:
        root = math.isqrt(n)
        n_select = root if root * root == n else root + 1
    n_select = min(int(n_select), n)
    selected = np.argsort(-scores, kind="stable")[:n_select]
    estimate = subspace_from_vectors(directions[selected], p)
    return estimate, CandidateSet(directions, scores, selected), h0


def _resolve_kernel_param(kernel, dimension: int) -> KernelSpec:
    if kernel is None:
        return KernelSpec.epanechnikov(dimension)
    if isinstance(kernel, str):
        return KernelSpec(kernel, dimension)
    if isinstance(kernel, KernelSpec):
        if kernel.dimension != dimension:
            raise ValueError("kernel dimension does not match the data")
        return kernel
    raise ValueError("kernel must be a KernelSpec or a family name")


class ADETF(TransformerMixin, BaseEstimator):
    """Index-space estimator from average derivatives of test functions.

    Fits Y = g(B'X) + noise without estimating g: one radial test function
    is centred at every sample point, each yields a candidate direction,
    the ceil(sqrt(n)) candidates with the highest dependence scores are
    kept, and the top-p principal directions of their second-moment matrix
    span the estimate.

    Parameters
    ----------
    p : int, default 1
        Dimension of the index space.
    kernel : str or KernelSpec, default "epanechnikov"
        Kernel for the leave-one-out density weights.
    bandwidth : float, optional
        Density bandwidth; defaults to ``2 s n^(-1/(d+2))`` with s the root
        mean squared distance of the sample to its mean.
    test_scale : float, optional
        Radius of the test-function bumps; defaults to s.
    n_bins : int, optional
        Bins per axis of the dependence table; defaults to floor(sqrt(n)).
    n_select : int, optional
        Candidates kept; defaults to ceil(sqrt(n)).
    density_floor : float, default 1e-12
        Points with smaller estimated density are dropped with a warning.
    workers : int, default 1
        Worker threads for the pairwise density pass.

    Attributes
    ----------
    basis_ : (d, p) orthonormal basis of the estimated index space.
    projector_ : (d, d) orthogonal projector onto it.
    eigenvalues_ : (d,) descending spectrum of the candidate moment matrix.
    candidates_ : CandidateSet of all directions, scores, and the kept set.
    """

    def __init__(
        self,
        p: int = 1,
        kernel: str | KernelSpec = EPANECHNIKOV,
        bandwidth: float | None = None,
        test_scale: float | None = None,
        n_bins: int | None = None,
        n_select: int | None = None,
        density_floor: float = DEFAULT_FLOOR,
        floor_policy: str = "skip",
        workers: int = 1,
    ) -> None:
        self.p = p
        self.kernel = kernel
        self.bandwidth = bandwidth
        self.test_scale = test_scale
        self.n_bins = n_bins
        self.n_select = n_select
        self.density_floor = density_floor
        self.floor_policy = floor_policy
        self.workers = workers

    def _prepare(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        n, d = X.shape
        if n < 9:
            raise ValueError("need at least 9 samples")
        if not 1 <= self.p <= d:
            raise ValueError(f"p must be between 1 and {d}")
        spec = _resolve_kernel_param(self.kernel, d)
        scale = sample_scale(X)
        if scale == 0.0:
            raise ValueError("degenerate sample: all points are identical")
        h = self.bandwidth if self.bandwidth is not None else adetf_bandwidth(n, d, scale)
        return X, y, spec, check_bandwidth(h)

    def _store(self, estimate: SubspaceEstimate, candidates: CandidateSet, spec, h, h0, d) -> None:
        self.subspace_ = estimate
        self.basis_ = estimate.basis
        self.projector_ = estimate.projector
        self.eigenvalues_ = estimate.eigenvalues
        self.candidates_ = candidates
        self.kernel_spec_ = spec
        self.bandwidth_ = float(h)
        self.test_scale_ = float(h0)
        self.n_features_in_ = d

    def fit(self, X, y):
        X, y, spec, h = self._prepare(X, y)
        estimate, candidates, h0 = _solve_index_space(
            X,
            y,
            self.p,
            spec,
            h,
            self.test_scale,
            self.n_bins,
            self.n_select,
            self.density_floor,
            self.floor_policy,
            self.workers,
        )
        self._store(estimate, candidates, spec, h, h0, X.shape[1])
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self)
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError("dimension mismatch with the fitted data")
        return X @ self.basis_


class AdaptiveADETF(ADETF):
    """ADETF with refinement passes through a data-dependent reshaping.

    After a first fit with basis B, the sample is mapped through
    ``A = B B' + eps I`` (compressing directions outside the current
    estimate), the pipeline is re-run on the transformed points with the
    bandwidth shrunk by ``bandwidth_shrink``, and gradients are mapped back
    through A.  With ``n_refine=0`` the estimator reproduces plain ADETF
    exactly.
    """

    def __init__(
        self,
        p: int = 1,
        kernel: str | KernelSpec = EPANECHNIKOV,
        bandwidth: float | None = None,
        test_scale: float | None = None,
        n_bins: int | None = None,
        n_select: int | None = None,
        density_floor: float = DEFAULT_FLOOR,
        floor_policy: str = "skip",
        workers: int = 1,
        eps: float = 0.1,
        n_refine: int = 1,
        bandwidth_shrink: float = 0.7,
    ) -> None:
        super().__init__(
            p=p,
            kernel=kernel,
            bandwidth=bandwidth,
            test_scale=test_scale,
            n_bins=n_bins,
            n_select=n_select,
            density_floor=density_floor,
            floor_policy=floor_policy,
            workers=workers,
        )
        self.eps = eps
        self.n_refine = n_refine
        self.bandwidth_shrink = bandwidth_shrink

    def fit(self, X, y):
        if not (np.isfinite(self.eps) and self.eps > 0.0):
            raise ValueError("eps must be positive")
        if self.n_refine < 0:
            raise ValueError("n_refine must be nonnegative")
        if not (0.0 < self.bandwidth_shrink <= 1.0):
            raise ValueError("bandwidth_shrink must be in (0, 1]")
        X, y, spec, h = self._prepare(X, y)
        d = X.shape[1]
        solve = lambda bandwidth, transform: _solve_index_space(
            X,
            y,
            self.p,
            spec,
            bandwidth,
            self.test_scale,
            self.n_bins,
            self.n_select,
            self.density_floor,
            self.floor_policy,
            self.workers,
            transform=transform,
        )
        estimate, candidates, h0 = solve(h, None)
        transform = None
        for _ in range(self.n_refine):
            h = h * self.bandwidth_shrink
            transform = estimate.basis @ estimate.basis.T + self.eps * np.eye(d)
            estimate, candidates, h0 = solve(h, transform)
        self._store(estimate, candidates, spec, h, h0, d)
        self.transform_matrix_ = transform
        return self


class ADE(BaseEstimator):
    """Average-derivative baseline: the single direction
    ``-(1/n) sum(Y_i grad fhat_i / fhat_i)`` over points with density above
    the trim level.

    Targets the average gradient of the regression function, so it fails
    by construction on even link functions.  ``trim`` is an absolute
    density threshold; the default ``None`` trims the lowest 5% of the
    leave-one-out densities, where the gradient-to-density ratio is too
    noisy to average.  ``basis_`` and ``projector_`` are set when the
    direction is nonzero.
    """

    def __init__(
        self,
        kernel: str | KernelSpec = EPANECHNIKOV,
        bandwidth: float | None = None,
        trim: float | None = None,
        workers: int = 1,
    ) -> None:
        self.kernel = kernel
        self.bandwidth = bandwidth
        self.trim = trim
        self.workers = workers

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        n, d = X.shape
        if n < 2:
            raise ValueError("need at least 2 samples")
        spec = _resolve_kernel_param(self.kernel, d)
        scale = sample_scale(X)
        if scale == 0.0:
            raise ValueError("degenerate sample: all points are identical")
        h = self.bandwidth if self.bandwidth is not None else adetf_bandwidth(n, d, scale)
        h = check_bandwidth(h)
        table = loo_density(X, spec, h, workers=self.workers)
        grads = loo_kde_gradient(X, spec, h, workers=self.workers)
        trim = float(np.quantile(table.density, 0.05)) if self.trim is None else self.trim
        keep = table.density > trim
        if not keep.any():
            raise EstimationError("all points fell below the trim level")
        self.trim_ = trim
        ratios = grads[keep] / table.density[keep, None]
        self.direction_ = -(y[keep, None] * ratios).sum(axis=0) / n
        norm = float(np.linalg.norm(self.direction_))
        if norm > 0.0:
            basis = (self.direction_ / norm)[:, None]
            self.basis_ = basis
            self.projector_ = projector_from_basis(basis)
        else:
            self.basis_ = None
            self.projector_ = None
        self.kernel_spec_ = spec
        self.bandwidth_ = h
        self.n_features_in_ = d
        return self
