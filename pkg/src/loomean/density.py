"""Leave-one-out density tables, full-sample KDE, and the pairwise core.

The pairwise computation is exact O(n^2) (no tree or FFT approximation),
evaluated in fixed-size row blocks.  Block boundaries depend only on the
problem size and each block writes a disjoint output slice, so results are
bit-identical for any worker count.

Normalisation: the leave-one-out estimate divides by (n-1), so that
``n * full_kde(X_i) == (n-1) * loo_density[i] + h**-d * K(0)`` up to
floating-point reassociation.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._validation import as_sample, as_response, check_bandwidth
from .exceptions import EstimationError
from .kernels import KernelSpec

__all__ = [
    "DEFAULT_FLOOR",
    "LooDensityTable",
    "loo_density",
    "loo_variance",
    "full_kde",
    "full_kde_gradient",
    "loo_kde_gradient",
    "loo_nadaraya_watson",
    "usable_points",
]

DEFAULT_FLOOR = 1e-12

# target number of pairwise (i, j, coordinate) entries held per block
_BLOCK_ENTRIES = 2_000_000


def _row_block(n: int, d: int) -> int:
    rows = max(1, _BLOCK_ENTRIES // max(n * d, 1))
    return min(rows, n)


def _run_blocks(n: int, block: int, workers: int, task) -> None:
    bounds = [(start, min(start + block, n)) for start in range(0, n, block)]
    if workers <= 1 or len(bounds) == 1:
        for start, stop in bounds:
            task(start, stop)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # materialise to propagate worker exceptions
        list(pool.map(lambda b: task(*b), bounds))


def _resolve_kernel(kernel, dimension: int) -> KernelSpec:
    if kernel is None:
        return KernelSpec.epanechnikov(dimension)
    if isinstance(kernel, str):
        return KernelSpec(kernel, dimension)
    if not isinstance(kernel, KernelSpec):
        raise ValueError("kernel must be a KernelSpec or a family name")
    if kernel.dimension != dimension:
        raise ValueError(
            f"kernel dimension {kernel.dimension} does not match sample dimension {dimension}"
        )
    return kernel


@dataclass(frozen=True)
class LooDensityTable:
    """Per-point leave-one-out density estimates for one sample.

    ``variance`` holds the paired leave-one-out dispersion estimates and is
    None until requested.  ``floored`` flags points whose density fell below
    ``floor``; downstream estimators drop or reject them via
    :func:`usable_points`.
    """

    density: np.ndarray
    variance: np.ndarray | None
    bandwidth: float
    kernel: KernelSpec
    floor: float
    floored: np.ndarray

    @property
    def n_samples(self) -> int:
        return int(self.density.shape[0])


def _pairwise_tables(x, kernel, h, want_variance, workers):
    n, d = x.shape
    inv_hd = h ** (-d)
    density = np.empty(n)
    variance = np.empty(n) if want_variance else None
    block = _row_block(n, d)

    def task(start: int, stop: int) -> None:
        diff = (x[start:stop, None, :] - x[None, :, :]) / h
        kvals = inv_hd * kernel.evaluate(diff)
        local = np.arange(stop - start)
        rows = local + start
        kvals[local, rows] = 0.0
        mean = kvals.sum(axis=1) / (n - 1)
        density[start:stop] = mean
        if want_variance:
            dev = kvals - mean[:, None]
            dev[local, rows] = 0.0
            variance[start:stop] = np.square(dev).sum(axis=1) / ((n - 1) * (n - 2))

    _run_blocks(n, block, workers, task)
    return density, variance


def _loo_table(x, kernel, h, want_variance, floor, workers) -> LooDensityTable:
    x = as_sample(x, min_rows=3 if want_variance else 2)
    h = check_bandwidth(h)
    spec = _resolve_kernel(kernel, x.shape[1])
    floor = float(floor)
    if floor < 0.0:
        raise ValueError("floor must be nonnegative")
    density, variance = _pairwise_tables(x, spec, h, want_variance, int(workers))
    return LooDensityTable(
        density=density,
        variance=variance,
        bandwidth=h,
        kernel=spec,
        floor=floor,
        floored=density < floor,
    )


def loo_density(x, kernel=None, h=None, *, floor: float = DEFAULT_FLOOR, workers: int = 1) -> LooDensityTable:
    """Leave-one-out kernel density estimates at every sample point.

    ``density[i] = 1/((n-1) h^d) * sum_{j != i} K((X_i - X_j)/h)``.
    """
    if h is None:
        raise ValueError("a bandwidth is required")
    return _loo_table(x, kernel, h, False, floor, workers)


def loo_variance(x, kernel=None, h=None, *, floor: float = DEFAULT_FLOOR, workers: int = 1) -> LooDensityTable:
    """Leave-one-out density table with the dispersion column filled.

    ``variance[i] = 1/((n-1)(n-2)) * sum_{j != i} (h^-d K((X_i-X_j)/h) - density[i])^2``,
    the paired estimate used by the variance-corrected integral estimator.
    """
    if h is None:
        raise ValueError("a bandwidth is required")
    return _loo_table(x, kernel, h, True, floor, workers)


def _as_query(query, dimension):
    q = np.asarray(query, dtype=float)
    if dimension == 1:
        single = q.ndim == 0
        q = np.atleast_1d(q)
        if q.ndim == 1:
            q = q[:, None]
    else:
        single = q.ndim == 1
        if single:
            q = q[None, :]
    if q.ndim != 2 or q.shape[1] != dimension:
        raise ValueError(f"query points must have {dimension} coordinates")
    if not np.all(np.isfinite(q)):
        raise ValueError("query contains non-finite values")
    return q, single


def full_kde(x, kernel=None, h=None, query=None, *, workers: int = 1):
    """Full-sample kernel density estimate at arbitrary query points.

    ``query=None`` evaluates at the sample points themselves.
    """
    x = as_sample(x, min_rows=1)
    h = check_bandwidth(h)
    spec = _resolve_kernel(kernel, x.shape[1])
    q, single = _as_query(x if query is None else query, x.shape[1])
    n = x.shape[0]
    m = q.shape[0]
    out = np.empty(m)
    block = _row_block(max(n, 1), x.shape[1])

    def task(start: int, stop: int) -> None:
        diff = (q[start:stop, None, :] - x[None, :, :]) / h
        out[start:stop] = spec.evaluate(diff).sum(axis=1) / (n * h ** x.shape[1])

    _run_blocks(m, block, workers, task)
    return float(out[0]) if single else out


def full_kde_gradient(x, kernel=None, h=None, query=None, *, workers: int = 1):
    """Gradient of :func:`full_kde` with respect to the query point.

    ``query=None`` evaluates at the sample points themselves.
    """
    x = as_sample(x, min_rows=1)
    h = check_bandwidth(h)
    spec = _resolve_kernel(kernel, x.shape[1])
    q, single = _as_query(x if query is None else query, x.shape[1])
    n, d = x.shape
    m = q.shape[0]
    out = np.empty((m, d))
    block = _row_block(max(n, 1), d)

    def task(start: int, stop: int) -> None:
        diff = (q[start:stop, None, :] - x[None, :, :]) / h
        out[start:stop] = spec.gradient(diff).sum(axis=1) / (n * h ** (d + 1))

    _run_blocks(m, block, workers, task)
    return out[0] if single else out


def loo_kde_gradient(x, kernel=None, h=None, *, workers: int = 1) -> np.ndarray:
    """Leave-one-out KDE gradient at every sample point, (n, d).

    ``grad[i] = 1/((n-1) h^(d+1)) * sum_{j != i} (grad K)((X_i - X_j)/h)``.
    """
    x = as_sample(x, min_rows=2)
    h = check_bandwidth(h)
    spec = _resolve_kernel(kernel, x.shape[1])
    n, d = x.shape
    out = np.empty((n, d))
    block = _row_block(n, d)

    def task(start: int, stop: int) -> None:
        diff = (x[start:stop, None, :] - x[None, :, :]) / h
        g = spec.gradient(diff)
        local = np.arange(stop - start)
        g[local, local + start, :] = 0.0
        out[start:stop] = g.sum(axis=1) / ((n - 1) * h ** (d + 1))

    _run_blocks(n, block, workers, task)
    return out


def loo_nadaraya_watson(x, y, kernel=None, h=None, *, workers: int = 1) -> np.ndarray:
    """Leave-one-out Nadaraya-Watson regression values at the sample points.

    Points with an empty kernel neighbourhood get a fitted value of 0, which
    leaves their full response as the residual.
    """
    x = as_sample(x, min_rows=2)
    y = as_response(y, x.shape[0])
    h = check_bandwidth(h)
    spec = _resolve_kernel(kernel, x.shape[1])
    n, d = x.shape
    num = np.empty(n)
    den = np.empty(n)
    block = _row_block(n, d)

    def task(start: int, stop: int) -> None:
        diff = (x[start:stop, None, :] - x[None, :, :]) / h
        kvals = spec.evaluate(diff)
        local = np.arange(stop - start)
        kvals[local, local + start] = 0.0
        num[start:stop] = kvals @ y
        den[start:stop] = kvals.sum(axis=1)

    _run_blocks(n, block, workers, task)
    out = np.zeros(n)
    covered = den > 0.0
    out[covered] = num[covered] / den[covered]
    return out


def usable_points(table: LooDensityTable, policy: str = "skip") -> np.ndarray:
    """Boolean mask of points admitted by the density-floor policy.

    ``"skip"`` drops flagged points with a warning; ``"error"`` raises as
    soon as any point is flagged.  Raises when no point survives.
    """
    if policy not in ("skip", "error"):
        raise ValueError(f"unknown floor policy: {policy!r}")
    mask = ~table.floored
    n_bad = int(table.floored.sum())
    if n_bad and policy == "error":
        raise EstimationError(f"{n_bad} of {table.n_samples} points fell below the density floor")
    if not mask.any():
        raise EstimationError("every point fell below the density floor")
    if n_bad:
        warnings.warn(
            f"dropping {n_bad} of {table.n_samples} points below the density floor "
            f"({table.floor:g}); their terms are zeroed in the estimator sums",
            stacklevel=2,
        )
    return mask
