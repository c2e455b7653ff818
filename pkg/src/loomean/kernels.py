"""Kernel families with closed-form gradients, plus bandwidth rules.

Conventions:
  - evaluation points are already scaled by the bandwidth: callers pass
    u = (x - x') / h and apply the h**-d normalisation themselves
  - every family integrates to exactly 1 over R^d
  - ``order`` counts vanishing moments: monomial moments of total degree
    1..order-1 are zero (the nonnegative families have order 2)
  - high-order kernels are signed; they are built as an even polynomial
    times the standard normal density, in product form across coordinates
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "EPANECHNIKOV",
    "GAUSSIAN",
    "GAUSSIAN_HIGH_ORDER",
    "KernelSpec",
    "adetf_bandwidth",
    "integration_bandwidth",
    "unit_ball_volume",
]

EPANECHNIKOV = "epanechnikov"
GAUSSIAN = "gaussian"
GAUSSIAN_HIGH_ORDER = "gaussian_high_order"

_FAMILIES = (EPANECHNIKOV, GAUSSIAN, GAUSSIAN_HIGH_ORDER)
_SQRT_2PI = np.sqrt(2.0 * np.pi)


def unit_ball_volume(dimension: int) -> float:
    """Volume of the Euclidean unit ball in ``dimension`` dimensions."""
    if dimension < 1:
        raise ValueError("dimension must be a positive integer")
    return float(np.exp(0.5 * dimension * np.log(np.pi) - gammaln(0.5 * dimension + 1.0)))


@functools.lru_cache(maxsize=None)
def _moment_killing_coefficients(order: int) -> tuple[float, ...]:
    # Coefficients a_j of P(t) = sum_j a_j t^j such that K(u) = P(u^2) phi(u)
    # has unit mass and vanishing even moments 2, 4, ..., order-2.  Under the
    # standard normal, E[u^(2k)] = (2k-1)!!, which makes the constraints a
    # small linear system.
    half = order // 2
    double_factorial = np.ones(2 * half)
    for k in range(1, 2 * half):
        double_factorial[k] = double_factorial[k - 1] * (2 * k - 1)
    system = np.array([[double_factorial[i + j] for j in range(half)] for i in range(half)])
    rhs = np.zeros(half)
    rhs[0] = 1.0
    return tuple(np.linalg.solve(system, rhs))


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family instantiated for a fixed dimension.

    Parameters
    ----------
    family : str
        One of ``"epanechnikov"``, ``"gaussian"``, ``"gaussian_high_order"``.
    dimension : int
        Dimension of the points the kernel is evaluated at.
    order : int, default 2
        Number of vanishing moments.  Must be 2 for the nonnegative
        families; any even integer >= 2 for ``gaussian_high_order``.
    """

    family: str
    dimension: int
    order: int = 2

    def __post_init__(self) -> None:
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown kernel family: {self.family!r}")
        if self.dimension < 1:
            raise ValueError("dimension must be a positive integer")
        if self.order < 2 or self.order % 2:
            raise ValueError("kernel order must be an even integer >= 2")
        if self.family in (EPANECHNIKOV, GAUSSIAN) and self.order != 2:
            raise ValueError(f"the {self.family} kernel has order 2")

    @classmethod
    def epanechnikov(cls, dimension: int) -> "KernelSpec":
        return cls(EPANECHNIKOV, dimension)

    @classmethod
    def gaussian(cls, dimension: int) -> "KernelSpec":
        return cls(GAUSSIAN, dimension)

    @classmethod
    def gaussian_high_order(cls, dimension: int, order: int = 4) -> "KernelSpec":
        return cls(GAUSSIAN_HIGH_ORDER, dimension, order)

    @property
    def is_radial(self) -> bool:
        # product high-order kernels are not radially symmetric beyond d=1
        return self.family in (EPANECHNIKOV, GAUSSIAN) or self.dimension == 1

    @property
    def nonnegative(self) -> bool:
        return self.family in (EPANECHNIKOV, GAUSSIAN) or self.order == 2

    def _as_points(self, points) -> np.ndarray:
        u = np.asarray(points, dtype=float)
        if u.ndim == 0 or u.shape[-1] != self.dimension:
            if self.dimension == 1:
                u = u[..., np.newaxis]
            else:
                raise ValueError(
                    f"points must have last axis of size {self.dimension}, got shape {u.shape}"
                )
        return u

    def evaluate(self, points) -> np.ndarray:
        """Kernel values at one point (shape ``(d,)``) or an array of points
        (shape ``(..., d)``); for d=1 the coordinate axis may be omitted."""
        u = self._as_points(points)
        if self.family == EPANECHNIKOV:
            sq = np.square(u).sum(axis=-1)
            coef = (self.dimension + 2.0) / (2.0 * unit_ball_volume(self.dimension))
            return coef * np.maximum(0.0, 1.0 - sq)
        if self.family == GAUSSIAN:
            sq = np.square(u).sum(axis=-1)
            return np.exp(-0.5 * sq) / _SQRT_2PI**self.dimension
        coeffs = _moment_killing_coefficients(self.order)
        factors = np.polynomial.polynomial.polyval(np.square(u), coeffs)
        factors = factors * np.exp(-0.5 * np.square(u)) / _SQRT_2PI
        return factors.prod(axis=-1)

    def gradient(self, points) -> np.ndarray:
        """Gradient of :meth:`evaluate`; output has a trailing axis of size d."""
        u = self._as_points(points)
        if self.family == EPANECHNIKOV:
            sq = np.square(u).sum(axis=-1)
            coef = (self.dimension + 2.0) / (2.0 * unit_ball_volume(self.dimension))
            return -2.0 * coef * u * (sq < 1.0)[..., np.newaxis]
        if self.family == GAUSSIAN:
            return -u * self.evaluate(u)[..., np.newaxis]
        coeffs = _moment_killing_coefficients(self.order)
        deriv = tuple((j + 1) * coeffs[j + 1] for j in range(len(coeffs) - 1))
        sq = np.square(u)
        phi = np.exp(-0.5 * sq) / _SQRT_2PI
        poly = np.polynomial.polynomial.polyval(sq, coeffs)
        dpoly = np.polynomial.polynomial.polyval(sq, deriv) if deriv else np.zeros_like(sq)
        factor = poly * phi
        # d/du [P(u^2) phi(u)] = (2u P'(u^2) - u P(u^2)) phi(u)
        dfactor = (2.0 * u * dpoly - u * poly) * phi
        out = np.empty_like(u)
        for k in range(self.dimension):
            rest = np.ones(u.shape[:-1])
            for j in range(self.dimension):
                if j != k:
                    rest = rest * factor[..., j]
            out[..., k] = dfactor[..., k] * rest
        return out

    def at_zero(self) -> float:
        """K(0), used by the full-sample/leave-one-out consistency identity."""
        return float(self.evaluate(np.zeros(self.dimension)))


def adetf_bandwidth(n_samples: int, dimension: int, scale: float) -> float:
    """Bandwidth rule ``2 * scale * n**(-1/(d+2))`` for the test-function and
    average-derivative estimators; ``scale`` is the root mean squared distance
    of the sample to its mean."""
    if n_samples < 2:
        raise ValueError("need at least 2 samples")
    if dimension < 1:
        raise ValueError("dimension must be a positive integer")
    scale = float(scale)
    if not np.isfinite(scale) or scale <= 0.0:
        raise ValueError("scale must be positive")
    return 2.0 * scale * float(n_samples) ** (-1.0 / (dimension + 2))


def integration_bandwidth(
    n_samples: int,
    dimension: int,
    order: int = 2,
    constant: float = 1.0,
    corrected: bool = False,
) -> float:
    """Bandwidth rule ``constant * n**(-1/(order+d))`` for the smoothed
    integral estimators.

    With ``corrected=True`` the exponent uses d/2 instead of d, the faster
    schedule that suits the variance-corrected estimator.
    """
    if n_samples < 2:
        raise ValueError("need at least 2 samples")
    if dimension < 1:
        raise ValueError("dimension must be a positive integer")
    if order < 2 or order % 2:
        raise ValueError("order must be an even integer >= 2")
    constant = float(constant)
    if not np.isfinite(constant) or constant <= 0.0:
        raise ValueError("constant must be positive")
    exponent = order + (0.5 * dimension if corrected else float(dimension))
    return constant * float(n_samples) ** (-1.0 / exponent)
