"""Simulation models and the replication benchmark harness.

Four regression models with a known index space (standard normal design)
plus one integration model (uniform design) drive paired comparisons of
the estimators.  The harness derives one seed per (cell, replicate) from
the master seed, generates each dataset once, and runs every method of the
cell on that same dataset, so per-replicate differences between methods
are pure method effects.
"""
from __future__ import annotations

import csv
import math
import time
import warnings
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .exceptions import ConfigError, EstimationError
from .indexspace import ADE, ADETF, AdaptiveADETF
from .integrate import Box, integrate_kde, named_integrand, plain_mc
from .inverse_regression import SAVE, SIR
from .kernels import integration_bandwidth
from .subspace import subspace_error

__all__ = [
    "BenchCell",
    "ModelSpec",
    "ReplicationResult",
    "SimData",
    "SummaryRow",
    "expand_config",
    "generate",
    "iter_benchmark",
    "paired_sign_counts",
    "run_benchmark",
    "summarize",
    "write_results_csv",
    "write_summary_csv",
]

MODEL_NAMES = ("M1", "M2", "M3", "M4", "IntegrationSin")
SUBSPACE_METHODS = ("adetf", "adaptive-adetf", "ade", "sir", "save")
INTEGRATION_METHODS = ("mc", "ks", "ksbc")

# Fallback noise levels when a spec does not set one: unit noise for the
# first model, 0.5 for the fixed-noise models, sigma itself for the fourth.
_DEFAULT_PARAM = {"M1": None, "M2": 0.0, "M3": 1.0, "M4": 0.5, "IntegrationSin": None}


def _default_beta(model: str, d: int) -> np.ndarray | None:
    if model == "M1":
        return np.full((d, 1), 1.0 / math.sqrt(d))
    if model in ("M2", "M3"):
        beta = np.zeros((d, 1))
        beta[0, 0] = 1.0
        return beta
    if model == "M4":
        beta = np.zeros((d, 2))
        beta[0, 0] = 1.0
        beta[1, 1] = 1.0
        return beta
    return None


@dataclass(frozen=True)
class ModelSpec:
    """One simulation model instance.

    model : one of M1 (Y = t sin t with t = beta'X), M2 (cos((pi/2)(X1 - mu))
        + 0.5 e), M3 (tau sin(X1 / tau) + 0.5 e), M4 (sin(2 X1) /
        (0.5 + |1 + X2|) + sigma e), or IntegrationSin (uniform design,
        Y = prod sin(pi x), no noise).
    param : the model's free parameter (mu, tau, or sigma); ignored by M1
        and IntegrationSin.
    beta : index matrix; only M1 accepts a custom (unit-norm) direction,
        the others pin it to coordinate axes.
    """

    model: str
    d: int
    n: int
    param: float | None = None
    noise_sd: float | None = None
    beta: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.model not in MODEL_NAMES:
            raise ValueError(f"unknown model {self.model!r}; expected one of {MODEL_NAMES}")
        if self.d < 1 or self.n < 1:
            raise ValueError("d and n must be positive")
        if self.model == "M4" and self.d < 2:
            raise ValueError("M4 needs at least two predictors")
        param = self.param if self.param is not None else _DEFAULT_PARAM[self.model]
        if param is not None:
            param = float(param)
            if not np.isfinite(param):
                raise ValueError("param must be finite")
        if self.model == "M3" and param == 0.0:
            raise ValueError("M3 needs a nonzero tau")
        if self.model == "M4" and param is not None and param < 0.0:
            raise ValueError("M4 needs a nonnegative sigma")
        object.__setattr__(self, "param", param)

        noise = self.noise_sd
        if noise is None:
            if self.model == "M1":
                noise = 1.0
            elif self.model in ("M2", "M3"):
                noise = 0.5
            elif self.model == "M4":
                noise = param
            else:
                noise = 0.0
        noise = float(noise)
        if not (np.isfinite(noise) and noise >= 0.0):
            raise ValueError("noise_sd must be nonnegative")
        object.__setattr__(self, "noise_sd", noise)

        default = _default_beta(self.model, self.d)
        beta = self.beta
        if beta is None:
            beta = default
        else:
            beta = np.asarray(beta, dtype=float)
            if beta.ndim == 1:
                beta = beta[:, None]
            if default is None:
                raise ValueError(f"{self.model} has no index matrix")
            if beta.shape != default.shape:
                raise ValueError(f"beta must have shape {default.shape}")
            if self.model == "M1":
                if abs(np.linalg.norm(beta[:, 0]) - 1.0) > 1e-8:
                    raise ValueError("M1 requires a unit-norm beta")
            elif not np.array_equal(beta, default):
                raise ValueError(f"{self.model} pins beta to coordinate axes")
        object.__setattr__(self, "beta", beta)

    @property
    def p(self) -> int:
        """Index-space dimension; 0 for the integration model."""
        return 0 if self.beta is None else int(self.beta.shape[1])

    def signal(self, x: np.ndarray) -> np.ndarray:
        """Noise-free regression surface evaluated at the rows of x."""
        x = np.asarray(x, dtype=float)
        if self.model == "M1":
            t = x @ self.beta[:, 0]
            return t * np.sin(t)
        if self.model == "M2":
            return np.cos(0.5 * np.pi * (x[:, 0] - self.param))
        if self.model == "M3":
            return self.param * np.sin(x[:, 0] / self.param)
        if self.model == "M4":
            return np.sin(2.0 * x[:, 0]) / (0.5 + np.abs(1.0 + x[:, 1]))
        return np.prod(np.sin(np.pi * x), axis=1)

    def true_projector(self) -> np.ndarray:
        if self.beta is None:
            raise ValueError("the integration model has no index space")
        basis, _ = np.linalg.qr(self.beta)
        return basis @ basis.T

    def exact_integral(self) -> float:
        if self.model != "IntegrationSin":
            raise ValueError("only the integration model has an exact integral")
        return (2.0 / np.pi) ** self.d


@dataclass(frozen=True)
class SimData:
    """One generated dataset, keeping the raw noise draws so that
    ``y == signal + noise_sd * noise`` is reproducible bit-exactly."""

    spec: ModelSpec
    x: np.ndarray
    y: np.ndarray
    signal: np.ndarray
    noise: np.ndarray


def generate(spec: ModelSpec, seed) -> SimData:
    """Draw one dataset: standard normal design for the regression models,
    uniform design on the unit box for the integration model.  ``seed``
    may be an int, a SeedSequence, or a Generator.  The design is drawn
    before the noise, so the design is invariant to noise_sd.
    """
    rng = np.random.default_rng(seed)
    if spec.model == "IntegrationSin":
        x = rng.random((spec.n, spec.d))
        signal = spec.signal(x)
        return SimData(spec, x, signal, signal, np.zeros(spec.n))
    x = rng.standard_normal((spec.n, spec.d))
    noise = rng.standard_normal(spec.n)
    signal = spec.signal(x)
    y = signal + spec.noise_sd * noise
    return SimData(spec, x, y, signal, noise)


def _fit_error(data: SimData, estimator) -> float:
    estimator.fit(data.x, data.y)
    if getattr(estimator, "projector_", None) is None:
        raise EstimationError("estimator produced no direction")
    return subspace_error(estimator.projector_, data.spec.true_projector())


def _integration_error(data: SimData, method: str) -> float:
    spec = data.spec
    integrand, exact = named_integrand("sin_pi", spec.d)
    if method == "mc":
        estimate = plain_mc(data.x, integrand, Box.unit(spec.d))
    else:
        h = integration_bandwidth(spec.n, spec.d)
        if method == "ksbc":
            box = Box.unit(spec.d).inflate(h)
            # Reuse the very same uniforms on the inflated box so the three
            # integration methods stay paired within a replicate.
            points = box.lower + (box.upper - box.lower) * data.x
        else:
            points = data.x
        estimate = integrate_kde(points, integrand, h=h)
    return abs(estimate.value - exact)


def _run_method(data: SimData, method: str, workers: int) -> float:
    spec = data.spec
    if method in INTEGRATION_METHODS:
        return _integration_error(data, method)
    p = spec.p
    if method == "adetf":
        return _fit_error(data, ADETF(p=p, workers=workers))
    if method == "adaptive-adetf":
        return _fit_error(data, AdaptiveADETF(p=p, workers=workers))
    if method == "ade":
        return _fit_error(data, ADE(workers=workers))
    if method == "sir":
        return _fit_error(data, SIR(p=p))
    if method == "save":
        return _fit_error(data, SAVE(p=p))
    raise ConfigError(f"unknown method {method!r}")


@dataclass(frozen=True)
class BenchCell:
    """One benchmark cell: a model instance plus the methods to pair on it."""

    spec: ModelSpec
    methods: tuple[str, ...]
    replications: int = 100

    def __post_init__(self) -> None:
        if self.replications < 0:
            raise ConfigError("replications must be nonnegative")
        if not self.methods:
            raise ConfigError("cell has no methods")
        valid = INTEGRATION_METHODS if self.spec.model == "IntegrationSin" else SUBSPACE_METHODS
        for method in self.methods:
            if method not in valid:
                raise ConfigError(f"method {method!r} does not apply to model {self.spec.model}")


@dataclass(frozen=True)
class ReplicationResult:
    model: str
    method: str
    n: int
    d: int
    param: float | None
    replicate: int
    seed: int
    error: float
    ms: float


_CONFIG_KEYS = {"model", "methods", "n", "d", "param", "noise_sd", "replications"}


def _as_list(value) -> list:
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


def expand_config(config) -> list[BenchCell]:
    """Expand a benchmark config (one mapping or a list of mappings) into
    cells, crossing the n, d, and param grids within each block.

    Keys: model (required), methods (required), n (required), d (required
    except for the one-dimensional default), param, noise_sd, replications.
    Unknown keys are rejected outright so typos cannot silently change a
    study design.
    """
    if isinstance(config, dict):
        blocks = [config]
    elif isinstance(config, list):
        blocks = config
    else:
        raise ConfigError("config must be a mapping or a list of mappings")
    cells: list[BenchCell] = []
    for index, block in enumerate(blocks):
        if not isinstance(block, dict):
            raise ConfigError(f"config block {index} is not a mapping")
        unknown = set(block) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            model = block["model"]
            methods = tuple(_as_list(block["methods"]))
            sizes = _as_list(block["n"])
        except KeyError as missing:
            raise ConfigError(f"config block {index} is missing key {missing}") from None
        dims = _as_list(block.get("d", 1))
        params = _as_list(block.get("param", None))
        replications = int(block.get("replications", 100))
        for n in sizes:
            for d in dims:
                for param in params:
                    try:
                        spec = ModelSpec(
                            model,
                            int(d),
                            int(n),
                            param=param,
                            noise_sd=block.get("noise_sd"),
                        )
                    except ValueError as bad:
                        raise ConfigError(str(bad)) from None
                    cells.append(BenchCell(spec, methods, replications))
    return cells


def _replicate_seed(master_seed: int, cell_index: int, replicate: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(cell_index, replicate))


def iter_benchmark(
    cells: Sequence[BenchCell],
    master_seed: int = 0,
    *,
    workers: int = 1,
) -> Iterator[ReplicationResult]:
    """Run every cell and yield one result per (cell, replicate, method).

    Each replicate's dataset is generated from a seed derived as
    SeedSequence(master_seed, spawn_key=(cell_index, replicate)) and is
    shared by all of the cell's methods.  A method failure is recorded as
    a NaN error and the run continues.  Output order is (cell, replicate,
    method), so the stream is deterministic given (master_seed, cells).
    """
    for cell_index, cell in enumerate(cells):
        spec = cell.spec
        for replicate in range(cell.replications):
            sequence = _replicate_seed(master_seed, cell_index, replicate)
            seed_id = int(sequence.generate_state(1, np.uint64)[0])
            data = generate(spec, sequence)
            for method in cell.methods:
                start = time.perf_counter()
                try:
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore")
                        error = float(_run_method(data, method, workers))
                except (ValueError, EstimationError, np.linalg.LinAlgError):
                    error = float("nan")
                ms = (time.perf_counter() - start) * 1000.0
                yield ReplicationResult(
                    spec.model,
                    method,
                    spec.n,
                    spec.d,
                    spec.param,
                    replicate,
                    seed_id,
                    error,
                    ms,
                )


def run_benchmark(cells, master_seed: int = 0, *, workers: int = 1) -> list[ReplicationResult]:
    return list(iter_benchmark(cells, master_seed, workers=workers))


def _format_float(value: float | None) -> str:
    if value is None:
        return ""
    return "%.17g" % value


RESULT_COLUMNS = ("model", "method", "n", "d", "param", "replicate", "seed", "error", "ms")


def write_results_csv(results: Iterable[ReplicationResult], stream, *, timings: bool = False) -> None:
    """Write results rows.  Wall times are zeroed unless ``timings`` is
    set, so that default output is byte-identical across machines and
    thread counts."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(RESULT_COLUMNS)
    for row in results:
        writer.writerow(
            [
                row.model,
                row.method,
                row.n,
                row.d,
                _format_float(row.param),
                row.replicate,
                row.seed,
                _format_float(row.error),
                _format_float(row.ms if timings else 0.0),
            ]
        )


@dataclass(frozen=True)
class SummaryRow:
    model: str
    method: str
    n: int
    d: int
    param: float | None
    count: int
    failures: int
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    mean: float


def summarize(results: Iterable[ReplicationResult]) -> list[SummaryRow]:
    """Quartile table per (model, method, n, d, param) cell; NaN errors
    count as failures and are excluded from the statistics."""
    groups: dict[tuple, list[float]] = {}
    for row in results:
        groups.setdefault((row.model, row.method, row.n, row.d, row.param), []).append(row.error)
    table = []
    for key in sorted(groups, key=lambda k: tuple(str(part) for part in k)):
        errors = np.asarray(groups[key])
        kept = errors[np.isfinite(errors)]
        failures = errors.size - kept.size
        if kept.size == 0:
            stats = [float("nan")] * 6
        else:
            q1, median, q3 = np.percentile(kept, [25.0, 50.0, 75.0])
            stats = [kept.min(), q1, median, q3, kept.max(), kept.mean()]
        table.append(SummaryRow(*key, kept.size, failures, *map(float, stats)))
    return table


SUMMARY_COLUMNS = (
    "model", "method", "n", "d", "param",
    "count", "failures", "min", "q1", "median", "q3", "max", "mean",
)


def write_summary_csv(rows: Iterable[SummaryRow], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for row in rows:
        writer.writerow(
            [
                row.model,
                row.method,
                row.n,
                row.d,
                _format_float(row.param),
                row.count,
                row.failures,
                _format_float(row.minimum),
                _format_float(row.q1),
                _format_float(row.median),
                _format_float(row.q3),
                _format_float(row.maximum),
                _format_float(row.mean),
            ]
        )


def paired_sign_counts(
    results: Iterable[ReplicationResult], method_a: str, method_b: str
) -> tuple[int, int, int]:
    """Sign counts (a better, b better, ties) over replicates where both
    methods produced an error on the same dataset."""
    errors: dict[tuple, dict[str, float]] = {}
    for row in results:
        if row.method in (method_a, method_b):
            key = (row.model, row.n, row.d, row.param, row.replicate)
            errors.setdefault(key, {})[row.method] = row.error
    wins_a = wins_b = ties = 0
    for pair in errors.values():
        if len(pair) != 2:
            continue
        a, b = pair[method_a], pair[method_b]
        if math.isnan(a) or math.isnan(b):
            continue
        if a < b:
            wins_a += 1
        elif b < a:
            wins_b += 1
        else:
            ties += 1
    return wins_a, wins_b, ties
