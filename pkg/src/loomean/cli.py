"""Command-line interface.

Subcommands: ``integrate`` (Monte Carlo and kernel-smoothed integration),
``functional`` (linear functionals of a regression), ``adetf`` (index-space
estimation by test functions, with the average-derivative baseline),
``sdr`` (sliced inverse regression baselines), ``bench`` (replication
studies from a JSON config).

Errors are reported as a single JSON line on stderr and mapped to exit
codes: 2 invalid arguments or values, 3 input parse or I/O failure,
4 estimation failure, 5 benchmark config error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from contextlib import nullcontext

import numpy as np

from .dataio import read_dataset
from .exceptions import ConfigError, DatasetFormatError, EstimationError
from .functionals import CalibrationModel, clt_check, estimate_functional, write_draws_csv
from .indexspace import ADE, ADETF, AdaptiveADETF
from .integrate import Box, integrate_kde, integrate_kde_corrected, named_integrand, plain_mc
from .inverse_regression import SAVE, SIR
from .kernels import (
    EPANECHNIKOV,
    GAUSSIAN,
    GAUSSIAN_HIGH_ORDER,
    KernelSpec,
    integration_bandwidth,
)
from .simbench import expand_config, iter_benchmark, summarize, write_results_csv, write_summary_csv

__all__ = ["build_parser", "main"]

_USAGE_EXIT = 2
_PARSE_EXIT = 3
_ESTIMATION_EXIT = 4
_CONFIG_EXIT = 5

_INTEGRANDS = ("sin_pi", "indicator_ball", "polynomial", "const")


def _bandwidth_argument(text: str):
    if text == "auto":
        return None
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {text!r}") from None


def _kernel_for(args, dimension: int) -> KernelSpec:
    order = args.order
    if args.kernel == GAUSSIAN_HIGH_ORDER:
        return KernelSpec.gaussian_high_order(dimension, 4 if order is None else order)
    if order is not None and order != 2:
        raise ValueError("only the gaussian-high-order kernel supports order > 2")
    return KernelSpec(args.kernel, dimension)


def _load_xy(path: str, *, need_response: bool):
    x, y = read_dataset(path)
    if need_response and y is None:
        raise ValueError(f"dataset {path} has no response column y")
    return x, y


def _write_matrix(path: str | None, matrix: np.ndarray) -> None:
    context = open(path, "w", newline="") if path else nullcontext(sys.stdout)
    with context as stream:
        writer = csv.writer(stream, lineterminator="\n")
        for row in np.atleast_2d(matrix):
            writer.writerow(["%.17g" % value for value in row])


def _emit(payload: dict) -> None:
    print(json.dumps(payload))


def _cmd_integrate(args) -> int:
    if args.input is not None and args.bc:
        raise ValueError("--bc applies only to generated designs; it cannot reshape --input data")
    if args.input is None and args.n is None:
        raise ValueError("provide --input or --n")
    if args.input is not None:
        x, _ = read_dataset(args.input)
        n, d = x.shape
        box = Box.unit(d)
    else:
        n, d = args.n, args.d
        box = Box.unit(d)
    integrand, exact = named_integrand(args.integrand, d)
    kernel = _kernel_for(args, d)
    h = args.h
    if h is None:
        h = integration_bandwidth(n, d, order=kernel.order, corrected=args.corrected)
    if args.input is None:
        if args.bc:
            box = box.inflate(h)
        x = box.sample(np.random.default_rng(args.seed), n)
    if args.method == "mc":
        estimate = plain_mc(x, integrand, box)
    elif args.corrected:
        estimate = integrate_kde_corrected(x, integrand, kernel, h, workers=args.workers)
    else:
        estimate = integrate_kde(x, integrand, kernel, h, workers=args.workers)
    _emit(
        {
            "integrand": args.integrand,
            "method": args.method,
            "kind": estimate.kind,
            "n": n,
            "d": d,
            "h": h,
            "value": estimate.value,
            "exact": exact,
            "abs_error": abs(estimate.value - exact),
            "n_used": estimate.n_used,
        }
    )
    return 0


def _cmd_functional(args) -> int:
    if args.clt_check:
        return _run_clt_check(args)
    if args.input is None:
        raise ValueError("provide --input, or --clt-check for a replication study")
    x, y = _load_xy(args.input, need_response=True)
    n, d = x.shape
    psi, _ = named_integrand(args.psi, d)
    kernel = _kernel_for(args, d)
    h = args.h
    if h is None:
        h = integration_bandwidth(n, d, order=kernel.order)
    estimate = estimate_functional(x, y, psi, kernel, h, workers=args.workers)
    _emit(
        {
            "psi": args.psi,
            "n": n,
            "d": d,
            "h": h,
            "c_hat": estimate.c_hat,
            "v_hat": estimate.v_hat,
            "n_used": estimate.n_used,
        }
    )
    return 0


def _run_clt_check(args) -> int:
    if args.n is None:
        raise ValueError("--clt-check needs --n")
    d = args.d
    if args.g == "zero":
        g = lambda points: np.zeros(points.shape[0])
    else:
        g, _ = named_integrand(args.g, d)
    psi, _ = named_integrand(args.psi, d)
    kernel = _kernel_for(args, d)
    model = CalibrationModel(
        g=g,
        sigma=args.sigma,
        box=Box.unit(d),
        boundary_correction=args.bc,
        kernel=kernel,
        bandwidth=args.h,
    )
    report = clt_check(
        model,
        psi,
        args.n,
        args.replications,
        seed=args.seed,
        use_true_density=args.true_density,
        workers=args.workers,
    )
    if args.draws_out:
        write_draws_csv(report, args.draws_out)
    _emit(
        {
            "psi": args.psi,
            "g": args.g,
            "sigma": args.sigma,
            "n": report.n,
            "replications": report.replications,
            "h": report.bandwidth,
            "c_true": report.c_true,
            "v_analytic": report.v_analytic,
            "empirical_mean": report.empirical_mean,
            "empirical_variance": report.empirical_variance,
            "normality_pvalue": report.normality_pvalue,
            "window_ok": report.window_ok,
            "used_true_density": report.used_true_density,
        }
    )
    return 0


def _cmd_adetf(args) -> int:
    x, y = _load_xy(args.input, need_response=True)
    d = x.shape[1]
    kernel = _kernel_for(args, d)
    if args.method == "ade":
        estimator = ADE(kernel=kernel, bandwidth=args.h, workers=args.workers)
    elif args.adaptive:
        estimator = AdaptiveADETF(
            p=args.p,
            kernel=kernel,
            bandwidth=args.h,
            test_scale=args.h0,
            eps=args.eps,
            n_refine=args.iters,
            workers=args.workers,
        )
    else:
        estimator = ADETF(
            p=args.p, kernel=kernel, bandwidth=args.h, test_scale=args.h0, workers=args.workers
        )
    estimator.fit(x, y)
    if estimator.projector_ is None:
        raise EstimationError("the estimated direction is zero; no projector to write")
    _write_matrix(args.out, estimator.projector_)
    return 0


def _cmd_sdr(args) -> int:
    x, y = _load_xy(args.input, need_response=True)
    cls = SIR if args.method == "sir" else SAVE
    estimator = cls(p=args.p, n_slices=args.slices).fit(x, y)
    _write_matrix(args.out, estimator.projector_)
    return 0


def _cmd_bench(args) -> int:
    with open(args.config) as stream:
        config = json.load(stream)
    cells = expand_config(config)
    results = []

    def tee(rows):
        for row in rows:
            results.append(row)
            yield row

    rows = tee(iter_benchmark(cells, args.seed, workers=args.workers))
    # Line buffering keeps completed rows on disk if a later cell dies.
    context = open(args.out, "w", buffering=1, newline="") if args.out else nullcontext(sys.stdout)
    with context as stream:
        write_results_csv(rows, stream, timings=args.timings)
    if args.summary:
        with open(args.summary, "w", newline="") as stream:
            write_summary_csv(summarize(results), stream)
    return 0


def _add_kernel_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--kernel",
        choices=(EPANECHNIKOV, GAUSSIAN, GAUSSIAN_HIGH_ORDER),
        default=EPANECHNIKOV,
        help="kernel family (default epanechnikov)",
    )
    parser.add_argument(
        "--order",
        type=int,
        default=None,
        help="kernel order for gaussian-high-order (default 4)",
    )
    parser.add_argument(
        "--h",
        type=_bandwidth_argument,
        default=None,
        help="bandwidth, or 'auto' for the subcommand's default rule",
    )
    parser.add_argument("--workers", type=int, default=1, help="threads for the pairwise pass")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loomean",
        description="Leave-one-out kernel-weighted means: integration, "
        "regression functionals, and index-space estimation.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    integrate = commands.add_parser("integrate", help="estimate an integral")
    integrate.add_argument("--integrand", choices=_INTEGRANDS, required=True)
    integrate.add_argument("--method", choices=("mc", "ks"), default="ks")
    integrate.add_argument("--input", default=None, help="CSV of design points")
    integrate.add_argument("--n", type=int, default=None, help="generate this many uniform points")
    integrate.add_argument("--d", type=int, default=1)
    integrate.add_argument("--bc", action="store_true", help="sample a bandwidth-inflated box")
    integrate.add_argument("--corrected", action="store_true", help="variance-corrected estimator")
    integrate.add_argument("--seed", type=int, default=0)
    _add_kernel_arguments(integrate)
    integrate.set_defaults(handler=_cmd_integrate)

    functional = commands.add_parser("functional", help="estimate a linear functional of E[Y|X]")
    functional.add_argument("--input", default=None)
    functional.add_argument("--psi", choices=_INTEGRANDS, default="const")
    functional.add_argument("--clt-check", action="store_true", help="replication study on a known model")
    functional.add_argument("--g", choices=("zero",) + _INTEGRANDS, default="zero", help="true regression function")
    functional.add_argument("--sigma", type=float, default=1.0, help="noise level")
    functional.add_argument("--n", type=int, default=None, help="sample size per replication")
    functional.add_argument("--d", type=int, default=1)
    functional.add_argument("--replications", type=int, default=100)
    functional.add_argument("--bc", action="store_true", help="sample a bandwidth-inflated box")
    functional.add_argument("--true-density", action="store_true", help="divide by the known density")
    functional.add_argument("--draws-out", default=None, help="CSV path for the replication draws")
    functional.add_argument("--seed", type=int, default=0)
    _add_kernel_arguments(functional)
    functional.set_defaults(handler=_cmd_functional)

    adetf = commands.add_parser("adetf", help="estimate the index space by test functions")
    adetf.add_argument("--input", required=True)
    adetf.add_argument("--p", type=int, default=1, help="index-space dimension")
    adetf.add_argument("--h0", type=float, default=None, help="test-function radius")
    adetf.add_argument("--method", choices=("adetf", "ade"), default="adetf")
    adetf.add_argument("--adaptive", action="store_true", help="refine through a reshaped design")
    adetf.add_argument("--eps", type=float, default=0.1)
    adetf.add_argument("--iters", type=int, default=1, help="refinement passes")
    adetf.add_argument("--out", default=None, help="projector CSV path (default stdout)")
    _add_kernel_arguments(adetf)
    adetf.set_defaults(handler=_cmd_adetf)

    sdr = commands.add_parser("sdr", help="sliced inverse-regression baselines")
    sdr.add_argument("--input", required=True)
    sdr.add_argument("--method", choices=("sir", "save"), default="sir")
    sdr.add_argument("--p", type=int, default=1)
    sdr.add_argument("--slices", type=int, default=10)
    sdr.add_argument("--out", default=None, help="projector CSV path (default stdout)")
    sdr.set_defaults(handler=_cmd_sdr)

    bench = commands.add_parser("bench", help="run a replication study from a JSON config")
    bench.add_argument("--config", required=True)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--out", default=None, help="results CSV path (default stdout)")
    bench.add_argument("--summary", default=None, help="optional quartile-summary CSV path")
    bench.add_argument("--timings", action="store_true", help="record real wall times")
    bench.add_argument("--workers", type=int, default=1)
    bench.set_defaults(handler=_cmd_bench)

    return parser


def _fail(exc: BaseException, code: int) -> int:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        return _fail(exc, _CONFIG_EXIT)
    except (DatasetFormatError, json.JSONDecodeError, OSError) as exc:
        return _fail(exc, _PARSE_EXIT)
    except EstimationError as exc:
        return _fail(exc, _ESTIMATION_EXIT)
    except ValueError as exc:
        return _fail(exc, _USAGE_EXIT)


if __name__ == "__main__":
    sys.exit(main())
