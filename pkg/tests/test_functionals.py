"""Plug-in estimates of integral functionals of a regression function."""
import io

import numpy as np
import pytest

from loomean import (
    Box,
    CalibrationModel,
    KernelSpec,
    bandwidth_window,
    clt_check,
    estimate_functional,
    loo_density,
    write_draws_csv,
)
from loomean.kernels import integration_bandwidth


def unit_psi(pts):
    return np.ones(pts.shape[0])


def test_hand_computed_small_case():
    # densities at {0, 0.5, 1} with h=1 are (9/32, 9/16, 9/32); the pilot
    # fit is 2 everywhere, so only the outer residuals +-1 drive v_hat
    x = np.array([0.0, 0.5, 1.0])
    y = np.array([1.0, 2.0, 3.0])
    with pytest.warns(UserWarning, match="rate window"):
        est = estimate_functional(x, y, unit_psi, KernelSpec.epanechnikov(1), 1.0)
    assert est.c_hat == pytest.approx(160.0 / 27.0, rel=1e-14)
    assert est.v_hat == pytest.approx(1024.0 / 81.0, rel=1e-14)
    assert est.n_used == 3


def test_linearity_in_the_response():
    rng = np.random.default_rng(4)
    x = rng.random(200)
    y1 = rng.normal(size=200)
    y2 = rng.normal(size=200)
    spec = KernelSpec.epanechnikov(1)
    table = loo_density(x, spec, 0.15)
    a = estimate_functional(x, y1, unit_psi, table=table).c_hat
    b = estimate_functional(x, y2, unit_psi, table=table).c_hat
    combo = estimate_functional(x, 2.0 * y1 - 0.5 * y2, unit_psi, table=table).c_hat
    assert combo == pytest.approx(2.0 * a - 0.5 * b, abs=1e-12)


def test_linearity_in_the_test_function():
    rng = np.random.default_rng(5)
    x = rng.random(200)
    y = rng.normal(size=200)
    table = loo_density(x, KernelSpec.epanechnikov(1), 0.15)
    p1 = lambda pts: np.sin(np.pi * pts[:, 0])
    p2 = lambda pts: pts[:, 0] ** 2
    a = estimate_functional(x, y, p1, table=table).c_hat
    b = estimate_functional(x, y, p2, table=table).c_hat
    both = lambda pts: 3.0 * p1(pts) + p2(pts)
    combo = estimate_functional(x, y, both, table=table).c_hat
    assert combo == pytest.approx(3.0 * a + b, abs=1e-12)


def test_scale_equivariance():
    # scaling Y by a scales c_hat by a and v_hat by a^2
    rng = np.random.default_rng(6)
    x = rng.random(150)
    y = rng.normal(size=150)
    table = loo_density(x, KernelSpec.epanechnikov(1), 0.15)
    base = estimate_functional(x, y, unit_psi, table=table)
    scaled = estimate_functional(x, 3.0 * y, unit_psi, table=table)
    assert scaled.c_hat == pytest.approx(3.0 * base.c_hat, rel=1e-12)
    assert scaled.v_hat == pytest.approx(9.0 * base.v_hat, rel=1e-12)


def test_zero_response_and_zero_test_function():
    rng = np.random.default_rng(7)
    x = rng.random(100)
    table = loo_density(x, KernelSpec.epanechnikov(1), 0.2)
    zero_y = estimate_functional(x, np.zeros(100), unit_psi, table=table)
    assert zero_y.c_hat == 0.0
    assert zero_y.v_hat == 0.0
    zero_psi = estimate_functional(
        x, rng.normal(size=100), lambda pts: np.zeros(pts.shape[0]), table=table
    )
    assert zero_psi.c_hat == 0.0


def test_default_bandwidth_rule():
    rng = np.random.default_rng(8)
    x = rng.random(300)
    y = rng.normal(size=300)
    auto = estimate_functional(x, y, unit_psi, KernelSpec.epanechnikov(1))
    manual = estimate_functional(
        x, y, unit_psi, KernelSpec.epanechnikov(1), integration_bandwidth(300, 1)
    )
    assert auto.c_hat == manual.c_hat


def test_psi_shape_check():
    rng = np.random.default_rng(9)
    x = rng.random(50)
    y = rng.normal(size=50)
    with pytest.raises(ValueError, match="one value per sample point"):
        estimate_functional(x, y, lambda pts: np.ones(3), KernelSpec.epanechnikov(1), 0.25)


def test_bandwidth_window_flags():
    good = bandwidth_window(1000, 0.1, 2, 1)
    assert good.ok
    assert good.bias_term == pytest.approx(np.sqrt(1000) * 0.01, rel=1e-12)
    assert good.variance_term == pytest.approx(np.sqrt(1000) * 0.1, rel=1e-12)
    too_big = bandwidth_window(1000, 0.9, 2, 1)
    assert not too_big.ok
    too_small = bandwidth_window(100, 0.01, 2, 1)
    assert not too_small.ok


def test_window_warning_fires_for_oversmoothed_fits():
    rng = np.random.default_rng(10)
    x = rng.random(400)
    y = rng.normal(size=400)
    with pytest.warns(UserWarning, match="rate window"):
        estimate_functional(x, y, unit_psi, KernelSpec.epanechnikov(1), 0.9)


def test_calibration_model_bandwidth_for():
    box = Box.unit(1)
    rule = CalibrationModel(g=lambda pts: np.zeros(pts.shape[0]), sigma=1.0, box=box)
    assert rule.bandwidth_for(1000) == pytest.approx(0.1, rel=1e-12)
    fixed = CalibrationModel(
        g=lambda pts: np.zeros(pts.shape[0]), sigma=1.0, box=box, bandwidth=0.07
    )
    assert fixed.bandwidth_for(1000) == 0.07
    custom = CalibrationModel(
        g=lambda pts: np.zeros(pts.shape[0]),
        sigma=1.0,
        box=box,
        bandwidth=lambda n: n ** (-0.25),
    )
    assert custom.bandwidth_for(256) == pytest.approx(0.25, rel=1e-12)


def test_clt_check_analytic_values():
    # flat signal, unit test function on the unit interval: c = 0, v = sigma^2
    model = CalibrationModel(
        g=lambda pts: np.zeros(pts.shape[0]), sigma=1.0, box=Box.unit(1), bandwidth=0.1
    )
    report = clt_check(model, unit_psi, 100, 5, seed=1)
    assert report.c_true == pytest.approx(0.0, abs=1e-12)
    assert report.v_analytic == pytest.approx(1.0, rel=1e-10)
    assert report.n == 100
    assert report.replications == 5
    assert report.draws.shape == (5,)
    assert np.isnan(report.normality_pvalue)  # too few replications to test
    assert not report.used_true_density


def test_clt_check_sine_signal_constants():
    model = CalibrationModel(
        g=lambda pts: np.sin(np.pi * pts[:, 0]), sigma=0.5, box=Box.unit(1), bandwidth=0.1
    )
    report = clt_check(model, unit_psi, 200, 3, seed=2)
    assert report.c_true == pytest.approx(2.0 / np.pi, rel=1e-10)
    assert report.v_analytic == pytest.approx(0.25, rel=1e-10)


def test_clt_check_draws_are_reproducible():
    model = CalibrationModel(
        g=lambda pts: np.zeros(pts.shape[0]), sigma=1.0, box=Box.unit(1), bandwidth=0.1
    )
    a = clt_check(model, unit_psi, 60, 4, seed=5)
    b = clt_check(model, unit_psi, 60, 4, seed=5)
    np.testing.assert_array_equal(a.draws, b.draws)
    c = clt_check(model, unit_psi, 60, 4, seed=6)
    assert not np.array_equal(a.draws, c.draws)


def test_clt_check_validation():
    model = CalibrationModel(
        g=lambda pts: np.zeros(pts.shape[0]), sigma=1.0, box=Box.unit(1), bandwidth=0.1
    )
    with pytest.raises(ValueError):
        clt_check(model, unit_psi, 2, 5)
    with pytest.raises(ValueError):
        clt_check(model, unit_psi, 100, 0)


def test_noise_free_signal_replications_concentrate():
    # without observation noise the root(n)-scaled error of the smoothed
    # estimate collapses; the analytic variance for sigma=0 is zero
    model = CalibrationModel(
        g=lambda pts: np.sin(np.pi * pts[:, 0]),
        sigma=0.0,
        box=Box.unit(1),
        boundary_correction=True,
    )
    report = clt_check(model, unit_psi, 1000, 50, seed=0)
    assert report.v_analytic == 0.0
    assert report.empirical_variance < 0.05
    # the smoothing bias of order root(n) h^2 = 0.32 remains visible
    assert abs(report.empirical_mean) < 0.6


def test_plug_in_beats_the_known_density_average():
    # dividing by the estimated density removes the signal's contribution
    # to the variance; dividing by the true density keeps it
    model = CalibrationModel(
        g=lambda pts: np.sin(np.pi * pts[:, 0]),
        sigma=0.5,
        box=Box.unit(1),
        boundary_correction=True,
    )
    plug = clt_check(model, unit_psi, 500, 100, seed=0)
    known = clt_check(model, unit_psi, 500, 100, seed=0, use_true_density=True)
    assert known.used_true_density
    assert plug.empirical_variance < known.empirical_variance


def test_draws_csv_round_trip():
    model = CalibrationModel(
        g=lambda pts: np.zeros(pts.shape[0]), sigma=1.0, box=Box.unit(1), bandwidth=0.1
    )
    report = clt_check(model, unit_psi, 60, 8, seed=3)
    buffer = io.StringIO()
    write_draws_csv(report, buffer)
    lines = buffer.getvalue().strip().split("\n")
    assert lines[0] == "draw"
    back = np.array([float(v) for v in lines[1:]])
    np.testing.assert_array_equal(back, report.draws)


def test_draws_csv_to_a_path(tmp_path):
    model = CalibrationModel(
        g=lambda pts: np.zeros(pts.shape[0]), sigma=1.0, box=Box.unit(1), bandwidth=0.1
    )
    report = clt_check(model, unit_psi, 60, 4, seed=4)
    target = tmp_path / "draws.csv"
    write_draws_csv(report, target)
    back = np.loadtxt(target, skiprows=1)
    np.testing.assert_array_equal(back, report.draws)
