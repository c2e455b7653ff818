"""Index-space estimators built from average derivatives of test functions."""
import warnings

import numpy as np
import pytest
from sklearn.base import clone

from loomean import (
    ADE,
    ADETF,
    AdaptiveADETF,
    EstimationError,
    KernelSpec,
    ModelSpec,
    TestFunction,
    dependence_score,
    generate,
    index_direction,
    loo_density,
    projector_from_basis,
    sample_scale,
    subspace_error,
)
from loomean.indexspace import _solve_index_space
from loomean.kernels import adetf_bandwidth

pytestmark = pytest.mark.filterwarnings("ignore:dropping")


def rotation_3d(theta):
    rot = np.eye(3)
    rot[:2, :2] = [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
    return rot


def test_sample_scale_hand_value():
    x = np.array([[0.0, 0.0], [2.0, 0.0]])
    assert sample_scale(x) == pytest.approx(1.0, rel=1e-12)


def test_test_function_values_and_support():
    tf = TestFunction(np.zeros(2), 2.0)
    assert tf.dimension == 2
    assert tf.value(np.zeros((1, 2)))[0] == pytest.approx(1.0)
    # at z^2 = 1/4 the bump is (1 - 1/4)^2
    assert tf.value(np.array([[1.0, 0.0]]))[0] == pytest.approx(0.5625, rel=1e-12)
    outside = np.array([[2.0, 0.0], [3.0, 1.0]])
    np.testing.assert_array_equal(tf.value(outside), [0.0, 0.0])
    np.testing.assert_array_equal(tf.gradient(outside), np.zeros((2, 2)))
    np.testing.assert_array_equal(tf.gradient(np.zeros((1, 2))), np.zeros((1, 2)))


def test_test_function_validation():
    with pytest.raises(ValueError):
        TestFunction(np.zeros(2), 0.0)
    with pytest.raises(ValueError):
        TestFunction(np.array([np.nan]), 1.0)


def test_test_function_gradient_matches_finite_differences():
    tf = TestFunction(np.array([0.3, -0.2]), 1.7)
    rng = np.random.default_rng(13)
    step = 1e-6
    pts = rng.uniform(-1.5, 1.5, size=(100, 2)) + tf.center
    grads = tf.gradient(pts)
    for point, grad in zip(pts, grads):
        for k in range(2):
            lo, hi = point.copy(), point.copy()
            lo[k] -= step
            hi[k] += step
            fd = (tf.value(hi[None, :])[0] - tf.value(lo[None, :])[0]) / (2.0 * step)
            assert abs(grad[k] - fd) / max(abs(fd), 1e-3) < 1e-6


def test_dependence_score_monotone_hand_value():
    # perfect association on a 4x4 equal-count table scores H - 1 = 3
    y = np.arange(16.0)
    assert dependence_score(y, y, 4) == pytest.approx(3.0, rel=1e-12)


def test_dependence_score_balanced_table_is_zero():
    y = np.arange(16.0)
    z = np.array([(i % 4) * 4 + i // 4 for i in range(16)], dtype=float)
    assert dependence_score(y, z, 4) == 0.0


def test_dependence_score_monotone_invariance():
    rng = np.random.default_rng(14)
    y = rng.normal(size=100)
    z = rng.normal(size=100)
    base = dependence_score(y, z, 5)
    assert dependence_score(np.exp(y), z, 5) == pytest.approx(base, rel=1e-12)
    assert dependence_score(y, 3.0 * z + 1.0, 5) == pytest.approx(base, rel=1e-12)


def test_dependence_score_constant_input_warns():
    z = np.arange(25.0)
    with pytest.warns(UserWarning, match="constant"):
        assert dependence_score(np.ones(25), z, 5) == 0.0


def test_dependence_score_validation():
    y = np.arange(15.0)
    with pytest.raises(ValueError):
        dependence_score(y, y, 4)  # n < H^2
    with pytest.raises(ValueError):
        dependence_score(y, y, 1)
    with pytest.raises(ValueError):
        dependence_score(y, np.arange(10.0))


def test_dependence_score_default_bins():
    rng = np.random.default_rng(15)
    y = rng.normal(size=24)
    z = rng.normal(size=24)
    assert dependence_score(y, z) == dependence_score(y, z, 4)


def test_index_direction_zero_response():
    rng = np.random.default_rng(16)
    x = rng.standard_normal((50, 2))
    tf = TestFunction(np.zeros(2), 1.5)
    direction = index_direction(x, np.zeros(50), tf, h=1.0)
    np.testing.assert_array_equal(direction, np.zeros(2))


def test_index_direction_disjoint_support():
    rng = np.random.default_rng(17)
    x = rng.standard_normal((50, 2))
    far = TestFunction(np.array([40.0, 40.0]), 1.5)
    direction = index_direction(x, rng.normal(size=50), far, h=1.0)
    np.testing.assert_array_equal(direction, np.zeros(2))


def test_index_direction_aligns_with_a_linear_link():
    # noise-free linear link: the direction is collinear with beta
    beta = np.array([0.6, 0.8])
    tf = TestFunction(np.zeros(2), 1.5)
    rng = np.random.default_rng(0)
    x = rng.standard_normal((2000, 2))
    direction = index_direction(x, x @ beta, tf)
    cos = abs(direction @ beta) / np.linalg.norm(direction)
    assert np.degrees(np.arccos(min(1.0, cos))) < 5.0


def test_index_direction_accepts_a_table():
    rng = np.random.default_rng(18)
    x = rng.standard_normal((100, 2))
    y = rng.normal(size=100)
    tf = TestFunction(np.zeros(2), 1.5)
    table = loo_density(x, KernelSpec.epanechnikov(2), 1.0)
    a = index_direction(x, y, tf, h=1.0)
    b = index_direction(x, y, tf, table=table)
    np.testing.assert_array_equal(a, b)
    with pytest.raises(ValueError):
        index_direction(x, y, TestFunction(np.zeros(3), 1.5), h=1.0)


def test_adetf_fitted_attributes():
    data = generate(ModelSpec("M1", d=3, n=100), 1)
    est = ADETF(p=1).fit(data.x, data.y)
    assert est.basis_.shape == (3, 1)
    assert est.projector_.shape == (3, 3)
    assert est.eigenvalues_.shape == (3,)
    assert np.all(np.diff(est.eigenvalues_) <= 1e-12)
    assert est.candidates_.directions.shape == (100, 3)
    assert est.candidates_.scores.shape == (100,)
    assert est.candidates_.selected.shape == (10,)  # ceil(sqrt(100))
    assert est.n_features_in_ == 3
    scale = sample_scale(data.x)
    assert est.test_scale_ == pytest.approx(scale, rel=1e-12)
    assert est.bandwidth_ == pytest.approx(adetf_bandwidth(100, 3, scale), rel=1e-12)
    # projector laws
    np.testing.assert_allclose(est.projector_, est.projector_.T, atol=1e-12)
    np.testing.assert_allclose(est.projector_ @ est.projector_, est.projector_, atol=1e-10)
    assert np.trace(est.projector_) == pytest.approx(1.0, abs=1e-10)


def test_adetf_selection_count_rounds_up():
    data = generate(ModelSpec("M1", d=2, n=90), 2)
    est = ADETF(p=1).fit(data.x, data.y)
    assert est.candidates_.selected.shape == (10,)  # ceil(sqrt(90))


def test_adetf_recovers_a_single_index():
    spec = ModelSpec("M1", d=3, n=400)
    for seed in range(3):
        data = generate(spec, seed)
        est = ADETF(p=1).fit(data.x, data.y)
        assert subspace_error(est.projector_, spec.true_projector()) < 0.5


def test_adetf_transform_projects_onto_the_basis():
    data = generate(ModelSpec("M1", d=3, n=100), 3)
    est = ADETF(p=1).fit(data.x, data.y)
    reduced = est.transform(data.x)
    np.testing.assert_allclose(reduced, data.x @ est.basis_, rtol=1e-12)
    with pytest.raises(ValueError):
        est.transform(np.zeros((5, 4)))


def test_adetf_rotation_equivariance():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((400, 3))
    y = np.sin(x @ np.array([1.0, 0.0, 0.0])) + 0.1 * rng.standard_normal(400)
    rot = rotation_3d(0.7)
    plain = ADETF(p=1).fit(x, y)
    turned = ADETF(p=1).fit(x @ rot.T, y)
    np.testing.assert_allclose(turned.projector_, rot @ plain.projector_ @ rot.T, atol=1e-8)


def test_adetf_scaling_the_response_changes_nothing():
    data = generate(ModelSpec("M1", d=3, n=150), 5)
    a = ADETF(p=1).fit(data.x, data.y)
    b = ADETF(p=1).fit(data.x, 2.0 * data.y)
    np.testing.assert_array_equal(np.sort(a.candidates_.selected), np.sort(b.candidates_.selected))
    np.testing.assert_array_equal(a.projector_, b.projector_)


def test_adetf_validation():
    rng = np.random.default_rng(20)
    x = rng.standard_normal((8, 2))
    with pytest.raises(ValueError, match="at least 9"):
        ADETF(p=1).fit(x, np.arange(8.0))
    x = rng.standard_normal((20, 2))
    with pytest.raises(ValueError, match="p must be"):
        ADETF(p=3).fit(x, np.arange(20.0))
    with pytest.raises(ValueError, match="degenerate"):
        ADETF(p=1).fit(np.zeros((20, 2)), np.arange(20.0))
    with pytest.raises(ValueError, match="kernel dimension"):
        ADETF(p=1, kernel=KernelSpec.epanechnikov(3)).fit(x, np.arange(20.0))


def test_adetf_zero_response_fails_loudly():
    rng = np.random.default_rng(21)
    x = rng.standard_normal((30, 2))
    with pytest.raises(EstimationError, match="vanished"):
        ADETF(p=1).fit(x, np.zeros(30))


def test_adetf_is_cloneable():
    est = ADETF(p=2, bandwidth=0.8, n_select=7)
    copy = clone(est)
    assert copy.get_params() == est.get_params()
    data = generate(ModelSpec("M4", d=3, n=100), 6)
    a = est.fit(data.x, data.y)
    b = copy.fit(data.x, data.y)
    np.testing.assert_array_equal(a.projector_, b.projector_)


def test_solve_with_identity_transform_matches_plain():
    data = generate(ModelSpec("M1", d=3, n=120), 7)
    spec = KernelSpec.epanechnikov(3)
    h = adetf_bandwidth(120, 3, sample_scale(data.x))
    plain = _solve_index_space(
        data.x, data.y, 1, spec, h, None, None, None, 1e-12, "skip", 1
    )
    routed = _solve_index_space(
        data.x, data.y, 1, spec, h, None, None, None, 1e-12, "skip", 1, transform=np.eye(3)
    )
    np.testing.assert_array_equal(plain[0].projector, routed[0].projector)
    np.testing.assert_array_equal(plain[1].directions, routed[1].directions)


def test_adaptive_with_no_refinement_is_plain_adetf():
    data = generate(ModelSpec("M4", d=4, n=150), 8)
    plain = ADETF(p=2).fit(data.x, data.y)
    frozen = AdaptiveADETF(p=2, n_refine=0).fit(data.x, data.y)
    np.testing.assert_array_equal(plain.projector_, frozen.projector_)
    assert frozen.transform_matrix_ is None


def test_adaptive_validation():
    data = generate(ModelSpec("M1", d=2, n=50), 9)
    with pytest.raises(ValueError, match="eps"):
        AdaptiveADETF(eps=0.0).fit(data.x, data.y)
    with pytest.raises(ValueError, match="n_refine"):
        AdaptiveADETF(n_refine=-1).fit(data.x, data.y)
    with pytest.raises(ValueError, match="bandwidth_shrink"):
        AdaptiveADETF(bandwidth_shrink=0.0).fit(data.x, data.y)


def test_adaptive_refinement_updates_the_state():
    data = generate(ModelSpec("M1", d=3, n=200), 10)
    plain = ADETF(p=1).fit(data.x, data.y)
    refined = AdaptiveADETF(p=1).fit(data.x, data.y)
    assert refined.transform_matrix_.shape == (3, 3)
    assert refined.bandwidth_ == pytest.approx(0.7 * plain.bandwidth_, rel=1e-12)
    # the reshaping matrix is symmetric positive definite
    np.testing.assert_allclose(refined.transform_matrix_, refined.transform_matrix_.T)
    assert np.all(np.linalg.eigvalsh(refined.transform_matrix_) > 0.0)


def test_adaptive_refinement_helps_on_a_two_index_model():
    # paired replications of the hardest benchmark model
    from loomean.simbench import BenchCell, run_benchmark

    cell = BenchCell(ModelSpec("M4", d=6, n=200, param=0.5), ("adetf", "adaptive-adetf"), 100)
    results = run_benchmark([cell], master_seed=0)
    plain = np.median([r.error for r in results if r.method == "adetf"])
    adaptive = np.median([r.error for r in results if r.method == "adaptive-adetf"])
    assert adaptive <= plain


def test_ade_zero_response_is_exactly_zero():
    rng = np.random.default_rng(22)
    x = rng.standard_normal((50, 2))
    ade = ADE().fit(x, np.zeros(50))
    np.testing.assert_array_equal(ade.direction_, np.zeros(2))
    assert ade.basis_ is None
    assert ade.projector_ is None


def test_ade_constant_response_is_nearly_zero():
    for seed in range(3):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((2000, 2))
        ade = ADE().fit(x, np.full(2000, 3.0))
        assert np.linalg.norm(ade.direction_) < 0.1


def test_ade_aligns_with_a_linear_link():
    beta = np.array([0.6, 0.8])
    for seed in range(3):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((1000, 2))
        y = x @ beta + 0.1 * rng.standard_normal(1000)
        ade = ADE().fit(x, y)
        cos = abs(ade.direction_ @ beta) / np.linalg.norm(ade.direction_)
        assert np.degrees(np.arccos(min(1.0, cos))) < 5.0


def test_ade_fails_on_an_even_link():
    # the average gradient of an even link under a symmetric design is 0,
    # so the normalized direction is noise: the subspace error sits near
    # its maximum sqrt(2) in higher dimensions
    spec = ModelSpec("M2", d=6, n=200, param=0.0)
    errors = []
    for seed in range(5):
        data = generate(spec, seed)
        ade = ADE().fit(data.x, data.y)
        errors.append(subspace_error(ade.projector_, spec.true_projector()))
    assert np.median(errors) > 1.0


def test_ade_trim_levels():
    rng = np.random.default_rng(23)
    x = rng.standard_normal((200, 2))
    y = x[:, 0] + 0.1 * rng.standard_normal(200)
    default = ADE().fit(x, y)
    assert default.trim_ > 0.0
    fixed = ADE(trim=1e-9).fit(x, y)
    assert fixed.trim_ == 1e-9
    with pytest.raises(EstimationError, match="trim"):
        ADE(trim=1e6).fit(x, y)


def test_ade_validation():
    with pytest.raises(ValueError):
        ADE().fit(np.zeros((1, 2)), np.zeros(1))
    with pytest.raises(ValueError, match="degenerate"):
        ADE().fit(np.ones((30, 2)), np.arange(30.0))
