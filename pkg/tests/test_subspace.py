"""Projector algebra and subspace distances."""
import numpy as np
import pytest

from loomean import (
    SubspaceEstimate,
    principal_directions,
    projector_from_basis,
    subspace_error,
    subspace_from_vectors,
)


def random_orthogonal(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)))
    return q * np.sign(np.diag(r))


def test_principal_directions_against_a_hand_matrix():
    moment = np.diag([3.0, 1.0, 2.0])
    values, basis = principal_directions(moment, 2)
    np.testing.assert_allclose(values, [3.0, 2.0, 1.0], rtol=1e-12)
    np.testing.assert_allclose(np.abs(basis[:, 0]), [1.0, 0.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(np.abs(basis[:, 1]), [0.0, 0.0, 1.0], atol=1e-12)
    # the sign convention makes the leading coordinate positive
    assert basis[0, 0] > 0
    assert basis[2, 1] > 0


def test_principal_directions_recover_a_planted_spectrum():
    rng = np.random.default_rng(12)
    d = 6
    q = random_orthogonal(rng, d)
    spectrum = np.array([9.0, 7.0, 4.0, 2.0, 1.0, 0.5])
    moment = q @ np.diag(spectrum) @ q.T
    values, basis = principal_directions(moment, 3)
    np.testing.assert_allclose(values, spectrum, rtol=1e-10)
    recovered = projector_from_basis(basis)
    expected = projector_from_basis(q[:, :3])
    np.testing.assert_allclose(recovered, expected, atol=1e-10)


def test_principal_directions_validation():
    with pytest.raises(ValueError):
        principal_directions(np.ones((2, 3)), 1)
    with pytest.raises(ValueError):
        principal_directions(np.eye(3), 0)
    with pytest.raises(ValueError):
        principal_directions(np.eye(3), 4)


def test_subspace_estimate_validates_its_pieces():
    basis = np.eye(3)[:, :2]
    proj = projector_from_basis(basis)
    values = np.array([2.0, 1.0, 0.0])
    est = SubspaceEstimate(basis, proj, values)
    assert est.p == 2
    with pytest.raises(ValueError, match="orthonormal"):
        SubspaceEstimate(basis * 2.0, proj, values)
    with pytest.raises(ValueError, match="idempotent"):
        SubspaceEstimate(basis, proj * 0.5, values)
    with pytest.raises(ValueError, match="symmetric"):
        bad = proj.copy()
        bad[0, 1] += 1.0
        SubspaceEstimate(basis, bad, values)
    with pytest.raises(ValueError, match="trace"):
        SubspaceEstimate(basis, np.eye(3), values)
    with pytest.raises(ValueError):
        SubspaceEstimate(basis, proj, values[:2])


def test_subspace_from_vectors():
    vectors = np.array([[2.0, 0.0], [0.0, 0.5], [1.5, 0.0]])
    est = subspace_from_vectors(vectors, 1)
    np.testing.assert_allclose(np.abs(est.basis[:, 0]), [1.0, 0.0], atol=1e-12)
    assert est.eigenvalues[0] == pytest.approx(4.0 + 2.25, rel=1e-12)
    assert est.eigenvalues[1] == pytest.approx(0.25, rel=1e-12)
    with pytest.raises(ValueError):
        subspace_from_vectors(np.ones(3), 1)


def test_subspace_error_extremes():
    e1 = projector_from_basis(np.array([[1.0], [0.0]]))
    e2 = projector_from_basis(np.array([[0.0], [1.0]]))
    assert subspace_error(e1, e1) == 0.0
    # orthogonal lines sit at the maximal distance sqrt(2)
    assert subspace_error(e1, e2) == pytest.approx(np.sqrt(2.0), rel=1e-12)


def test_subspace_error_complementary_subspaces():
    # a p-plane against its orthogonal complement in dimension d = 2p
    basis = np.eye(4)[:, :2]
    comp = np.eye(4)[:, 2:]
    err = subspace_error(projector_from_basis(basis), projector_from_basis(comp))
    assert err == pytest.approx(2.0, rel=1e-12)


def test_subspace_error_is_rotation_invariant():
    rng = np.random.default_rng(21)
    d = 5
    a = projector_from_basis(random_orthogonal(rng, d)[:, :2])
    b = projector_from_basis(random_orthogonal(rng, d)[:, :2])
    q = random_orthogonal(rng, d)
    before = subspace_error(a, b)
    after = subspace_error(q @ a @ q.T, q @ b @ q.T)
    assert after == pytest.approx(before, rel=1e-9)


def test_subspace_error_rejects_non_projectors():
    e1 = projector_from_basis(np.array([[1.0], [0.0]]))
    with pytest.raises(ValueError, match="idempotent"):
        subspace_error(e1 * 0.9, e1)
    with pytest.raises(ValueError, match="symmetric"):
        skew = np.array([[1.0, 0.1], [0.0, 0.0]])
        subspace_error(e1, skew)
    with pytest.raises(ValueError, match="ambient"):
        subspace_error(e1, np.eye(3))
