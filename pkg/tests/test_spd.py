import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdlk.errors import ShapeMismatch, SingularPoint, StepTooLarge
from sdlk.spd import (
    directional_rgrad_diff,
    egrad_to_rgrad,
    is_spd,
    metric_inner,
    metric_norm,
    random_spd,
    retract,
    spd_inverse,
    symmetrize,
)


def _sym(rng, H):
    return symmetrize(rng.standard_normal((H, H)))


def test_rgrad_at_identity_symmetrizes(rng):
    G = rng.standard_normal((3, 3))
    np.testing.assert_allclose(egrad_to_rgrad(np.eye(3), G), (G + G.T) / 2, atol=1e-15)
    S = _sym(rng, 3)
    np.testing.assert_allclose(egrad_to_rgrad(np.eye(3), S), S, atol=1e-15)


def test_rgrad_hand_value():
    np.testing.assert_array_equal(egrad_to_rgrad(np.diag([2.0, 3.0]), np.eye(2)), np.diag([4.0, 9.0]))


def test_rgrad_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        egrad_to_rgrad(np.eye(2), np.eye(3))


def test_metric_at_identity_is_frobenius(rng):
    a, b = _sym(rng, 4), _sym(rng, 4)
    assert metric_inner(np.eye(4), a, b) == pytest.approx(np.trace(a @ b), rel=1e-13)


def test_metric_hand_value():
    assert metric_inner(np.array([[2.0]]), np.array([[1.0]]), np.array([[1.0]])) == 0.25


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), H=st.integers(1, 6))
def test_metric_is_positive_and_symmetric(seed, H):
    rng = np.random.default_rng(seed)
    M = random_spd(H, rng)
    a, b = _sym(rng, H), _sym(rng, H)
    assert metric_inner(M, a, a) > 0
    assert metric_inner(M, a, b) == pytest.approx(metric_inner(M, b, a), rel=1e-9, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), H=st.integers(1, 5))
def test_metric_is_affine_invariant(seed, H):
    rng = np.random.default_rng(seed)
    M = random_spd(H, rng) + np.eye(H)
    a, b = _sym(rng, H), _sym(rng, H)
    P = rng.standard_normal((H, H)) + 3 * np.eye(H)
    lhs = metric_inner(P @ M @ P.T, P @ a @ P.T, P @ b @ P.T)
    assert lhs == pytest.approx(metric_inner(M, a, b), rel=1e-7, abs=1e-9)


def test_retract_zero_and_identity(rng):
    M = random_spd(3, rng)
    np.testing.assert_allclose(retract(M, np.zeros((3, 3))), M, atol=1e-14)
    np.testing.assert_allclose(retract(np.eye(2), np.eye(2)), 2.5 * np.eye(2), atol=1e-15)


@pytest.mark.parametrize("method", ["second-order", "exp"])
def test_retract_is_first_order_accurate(method, rng):
    M = random_spd(4, rng) + np.eye(4)
    xi = _sym(rng, 4)
    errs = [np.linalg.norm(retract(M, t * xi, method) - (M + t * xi)) for t in (1e-2, 1e-3, 1e-4)]
    slopes = np.diff(np.log10(errs)) / np.diff(np.log10([1e-2, 1e-3, 1e-4]))
    assert np.all(slopes > 1.8)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), H=st.integers(1, 6), scale=st.floats(0.01, 10))
def test_retraction_stays_spd(seed, H, scale):
    rng = np.random.default_rng(seed)
    M = random_spd(H, rng) + 0.1 * np.eye(H)
    xi = scale * _sym(rng, H)
    try:
        R = retract(M, xi)
    except StepTooLarge:
        return
    assert is_spd(R)


def test_exp_retraction_matches_scalar_exponential():
    R = retract(np.array([[2.0]]), np.array([[1.0]]), method="exp")
    assert R[0, 0] == pytest.approx(2.0 * np.exp(0.5), rel=1e-14)


def test_singular_point_detected():
    with pytest.raises(SingularPoint):
        spd_inverse(np.diag([1.0, 0.0]))
    with pytest.raises(SingularPoint):
        metric_inner(np.diag([1.0, -1.0]), np.eye(2), np.eye(2))


def test_spd_inverse(rng):
    M = random_spd(5, rng)
    np.testing.assert_allclose(spd_inverse(M) @ M, np.eye(5), atol=1e-8)


def test_fd_hessian_of_trace_quadratic():
    # f = 1/2 tr(M^2): rgrad(M) = M^3, whose derivative at I along I is 3 I
    hv = directional_rgrad_diff(lambda M: M @ M @ M, np.eye(3), np.eye(3), h=1e-6)
    np.testing.assert_allclose(hv, 3 * np.eye(3), atol=1e-5)


def test_fd_hessian_zero_direction(rng):
    M = random_spd(3, rng)
    np.testing.assert_array_equal(directional_rgrad_diff(lambda X: X, M, np.zeros((3, 3))),
                                  np.zeros((3, 3)))


def test_metric_norm(rng):
    M = random_spd(3, rng)
    xi = _sym(rng, 3)
    assert metric_norm(M, xi) ** 2 == pytest.approx(metric_inner(M, xi, xi), rel=1e-12)
