"""Rotation-kernel tests: analytic oracles plus randomized round trips."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from safeflow.errors import DomainError, NearAntipodal, NotSkewSymmetric
from safeflow import so3


def test_hat_matches_known_matrix():
    m = so3.hat(np.array([1.0, 2.0, 3.0]))
    expected = np.array([
        [0.0, -3.0, 2.0],
        [3.0, 0.0, -1.0],
        [-2.0, 1.0, 0.0],
    ])
    assert_allclose(m, expected)


def test_hat_reproduces_cross_product():
    rng = np.random.default_rng(0)
    for _ in range(200):
        a = rng.normal(size=3)
        b = rng.normal(size=3)
        assert_allclose(so3.hat(a) @ b, np.cross(a, b), atol=1e-14)


def test_vee_is_bitwise_inverse_of_hat():
    rng = np.random.default_rng(1)
    for _ in range(200):
        v = rng.normal(size=3)
        out = so3.vee(so3.hat(v))
        assert np.array_equal(out, v)


def test_vee_rejects_non_skew_input():
    with pytest.raises(NotSkewSymmetric):
        so3.vee(np.eye(3))


def test_exp_map_identity_at_zero():
    assert_allclose(so3.exp_map(np.zeros(3)), np.eye(3))


def test_exp_map_quarter_turn_about_z():
    r = so3.exp_map(np.array([0.0, 0.0, np.pi / 2]))
    expected = np.array([
        [0.0, -1.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0],
    ])
    assert_allclose(r, expected, atol=1e-15)


def test_exp_map_produces_rotations():
    rng = np.random.default_rng(2)
    for _ in range(500):
        v = rng.normal(size=3) * rng.uniform(0, 4)
        r = so3.exp_map(v)
        assert_allclose(r.T @ r, np.eye(3), atol=1e-12)
        assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-12)


def test_log_norm_equals_rotation_angle():
    # oracle: angle recomputed from the trace, independent of log_map
    rng = np.random.default_rng(3)
    for _ in range(500):
        r = so3.random_rotation(rng)
        angle = np.arccos(np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0))
        assert np.linalg.norm(so3.log_map(r)) == pytest.approx(angle, abs=1e-9)


def test_exp_log_round_trip():
    rng = np.random.default_rng(4)
    for _ in range(1000):
        r = so3.random_rotation(rng)
        assert_allclose(so3.exp_map(so3.log_map(r)), r, atol=1e-9)


def test_log_exp_round_trip_small_angles():
    rng = np.random.default_rng(5)
    for scale in (1e-12, 1e-9, 1e-8, 1e-4, 1.0):
        for _ in range(100):
            v = rng.normal(size=3)
            v *= scale / np.linalg.norm(v)
            assert_allclose(so3.log_map(so3.exp_map(v)), v, atol=1e-12 + 1e-9 * scale)


def test_log_map_rejects_near_half_turn():
    axis = np.array([1.0, 0.0, 0.0])
    with pytest.raises(NearAntipodal):
        so3.log_map(so3.exp_map((np.pi - 1e-9) * axis))


def test_log_rel_zero_for_equal_frames():
    rng = np.random.default_rng(6)
    r = so3.random_rotation(rng)
    assert_allclose(so3.log_rel(r, r), np.zeros(3), atol=1e-12)


def test_log_rel_norm_is_geodesic_distance():
    rng = np.random.default_rng(7)
    for _ in range(200):
        r_a = so3.random_rotation(rng)
        v = rng.normal(size=3)
        v *= rng.uniform(0, np.pi - 1e-2) / np.linalg.norm(v)
        r_b = r_a @ so3.exp_map(v)
        d = np.linalg.norm(so3.log_rel(r_a, r_b))
        assert d == pytest.approx(np.linalg.norm(v), abs=1e-9)
        assert d == pytest.approx(so3.geodesic_distance(r_a, r_b), abs=1e-9)


def test_slerp_endpoints_exact():
    rng = np.random.default_rng(8)
    r_a = so3.random_rotation(rng)
    r_b = so3.random_rotation(rng)
    assert np.array_equal(so3.slerp(r_a, r_b, 0.0), r_a)
    assert np.array_equal(so3.slerp(r_a, r_b, 1.0), r_b)


def test_slerp_distance_proportional():
    rng = np.random.default_rng(9)
    for _ in range(100):
        r_a = so3.random_rotation(rng)
        v = rng.normal(size=3)
        v *= rng.uniform(1e-3, np.pi - 1e-2) / np.linalg.norm(v)
        r_b = r_a @ so3.exp_map(v)
        total = so3.geodesic_distance(r_a, r_b)
        for s in (0.25, 0.5, 0.75):
            r_s = so3.slerp(r_a, r_b, s)
            assert so3.geodesic_distance(r_a, r_s) == pytest.approx(s * total, abs=1e-9)


def test_slerp_rejects_out_of_range_fraction():
    r = np.eye(3)
    with pytest.raises(DomainError):
        so3.slerp(r, r, 1.5)
    with pytest.raises(DomainError):
        so3.slerp(r, r, -0.1)


def test_check_rotation_rejects_bad_matrices():
    with pytest.raises(DomainError):
        so3.check_rotation(np.eye(3) * 1.001)
    flipped = np.diag([1.0, 1.0, -1.0])
    with pytest.raises(DomainError):
        so3.check_rotation(flipped)


def test_project_to_rotation_recovers_perturbed():
    rng = np.random.default_rng(10)
    for _ in range(100):
        r = so3.random_rotation(rng)
        noisy = r + rng.normal(size=(3, 3)) * 1e-6
        fixed = so3.project_to_rotation(noisy)
        assert_allclose(fixed.T @ fixed, np.eye(3), atol=1e-12)
        assert so3.geodesic_distance(r, fixed) < 1e-5


def test_quaternion_round_trip():
    rng = np.random.default_rng(11)
    for _ in range(500):
        r = so3.random_rotation(rng, max_angle=np.pi - 1e-6)
        q = so3.matrix_to_quat(r)
        assert np.linalg.norm(q) == pytest.approx(1.0, abs=1e-12)
        assert q[0] >= 0
        assert_allclose(so3.quat_to_matrix(q), r, atol=1e-12)


def test_quat_to_matrix_known_values():
    assert_allclose(so3.quat_to_matrix([1.0, 0.0, 0.0, 0.0]), np.eye(3))
    half = np.sqrt(0.5)
    r = so3.quat_to_matrix([half, 0.0, 0.0, half])
    assert_allclose(r, so3.exp_map([0.0, 0.0, np.pi / 2]), atol=1e-12)


def test_tangent_mean_of_symmetric_pair_is_identity():
    v = np.array([0.3, -0.2, 0.5])
    mean = so3.tangent_mean([so3.exp_map(v), so3.exp_map(-v)])
    assert_allclose(mean, np.eye(3), atol=1e-12)
