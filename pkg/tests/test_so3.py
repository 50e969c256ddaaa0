import numpy as np
import pytest

from pitotnav import so3

from oracles import rotation_angle_quat, series_expm, skew_oracle

E1, E2, E3 = np.eye(3)


def test_skew_cross_identity():
    assert np.array_equal(so3.skew(E1) @ E2, E3)
    assert np.array_equal(so3.skew(np.zeros(3)) @ np.array([1.0, -2.0, 3.0]), np.zeros(3))


def test_skew_antisymmetry():
    K = so3.skew([1.0, 2.0, 3.0])
    assert np.array_equal(K.T, -K)


def test_skew_linearity():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a, b = rng.standard_normal(2)
        u, v = rng.standard_normal(3), rng.standard_normal(3)
        lhs = so3.skew(a * u + b * v)
        rhs = a * so3.skew(u) + b * so3.skew(v)
        assert np.allclose(lhs, rhs, atol=1e-12)


def test_exp_identity():
    assert np.array_equal(so3.exp_so3(np.zeros(3)), np.eye(3))


def test_exp_quarter_turn():
    R = so3.exp_so3([0.0, 0.0, np.pi / 2])
    assert np.allclose(R @ E1, E2, atol=1e-12)


def test_exp_matches_series_oracle():
    rng = np.random.default_rng(2)
    for _ in range(300):
        axis = rng.standard_normal(3)
        axis /= np.linalg.norm(axis)
        theta = axis * rng.uniform(1e-9, np.pi)
        assert np.allclose(so3.exp_so3(theta), series_expm(theta), atol=1e-12)


def test_exp_small_angle_branch_continuity():
    axis = np.array([0.3, -0.5, 0.8])
    axis /= np.linalg.norm(axis)
    below = so3.exp_so3(axis * so3.SMALL_ANGLE * (1.0 - 1e-6))
    above = so3.exp_so3(axis * so3.SMALL_ANGLE * (1.0 + 1e-6))
    assert np.linalg.norm(below - above) < 1e-10
    assert np.allclose(below, series_expm(axis * so3.SMALL_ANGLE * (1.0 - 1e-6)), atol=1e-14)


def test_exp_stays_on_so3():
    rng = np.random.default_rng(3)
    for scale in (1e-8, 1e-3, 1.0, np.pi):
        theta = rng.standard_normal(3)
        theta *= scale / np.linalg.norm(theta)
        assert so3.is_rotation(so3.exp_so3(theta), tol=1e-9)


def test_reg_projector_kernel_and_complement():
    P = so3.reg_projector(E3)
    assert np.allclose(P @ E3, np.zeros(3), atol=1e-15)
    assert np.allclose(P @ E1, E1, atol=1e-15)
    assert np.array_equal(so3.reg_projector(np.zeros(3)), np.zeros((3, 3)))


def test_reg_projector_eigenvalues():
    rng = np.random.default_rng(4)
    for _ in range(10):
        u = rng.standard_normal(3)
        w = np.sort(np.linalg.eigvalsh(so3.reg_projector(u)))
        n2 = u @ u
        assert np.allclose(w, [0.0, n2, n2], atol=1e-9 * max(1.0, n2))


def test_random_rotation_invariants_and_seeding():
    for seed in range(10):
        R = so3.random_rotation(seed)
        assert np.linalg.norm(R @ R.T - np.eye(3)) < 1e-12
        assert abs(np.linalg.det(R) - 1.0) < 1e-12
    assert not np.allclose(so3.random_rotation(0), so3.random_rotation(1))


def test_random_rotation_uniformity():
    # mean trace over the uniform measure is 0
    rng = np.random.default_rng(5)
    traces = [np.trace(so3.random_rotation(rng)) for _ in range(10_000)]
    assert abs(np.mean(traces)) < 0.1


def test_attitude_error_basics():
    R = so3.random_rotation(6)
    assert abs(so3.attitude_error(R, R)) < 1e-12
    assert abs(so3.attitude_error(so3.exp_so3([np.pi, 0.0, 0.0]), np.eye(3)) - 4.0) < 1e-12


def test_attitude_error_matches_angle_oracle():
    rng = np.random.default_rng(7)
    for _ in range(50):
        R_ref = so3.random_rotation(rng)
        R_hat = so3.random_rotation(rng)
        angle = rotation_angle_quat(R_hat @ R_ref.T)
        expected = 2.0 * (1.0 - np.cos(angle))
        assert so3.attitude_error(R_hat, R_ref) == pytest.approx(expected, abs=1e-9)
        assert 0.0 <= so3.attitude_error(R_hat, R_ref) <= 4.0 + 1e-12


def test_project_to_so3_repairs_drift():
    rng = np.random.default_rng(8)
    R = so3.random_rotation(rng)
    noisy = R + 1e-4 * rng.standard_normal((3, 3))
    fixed = so3.project_to_so3(noisy)
    assert so3.is_rotation(fixed, tol=1e-12)
    assert np.linalg.norm(fixed - R) < 1e-3


def test_euler_zyx_matches_axis_composition():
    rng = np.random.default_rng(9)
    for _ in range(20):
        yaw, pitch, roll = rng.uniform(-np.pi, np.pi, 3)
        expected = (so3.exp_so3(yaw * E3) @ so3.exp_so3(pitch * E2)
                    @ so3.exp_so3(roll * E1))
        assert np.allclose(so3.euler_zyx_to_rotation(yaw, pitch, roll), expected,
                           atol=1e-12)


def test_check_rotation_rejects_garbage():
    with pytest.raises(ValueError):
        so3.check_rotation(np.eye(3) * 1.01)
    assert not so3.is_rotation(np.full((3, 3), np.nan))
