import numpy as np
import pytest

from pitotnav import model, so3
from pitotnav.errors import ConfigError, DegenerateAirspeed

from oracles import rk4_matrix_ode

E1, E2, E3 = np.eye(3)


def test_a_matrix_gravity_block():
    A = model.a_matrix(np.zeros(3), g=9.81)
    expected = np.zeros((6, 6))
    expected[:3, 3:] = 9.81 * np.eye(3)
    assert np.array_equal(A, expected)


def test_a_matrix_rotation_block():
    A = model.a_matrix(E3)
    assert np.array_equal(A[:3, :3], -so3.skew(E3))
    assert np.array_equal(A[3:, 3:], -so3.skew(E3))


def test_a_matrix_decomposition():
    omega = np.array([0.4, -1.1, 0.2])
    A_w = np.zeros((6, 6))
    A_w[:3, :3] = -so3.skew(omega)
    A_w[3:, 3:] = -so3.skew(omega)
    A_bar = np.zeros((6, 6))
    A_bar[:3, 3:] = model.GRAVITY * np.eye(3)
    assert np.array_equal(model.a_matrix(omega), A_w + A_bar)


def test_c_matrix_single_axis():
    C = model.c_matrix(model.PitotConfig(axes=(E1,)))
    assert np.array_equal(C, np.array([[1.0, 0, 0, 0, 0, 0]]))
    C3 = model.c_matrix(model.PitotConfig(axes=(E3,)))
    assert np.array_equal(C3, np.array([[0, 0, 1.0, 0, 0, 0]]))


def test_c_matrix_pseudo_sideslip_rows():
    C = model.c_matrix(model.PitotConfig(axes=(E1,), pseudo_sideslip=True))
    assert np.array_equal(C, np.array([[1.0, 0, 0, 0, 0, 0],
                                       [0, 1.0, 0, 0, 0, 0]]))


def test_c_matrix_rank_counts_independent_axes():
    assert np.linalg.matrix_rank(model.c_matrix(model.PitotConfig(axes=(E1,)))) == 1
    assert np.linalg.matrix_rank(model.c_matrix(model.PitotConfig(axes=(E1, E2)))) == 2
    # distinct but antiparallel axes are dependent
    assert np.linalg.matrix_rank(model.c_matrix(model.PitotConfig(axes=(E1, -E1)))) == 1


def test_pitot_config_validation():
    with pytest.raises(ConfigError):
        model.PitotConfig(axes=())
    with pytest.raises(ConfigError):
        model.PitotConfig(axes=(E1, E2, E3, E1))
    with pytest.raises(ConfigError):
        model.PitotConfig(axes=((1.0, 1.0, 0.0),))  # not unit
    with pytest.raises(ConfigError):
        model.PitotConfig(axes=(E1, E1))  # duplicate


def test_continuous_dynamics_cases():
    x = model.State6(V_a=np.zeros(3), z=E3.copy())
    v_dot, z_dot = model.continuous_dynamics(x, np.zeros(3), np.zeros(3), g=9.81)
    assert np.allclose(v_dot, 9.81 * E3)
    assert np.array_equal(z_dot, np.zeros(3))

    x = model.State6(V_a=np.zeros(3), z=np.zeros(3))
    v_dot, z_dot = model.continuous_dynamics(x, np.zeros(3), np.array([1.0, 0, 0]))
    assert np.array_equal(v_dot, np.array([1.0, 0, 0]))
    assert np.array_equal(z_dot, np.zeros(3))


def test_continuous_dynamics_matches_matrix_form():
    rng = np.random.default_rng(10)
    B_u = np.vstack([np.eye(3), np.zeros((3, 3))])
    for _ in range(20):
        x = model.State6(V_a=rng.standard_normal(3), z=rng.standard_normal(3))
        omega = rng.standard_normal(3)
        a = rng.standard_normal(3)
        v_dot, z_dot = model.continuous_dynamics(x, omega, a)
        expected = model.a_matrix(omega) @ x.vec + B_u @ a
        assert np.allclose(np.concatenate([v_dot, z_dot]), expected, atol=1e-12)


def test_block_rotation_commutes_with_gravity_coupling():
    # diag(phi, phi) @ A_bar @ diag(phi, phi)^T == A_bar for any rotation phi
    rng = np.random.default_rng(11)
    A_bar = np.zeros((6, 6))
    A_bar[:3, 3:] = model.GRAVITY * np.eye(3)
    for _ in range(20):
        phi = so3.random_rotation(rng)
        T = np.zeros((6, 6))
        T[:3, :3] = phi
        T[3:, 3:] = phi
        assert np.allclose(T @ A_bar @ T.T, A_bar, atol=1e-12)


def test_tilt_norm_preserved_by_truth_dynamics():
    # integrate dz/dt = -omega x z with RK4 over a wiggly omega profile
    def omega_fn(t):
        return np.array([0.5 * np.sin(2.0 * t), 0.8 * np.cos(3.0 * t), 0.3])

    def rhs(t, z):
        return -np.cross(omega_fn(t), z)

    z = rk4_matrix_ode(rhs, np.array([0.0, 0.0, 1.0]), 0.0, 5.0, 5000)
    assert abs(np.linalg.norm(z) - 1.0) < 1e-9


def test_aero_angles_forward_flight():
    aero = model.aero_angles(np.array([20.0, 0.0, 0.0]))
    assert aero.airspeed == pytest.approx(20.0)
    assert aero.alpha == 0.0
    assert aero.beta == 0.0


def test_aero_angles_forced_values():
    aero = model.aero_angles(np.array([1.0, 1.0, 0.0]))
    assert aero.airspeed == pytest.approx(np.sqrt(2.0), abs=1e-12)
    assert aero.alpha == pytest.approx(0.0, abs=1e-12)
    assert aero.beta == pytest.approx(np.pi / 4, abs=1e-12)


def test_aero_angles_round_trip():
    for speed in (5.0, 17.5, 30.0):
        for alpha in (-0.4, -0.1, 0.0, 0.25, 0.4):
            for beta in (-0.4, 0.0, 0.15, 0.4):
                v = model.air_velocity_from_angles(speed, alpha, beta)
                aero = model.aero_angles(v)
                assert aero.airspeed == pytest.approx(speed, abs=1e-10)
                assert aero.alpha == pytest.approx(alpha, abs=1e-10)
                assert aero.beta == pytest.approx(beta, abs=1e-10)


def test_aero_angles_degenerate_inputs():
    with pytest.raises(DegenerateAirspeed):
        model.aero_angles(np.array([0.1, 0.0, 0.0]))  # below airspeed floor
    with pytest.raises(DegenerateAirspeed):
        model.aero_angles(np.array([0.2, 10.0, 0.0]))  # forward component too small
    with pytest.raises(DegenerateAirspeed):
        model.aero_angles(np.array([-15.0, 1.0, 0.0]))  # rearward flight


def test_pitot_output_values():
    v = np.array([20.8, -0.48, 5.9])
    cfg1 = model.PitotConfig(axes=(E1,))
    assert model.pitot_output(v, cfg1) == pytest.approx([20.8])

    cfg2 = model.PitotConfig(axes=(E1,), pseudo_sideslip=True)
    out = model.pitot_output(model.State6(V_a=v, z=E3.copy()), cfg2)
    assert np.array_equal(out, np.array([20.8, 0.0]))

    assert np.array_equal(model.pitot_output(np.zeros(3), cfg2), np.array([0.0, 0.0]))


def test_state6_vector_round_trip():
    x = model.State6(V_a=np.array([1.0, 2.0, 3.0]), z=np.array([0.0, 0.0, 1.0]))
    assert np.array_equal(model.State6.from_vec(x.vec).vec, x.vec)
