import math

import numpy as np
import pytest

from qddhand.transmission import (
    FingerGeometry,
    JointState,
    MotorAngles,
    TransmissionParams,
    forward_kinematics,
    inverse_kinematics,
    jacobian,
    joint_to_motor,
    joint_torque_to_motor_torque,
    link_points,
    motor_to_joint,
    motor_torque_to_joint_torque,
)

P = TransmissionParams()
G = FingerGeometry()
RIGHT = FingerGeometry(base=(0.06, 0.0), mirror=-1)


def test_motor_to_joint_matrix_values():
    # hand-evaluated with n1 = 2.57, n2 = 1: 1/(2 n1) = 1/5.14
    a = 0.1945525291828794
    np.testing.assert_allclose(P.motor_to_joint_matrix, [[a, -a], [a, a]], rtol=0, atol=1e-15)


def test_torque_map_is_exact_transpose_of_velocity_map():
    assert np.array_equal(P.torque_matrix, P.motor_to_joint_matrix.T)
    assert np.array_equal(P.inverse_torque_matrix, P.joint_to_motor_matrix.T)


def test_matrices_are_inverse_pairs():
    np.testing.assert_allclose(P.joint_to_motor_matrix @ P.motor_to_joint_matrix, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(P.inverse_torque_matrix @ P.torque_matrix, np.eye(2), atol=1e-15)


def test_counter_rotation_drives_proximal_joint_only():
    js = motor_to_joint(MotorAngles(np.array([1.0, -1.0]), np.zeros(2)), P)
    np.testing.assert_allclose(js.theta, [1 / 2.57, 0.0], atol=1e-15)


def test_co_rotation_drives_distal_joint_only():
    js = motor_to_joint(MotorAngles(np.array([1.0, 1.0]), np.zeros(2)), P)
    np.testing.assert_allclose(js.theta, [0.0, 1 / 2.57], atol=1e-15)


def test_power_conservation_on_random_samples():
    rng = np.random.default_rng(0)
    tau_t = rng.normal(size=(10_000, 2))
    thd = rng.normal(size=(10_000, 2))
    tau_q = joint_torque_to_motor_torque(tau_t, P)
    qd = joint_to_motor(JointState(np.zeros((10_000, 2)), thd), P).q_dot
    err = np.abs(np.sum(tau_q * qd, axis=1) - np.sum(tau_t * thd, axis=1))
    assert err.max() < 1e-12


def test_round_trips():
    rng = np.random.default_rng(1)
    th = rng.uniform(-2, 2, size=(500, 2))
    thd = rng.normal(size=(500, 2))
    back = motor_to_joint(joint_to_motor(JointState(th, thd), P), P)
    assert np.abs(back.theta - th).max() < 1e-12
    assert np.abs(back.theta_dot - thd).max() < 1e-12
    tau = rng.normal(size=(500, 2))
    assert np.abs(motor_torque_to_joint_torque(joint_torque_to_motor_torque(tau, P), P) - tau).max() < 1e-12


def test_reflected_inertia_is_twice_n1_squared():
    np.testing.assert_allclose(P.reflected_diagonal(1.0), [2 * 2.57**2, 2 * 2.57**2], rtol=1e-15)


@pytest.mark.parametrize("n1,n2", [(0.0, 1.0), (2.0, -1.0)])
def test_bad_reductions_rejected(n1, n2):
    with pytest.raises(ValueError):
        TransmissionParams(n1, n2)


def test_forward_kinematics_reference_poses():
    np.testing.assert_allclose(forward_kinematics((0.0, 0.0), G), [-0.06, 0.10531], atol=1e-15)
    # proximal link up, distal link bent a right angle inward
    np.testing.assert_allclose(forward_kinematics((0.0, math.pi / 2), G), [-0.01, 0.05531], atol=1e-15)
    np.testing.assert_allclose(forward_kinematics((0.0, math.pi / 2), RIGHT), [0.01, 0.05531], atol=1e-15)


def test_link_points_chain():
    th = (0.3, 0.7)
    base, knuckle, tip = link_points(th, G)
    assert np.isclose(np.linalg.norm(knuckle - base), G.l1)
    assert np.isclose(np.linalg.norm(tip - knuckle), G.l2)


def central_difference(th, g, h=1e-6):
    out = np.zeros((2, 2))
    for j in range(2):
        d = np.zeros(2)
        d[j] = h
        out[:, j] = (forward_kinematics(th + d, g) - forward_kinematics(th - d, g)) / (2 * h)
    return out


@pytest.mark.parametrize("g", [G, RIGHT], ids=["left", "right"])
def test_jacobian_matches_finite_differences(g):
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        th = rng.uniform(g.theta_min, g.theta_max)
        worst = max(worst, np.abs(jacobian(th, g) - central_difference(th, g)).max())
    assert worst < 1e-6


def test_jacobian_singular_when_straight():
    assert abs(np.linalg.det(jacobian((0.4, 0.0), G))) < 1e-15


@pytest.mark.parametrize("g", [G, RIGHT], ids=["left", "right"])
def test_inverse_kinematics_round_trip(g):
    rng = np.random.default_rng(3)
    for _ in range(200):
        th = rng.uniform((-1.2, 0.05), (1.2, 2.3))
        sol = inverse_kinematics(forward_kinematics(th, g), g)
        np.testing.assert_allclose(sol, th, atol=1e-9)


def test_inverse_kinematics_out_of_reach():
    with pytest.raises(ValueError):
        inverse_kinematics((0.0, 0.5), G)


def test_within_limits():
    assert G.within_limits((0.0, 1.0))
    assert not G.within_limits((0.0, -0.1))
    assert G.within_limits((0.0, -0.1), tol=0.2)
