import copy
import json
import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from qddhand import config as C
from qddhand.impedance import CartesianGains, JointGains, cartesian_impedance, joint_impedance
from qddhand.motor import MotorParams, clarke_park, inverse_park_clarke, pi_current_step, torque_to_current
from qddhand.telemetry import Recorder
from qddhand.transmission import (
    FingerGeometry,
    JointState,
    TransmissionParams,
    forward_kinematics,
    inverse_kinematics,
    joint_to_motor,
    joint_torque_to_motor_torque,
    motor_to_joint,
    motor_torque_to_joint_torque,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
small = st.floats(-10.0, 10.0, allow_nan=False, allow_infinity=False)
gain = st.floats(0.0, 1e3, allow_nan=False, allow_infinity=False)
vec2 = st.tuples(small, small).map(np.array)
reduction = st.floats(0.5, 10.0)

G = FingerGeometry()
RIGHT = FingerGeometry(base=(0.06, 0.0), mirror=-1)
P = MotorParams()


@given(reduction, reduction, vec2, vec2)
def test_transmission_round_trip(n1, n2, th, thd):
    tr = TransmissionParams(n1, n2)
    back = motor_to_joint(joint_to_motor(JointState(th, thd), tr), tr)
    np.testing.assert_allclose(back.theta, th, atol=1e-10)
    np.testing.assert_allclose(back.theta_dot, thd, atol=1e-10)
    tau = th
    np.testing.assert_allclose(motor_torque_to_joint_torque(joint_torque_to_motor_torque(tau, tr), tr), tau, atol=1e-10)


@given(reduction, reduction, vec2, vec2)
def test_transmission_conserves_power(n1, n2, tau_t, thd):
    tr = TransmissionParams(n1, n2)
    tau_q = joint_torque_to_motor_torque(tau_t, tr)
    qd = joint_to_motor(JointState(np.zeros(2), thd), tr).q_dot
    assert abs(tau_q @ qd - tau_t @ thd) <= 1e-10 * (1 + abs(tau_t @ thd))


@given(vec2, vec2, vec2, st.tuples(gain, gain), st.tuples(gain, gain), st.floats(-5, 5))
def test_joint_law_is_linear_in_error(th, thd, target, k, b, s):
    g = JointGains(k, b, target)
    tau = joint_impedance(JointState(th, thd), g)
    # scaling both the position error and velocity scales the torque
    scaled = joint_impedance(JointState(target + s * (th - target), s * thd), g)
    np.testing.assert_allclose(scaled, s * tau, rtol=1e-9, atol=1e-9)


@given(vec2, vec2, vec2)
def test_zero_gains_give_zero_torque(th, thd, target):
    assert np.array_equal(joint_impedance(JointState(th, thd), JointGains((0, 0), (0, 0), target)), [0.0, 0.0])
    cg = CartesianGains((0.0, 0.0), (0.0, 0.0), target * 0.01)
    assert np.all(cartesian_impedance(JointState(th, thd), cg, G) == 0.0)


joint_sample = st.tuples(st.floats(-1.3, 1.3), st.floats(0.05, 2.3)).map(np.array)


@given(joint_sample, st.sampled_from([G, RIGHT]))
def test_fk_ik_round_trip(th, g):
    np.testing.assert_allclose(inverse_kinematics(forward_kinematics(th, g), g), th, atol=1e-8)


@given(joint_sample)
def test_fingers_mirror_each_other(th):
    left, right = forward_kinematics(th, G), forward_kinematics(th, RIGHT)
    assert math.isclose(left[0], -right[0], abs_tol=1e-15) and left[1] == right[1]


@given(small, small, st.floats(-100, 100))
def test_park_round_trip_property(i_d, i_q, theta):
    a, b, c = inverse_park_clarke(i_d, i_q, theta)
    assert abs(a + b + c) < 1e-9
    d2, q2 = clarke_park(a, b, c, theta)
    assert math.isclose(d2, i_d, abs_tol=1e-9) and math.isclose(q2, i_q, abs_tol=1e-9)


@given(finite)
def test_current_command_never_exceeds_limit(tau):
    i_d, i_q = torque_to_current(tau, P)
    assert i_d == 0.0 and abs(i_q) <= P.i_max
    assert math.copysign(1.0, i_q) == math.copysign(1.0, tau) or i_q == 0.0


@given(finite, finite, st.floats(-5, 5), st.floats(0.1, 20))
def test_pi_output_and_integrator_bounded(ref, meas, integ, vmax):
    from qddhand.motor import PIGains

    v, new = pi_current_step(ref, meas, integ, PIGains(kp=2.0, ki=500.0, v_limit=vmax), 2e-4)
    assert abs(v) <= vmax + 1e-12 and abs(new) <= max(vmax, abs(integ)) + 1e-12


BASE = C.load_config()
LEAVES = C.leaf_keys(BASE)
number_keys = [k for k in LEAVES if isinstance(C.get_path(BASE, k), float)]


@settings(max_examples=60)
@given(st.sampled_from(number_keys), st.floats(0.0, 1e6, allow_nan=False))
def test_numeric_override_round_trip(key, value):
    cfg = C.load_config(overrides=[f"{key}={json.dumps(value)}"])
    assert C.get_path(cfg, key) == value
    restored = copy.deepcopy(cfg)
    C.apply_override(restored, key, C.get_path(BASE, key))
    assert restored == BASE


@given(st.lists(st.floats(1e-6, 1.0), min_size=1, max_size=30))
def test_recorder_timestamps_strictly_increase(steps):
    rec = Recorder([], contacts=False)
    t = 0.0
    for dt in steps:
        t += dt
        rec.add(np.r_[t, np.zeros(len(rec.columns) - 1)])
    ts = rec.column("t")
    assert np.all(np.diff(ts) > 0)
    try:
        rec.add(np.r_[t, np.zeros(len(rec.columns) - 1)])
    except ValueError:
        pass
    else:
        raise AssertionError("repeated timestamp accepted")
