import math

import numpy as np
import pytest

from qddhand.calibration import CalibrationInfeasible, calibrate_force, closed_loop_saturation
from qddhand.motor import (
    EncoderModel,
    FocDrive,
    MotorParams,
    MotorState,
    PIGains,
    SimulationDiverged,
    clarke_park,
    electromagnetic_torque,
    inverse_park_clarke,
    motor_electrical_step,
    pi_current_step,
    torque_constant,
    torque_to_current,
)
from qddhand.transmission import FingerGeometry, TransmissionParams, jacobian, joint_torque_to_motor_torque

P = MotorParams()


def steady_torque(tau_cmd: float, speed: float, ticks: int = 250, window: int = 50) -> float:
    """Mean EM torque over the last ``window`` ticks with the rotor locked or
    spun at ``speed`` by an ideal dynamometer."""
    d = FocDrive(P, seed=0, locked=speed == 0.0, hold_speed=speed != 0.0)
    d.state.velocity = speed
    vals = []
    for k in range(ticks):
        d.step(tau_cmd)
        if k >= ticks - window:
            vals.append(d.torque)
    return float(np.mean(vals))


def test_torque_constant_from_kv():
    # K_t = 60 / (2 pi Kv) for a 360 rpm/V motor
    assert torque_constant(360.0) == pytest.approx(0.026525823848649224, rel=1e-12)
    assert P.tau_max == pytest.approx(3.326 * 0.026525823848649224, rel=1e-12)


def test_em_torque_is_kt_times_iq():
    assert electromagnetic_torque(2.0, P) == pytest.approx(2.0 * P.kt, rel=1e-12)


def test_torque_to_current_clamps():
    assert torque_to_current(10.0, P) == (0.0, P.i_max)
    assert torque_to_current(-10.0, P) == (0.0, -P.i_max)
    _, iq = torque_to_current(0.01, P)
    assert iq == pytest.approx(0.01 / P.kt)


def test_clarke_park_known_values():
    # balanced currents aligned with phase a at zero electrical angle
    d, q = clarke_park(1.0, -0.5, -0.5, 0.0)
    assert d == pytest.approx(1.0) and q == pytest.approx(0.0, abs=1e-15)
    d, q = clarke_park(1.0, -0.5, -0.5, math.pi / 2)
    assert d == pytest.approx(0.0, abs=1e-15) and q == pytest.approx(-1.0)


def test_park_round_trip():
    rng = np.random.default_rng(0)
    for _ in range(100):
        i_d, i_q, th = rng.normal(), rng.normal(), rng.uniform(-10, 10)
        a, b, c = inverse_park_clarke(i_d, i_q, th)
        assert a + b + c == pytest.approx(0.0, abs=1e-12)
        d2, q2 = clarke_park(a, b, c, th)
        assert d2 == pytest.approx(i_d, abs=1e-12) and q2 == pytest.approx(i_q, abs=1e-12)


def test_pi_integrator_is_clamped():
    g = PIGains(kp=1.0, ki=1e6, v_limit=2.0)
    integ = 0.0
    for _ in range(100):
        v, integ = pi_current_step(10.0, 0.0, integ, g, 1e-3)
    assert abs(integ) <= 2.0 + 1e-12


def test_locked_rotor_current_settles_to_v_over_r():
    s = MotorState()
    for _ in range(20_000):
        s = motor_electrical_step(s, 0.0, 0.11, 0.0, 1e-6, P, hold_speed=True)
    assert s.i_q == pytest.approx(1.0, rel=1e-3)


def test_non_finite_state_raises():
    with pytest.raises(SimulationDiverged):
        motor_electrical_step(MotorState(), float("nan"), 0.0, 0.0, 1e-5, P)


def test_current_bandwidth_sets_pi_gains():
    wc = 2 * math.pi * P.bandwidth_hz
    assert P.kp == pytest.approx(wc * P.L)
    assert P.ki == pytest.approx(wc * P.R)


def test_encoder_filter_coefficient_bounds():
    e = EncoderModel()
    a = e.alpha(2e-4)
    assert 0.0 < a < 1.0
    assert e.alpha(2e-4, 1000.0) > a


@pytest.mark.parametrize("speed", [0.0, 20.0], ids=["standstill", "20rad_s"])
def test_torque_tracks_command_within_two_percent(speed):
    cmds = np.linspace(-0.9, 0.9, 20) * P.tau_max
    errs = [abs(steady_torque(t, speed) - t) / abs(t) for t in cmds]
    assert max(errs) < 0.02


def test_calibration_statics_match_jacobian_transpose():
    g, tr = FingerGeometry(), TransmissionParams()
    rep = calibrate_force(P, tr, g)
    tau_theta = jacobian(rep.pose, g).T @ (8.2 * rep.direction)
    np.testing.assert_allclose(rep.joint_torques, tau_theta, atol=1e-6)
    np.testing.assert_allclose(rep.motor_torques, joint_torque_to_motor_torque(tau_theta, tr), atol=1e-6)
    # at the limit the most loaded motor sits exactly at tau_max
    assert np.max(np.abs(rep.motor_torques)) == pytest.approx(rep.tau_max, rel=1e-12)


def test_calibrated_current_value():
    # reference pose: both motors carry 8.2 N * l1 / (2 n1) each
    rep = calibrate_force()
    expected = 8.2 * 0.05531 / (2 * 2.57) / torque_constant(360.0)
    assert rep.i_max == pytest.approx(expected, rel=1e-12)
    assert rep.i_max == pytest.approx(3.3265, abs=1e-4)


def test_doubling_kt_halves_current_limit():
    base = calibrate_force(P)
    doubled = calibrate_force(P.with_(kv_rating=P.kv_rating / 2))
    assert doubled.i_max == pytest.approx(base.i_max / 2, rel=1e-12)


def test_infeasible_calibration_names_voltage():
    with pytest.raises(CalibrationInfeasible) as exc:
        calibrate_force(P.with_(R=10.0))
    assert exc.value.binding == "voltage"


def test_report_text_lists_binding_constraint():
    text = calibrate_force().text()
    assert "binding constraint  force" in text


def test_closed_loop_wall_push_reaches_calibrated_force():
    rep = calibrate_force()
    out = closed_loop_saturation(i_max=rep.i_max)
    assert out["force_N"] == pytest.approx(8.2, rel=0.05)
