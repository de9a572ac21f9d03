"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run directly (``python3 tests/test_acceptance.py``) or through pytest; the
lines are also collected into the terminal summary.
"""
import json
import time

import numpy as np
import pytest

from qddhand import cli, scenarios
from qddhand.motor import MotorParams
from qddhand.transmission import (
    FingerGeometry,
    JointState,
    TransmissionParams,
    forward_kinematics,
    jacobian,
    joint_to_motor,
    joint_torque_to_motor_torque,
    motor_to_joint,
    motor_torque_to_joint_torque,
)

from conftest import run_cli
from test_motor import steady_torque


@pytest.fixture
def check(record_criterion):
    def check(number, title, passed, detail):
        record_criterion(number, title, bool(passed), detail)
        assert passed, detail

    return check


def test_01_stiffness_slope(scenario_runs, check):
    run = scenario_runs["force_displacement"]
    cfg = json.loads((run.out / "config.json").read_text())
    slope = run.metric("slope_n_per_cm")["value"]
    ok = cfg["control"]["stiffness_n_per_cm"] == 1.0 and 0.95 <= slope <= 1.05 and run.wall < 60.0
    check(1, "stiffness slope", ok, f"slope {slope:.4f} N/cm for 1 N/cm commanded, wall {run.wall:.1f} s")


def test_02_force_anchor(scenario_runs, check):
    run = scenario_runs["calibration"]
    static = run.metric("static_force_n")["value"]
    closed = run.metric("closed_loop_force_n")["value"]
    i_max = run.summary["info"]["report"]["i_max_A"]
    ok = abs(static - 8.2) <= 0.1 and abs(closed - 8.2) <= 0.05 * 8.2
    check(2, "force anchor", ok, f"i_max {i_max:.4f} A, static {static:.4f} N, closed loop {closed:.4f} N")


def test_03_transmission_identities(check):
    t0 = time.perf_counter()
    tr = TransmissionParams()
    rng = np.random.default_rng(0)
    exact = np.array_equal(tr.torque_matrix, tr.motor_to_joint_matrix.T)
    tau_t, thd, th = rng.normal(size=(3, 10_000, 2))
    tau_q = joint_torque_to_motor_torque(tau_t, tr)
    qd = joint_to_motor(JointState(np.zeros_like(thd), thd), tr).q_dot
    power = np.abs(np.sum(tau_q * qd, axis=1) - np.sum(tau_t * thd, axis=1)).max()
    back = motor_to_joint(joint_to_motor(JointState(th, thd), tr), tr)
    trip = max(
        np.abs(back.theta - th).max(),
        np.abs(back.theta_dot - thd).max(),
        np.abs(motor_torque_to_joint_torque(tau_q, tr) - tau_t).max(),
    )
    wall = time.perf_counter() - t0
    ok = exact and power < 1e-12 and trip < 1e-12 and wall < 5.0
    check(3, "transmission identities", ok,
          f"transpose exact {exact}, power err {power:.1e}, round trip err {trip:.1e}, {wall:.2f} s")


def test_04_jacobian(check):
    rng = np.random.default_rng(4)
    h = 1e-6
    worst = 0.0
    for g in (FingerGeometry(), FingerGeometry(base=(0.06, 0.0), mirror=-1)):
        for _ in range(100):
            th = rng.uniform(g.theta_min, g.theta_max)
            fd = np.column_stack([
                (forward_kinematics(th + d, g) - forward_kinematics(th - d, g)) / (2 * h)
                for d in np.eye(2) * h
            ])
            worst = max(worst, np.abs(jacobian(th, g) - fd).max())
    check(4, "jacobian", worst < 1e-6, f"max |J - J_fd| {worst:.2e} over 100 poses per finger")


def test_05_torque_fidelity(check):
    tau_max = MotorParams().tau_max
    cmds = np.linspace(-0.9, 0.9, 20) * tau_max
    worst = {}
    for speed in (0.0, 20.0):
        worst[speed] = max(abs(steady_torque(t, speed) - t) / abs(t) for t in cmds)
    ok = max(worst.values()) < 0.02
    check(5, "torque from current", ok,
          f"worst error {100 * worst[0.0]:.2f} % at standstill, {100 * worst[20.0]:.2f} % at 20 rad/s")


def test_06_two_rate(scenario_runs, check):
    ratios = {n: r.summary["ticks"]["inner"] / r.summary["ticks"]["outer"] for n, r in scenario_runs.items()}
    ok = all(r.summary["ticks"]["inner"] == 5 * r.summary["ticks"]["outer"] for r in scenario_runs.values())
    outer = sum(r.summary["ticks"]["outer"] for r in scenario_runs.values())
    check(6, "two-rate loop", ok, f"inner/outer = 5 exactly in all {len(ratios)} scenarios ({outer} outer ticks)")


def test_07_smack_and_snatch(scenario_runs, check):
    run = scenario_runs["smack_snatch"]
    heights = [e["height"] for e in run.summary["info"]["trigger_log"]]
    grasped = run.metric("grasped_all")
    peak = run.metric("peak_motor_torque")
    ok = (
        len(heights) >= 5
        and max(heights) - min(heights) >= 0.04 - 1e-12
        and grasped["passed"]
        and run.metric("trigger_after_contact")["passed"]
        and run.metric("never_paused")["passed"]
        and peak["passed"]
        and run.wall < 120.0
    )
    check(7, "smack and snatch", ok,
          f"{sum(grasped['value'])}/{len(heights)} grasps over {min(heights):+.3f}..{max(heights):+.3f} m, "
          f"impact peak {peak['value']:.4f} N m, wall {run.wall:.1f} s")


def test_08_grasp_retention(scenario_runs, tmp_path, check):
    run = scenario_runs["disturbance_grasp"]
    peak = max(float(np.hypot(*p["force"])) for p in run.summary["info"]["pulses"])
    kept = run.metric("retained")["passed"] and run.summary["info"]["ejected_at"] is None
    hard = run_cli("disturbance_grasp", tmp_path, "--override", "disturbance.magnitudes=[50.0]")
    ejected = hard.summary["info"]["ejected_at"] is not None and hard.code == cli.EXIT_FAILED
    check(8, "grasp retention", kept and peak >= 2.0 and ejected,
          f"held through pulses up to {peak:.1f} N, 50 N pulse ejects at t = {hard.summary['info']['ejected_at']:.3f} s")


def test_09_inhand_rolling(scenario_runs, check):
    run = scenario_runs["inhand_roll"]
    cfg = json.loads((run.out / "config.json").read_text())
    slip = run.metric("slip_ratio")["value"]
    kept = run.metric("contact_kept")["passed"]
    ok = cfg["stroke"]["cycles"] >= 2 and slip < 0.10 and kept
    check(9, "in-hand rolling", ok,
          f"slip ratio {100 * slip:.2f} % over {cfg['stroke']['cycles']} cycles, contact kept {kept}")


def test_10_regrasp_ablation(scenario_runs, check):
    run = scenario_runs["regrasp_push"]
    slides = run.summary["info"]["slides"]
    ablation = run.summary["info"]["ablation_slides"]
    ok = min(slides) >= 0.005 and all(a < s for s, a in zip(slides, ablation)) and run.metric("slide")["passed"]
    check(10, "regrasp ablation", ok,
          f"slide with halving {1e3 * min(slides):.2f} mm, without {1e3 * max(ablation):.2f} mm")


def test_11_coin_pick(scenario_runs, check):
    run = scenario_runs["coin_pick"]
    cfg = json.loads((run.out / "config.json").read_text())
    offsets = cfg["table"]["edge_offsets"]
    picked = run.metric("picked_all")
    ok = min(offsets) <= -0.01 and max(offsets) >= 0.01 and picked["passed"] and all(picked["value"])
    check(11, "coin pick", ok, f"{sum(picked['value'])}/{len(offsets)} picks with edge moved {offsets} m")


def test_12_determinism(scenario_runs, tmp_path, check):
    differing = []
    compared = 0
    for name in scenarios.names():
        rerun = run_cli(name, tmp_path)
        for p in sorted(scenario_runs[name].out.glob("telemetry*.csv")):
            compared += 1
            if p.read_bytes() != (rerun.out / p.name).read_bytes():
                differing.append(f"{name}/{p.name}")
    check(12, "determinism", compared > 0 and not differing,
          f"{compared} CSV files byte-identical on re-run" if not differing else f"differ: {differing}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
