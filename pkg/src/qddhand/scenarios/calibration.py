"""Current-limit calibration and its closed-loop check.

The static solve gives the current limit at which the fingertip just holds
the target force at the reference pose. The limit is then fed back into the
full simulator: the fingertip is driven into a wall with a saturating
stiffness and the settled wall reaction must match the target.
"""
from __future__ import annotations

import numpy as np

from .. import config as C
from ..calibration import calibrate_force, closed_loop_saturation
from ..transmission import jacobian, joint_torque_to_motor_torque
from .base import INVARIANT_METRICS, ScenarioResult, invariant_metrics, tick_metric

NAME = "calibration"
METRICS = ("static_force_n", "closed_loop_force_n", "inner_per_outer") + INVARIANT_METRICS

DEFAULTS = {
    "calibration": {
        "target_force": 8.2,
        "static_tolerance": 0.1,
        "closed_loop_tolerance": 0.05,
        "duration": 0.4,
    },
}

# a 5 N target leaves the wall push well short of the reference force
FAILING_OVERRIDES = ["calibration.target_force=5.0"]

REFERENCE_FORCE = 8.2


def static_force(report, geometry, transmission) -> float:
    """Largest force along the report's direction the motors can hold."""
    per_newton = joint_torque_to_motor_torque(jacobian(report.pose, geometry).T @ report.direction, transmission)
    return float(report.tau_max / np.max(np.abs(per_newton)))


def run(cfg, seed: int) -> ScenarioResult:
    cal = cfg["calibration"]
    geometry = C.fingers_from(cfg)[0]
    transmission = C.transmission_from(cfg)
    report = calibrate_force(C.motor_from(cfg), transmission, geometry, target=cal["target_force"])
    held = static_force(report, geometry, transmission)
    check = closed_loop_saturation(cfg, i_max=report.i_max, duration=cal["duration"], seed=seed, record=True)
    sim = check.pop("sim")
    res = ScenarioResult(NAME, METRICS, sim=sim, telemetry=sim.recorder)
    tol = cal["static_tolerance"]
    res.add("static_force_n", held, abs(held - REFERENCE_FORCE) <= tol,
            f"{REFERENCE_FORCE} +- {tol} N at the reference pose")
    rel = cal["closed_loop_tolerance"]
    f = check["force_N"]
    res.add("closed_loop_force_n", f, abs(f - REFERENCE_FORCE) <= rel * REFERENCE_FORCE,
            f"within {rel:.0%} of {REFERENCE_FORCE} N in the full simulation")
    tick_metric(res, [sim])
    invariant_metrics(res, [sim])
    res.info.update({"report": report.as_dict(), "report_text": report.text(), "closed_loop": check})
    return res
