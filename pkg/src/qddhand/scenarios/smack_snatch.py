"""Dynamic grasp of a ball on a table of unknown height.

The hand points down and sweeps toward the table with a trapezoidal
velocity profile. Both fingers run Cartesian impedance with zero stiffness
and zero damping, so they hang under gravity with the distal joint resting
on its lower stop. When a fingertip touches the table it is pushed toward
the palm; once any measured fingertip deflection along the hand axis exceeds
the trigger threshold, constant gains are switched in with targets at a
fixed grasp pose in the hand frame, and the hand starts its reversal. The
hand speed passes through zero without dwelling. The grasp is judged after
the hand has risen back to its start height.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .. import config as C
from ..plant import HandPose, ObjectBody, StaticBox
from ..transmission import forward_kinematics
from .base import INVARIANT_METRICS, ScenarioResult, cartesian, invariant_metrics, tick_metric

NAME = "smack_snatch"
METRICS = (
    "grasped_all", "trigger_after_contact", "never_paused", "peak_motor_torque", "joint_limits_ok",
    "inner_per_outer",
) + INVARIANT_METRICS

DEFAULTS = {
    "finger": {"theta_min": [-math.pi / 2, math.radians(20.0)]},
    "table": {"present": True, "height": 0.0, "offsets": [-0.02, -0.01, 0.0, 0.01, 0.02]},
    "ball": {"radius": 0.025, "mass": 0.04, "x": 0.0},
    "descent": {
        "speed": 0.5,
        "accel": 6.0,
        "start_clearance": 0.06,
        "max_depth": 0.08,
        "reverse_on_trigger": True,
        "hold": 0.3,
    },
    "trigger": {"threshold": 0.005},
    "grasp": {"stiffness": 150.0, "damping": 1.5, "target": [0.0, 0.12]},
    "verdict": {"lift": 0.02},
}

FAILING_OVERRIDES = ["table.present=false"]


class Phase(IntEnum):
    DESCEND_ZERO_STIFFNESS = 0
    TRIGGERED = 1
    GRASPING = 2
    HOLDING = 3


@dataclass
class SnatchStateMachine:
    """Trigger logic; phases only move forward and the trigger fires once."""

    threshold: float
    gains: tuple
    phase: Phase = Phase.DESCEND_ZERO_STIFFNESS
    trigger_time: float = None
    trigger_finger: int = None
    deflection_at_trigger: float = None

    def advance(self, phase: Phase):
        if phase < self.phase:
            raise RuntimeError(f"phase may not move back from {self.phase.name} to {phase.name}")
        self.phase = phase

    def update(self, sim, reference) -> bool:
        """Check the trigger; returns True on the tick it fires."""
        if self.phase != Phase.DESCEND_ZERO_STIFFNESS:
            return False
        for f in range(2):
            tip = sim.fingertip_hand(f, measured=True)
            deflection = reference[f][1] - tip[1]
            if deflection > self.threshold:
                self.trigger_time = sim.t
                self.trigger_finger = f
                self.deflection_at_trigger = float(deflection)
                for g, gains in enumerate(self.gains):
                    sim.controllers[g].set_gains(gains)
                self.advance(Phase.TRIGGERED)
                return True
        return False


class DescentProfile:
    """Vertical hand motion: accelerate down to cruise speed, then reverse
    with a constant acceleration and climb back to the start height.

    The reversal starts on request (trigger) or when the maximum depth is
    reached. Speed crosses zero in a single instant; there is no dwell.
    """

    def __init__(self, x: float, y0: float, speed: float, accel: float, max_depth: float):
        self.x, self.y0, self.v, self.a, self.max_depth = x, y0, speed, accel, max_depth
        self.t_rev = None
        self.state_at_rev = None
        self.t_top = None

    def _descent(self, t):
        ta = self.v / self.a
        if t < ta:
            return self.y0 - 0.5 * self.a * t * t, -self.a * t, -self.a
        d = 0.5 * self.a * ta * ta + self.v * (t - ta)
        return self.y0 - d, -self.v, 0.0

    def reverse(self, t):
        if self.t_rev is None:
            self.t_rev = t
            self.state_at_rev = self._descent(t)

    def __call__(self, t):
        if self.t_rev is None:
            y, v, a = self._descent(t)
            if self.y0 - y < self.max_depth - 0.5 * self.v * self.v / self.a:
                return (self.x, y), (0.0, v), (0.0, a)
            self.reverse(t)
        y1, v1, _ = self.state_at_rev
        s = t - self.t_rev
        # constant upward acceleration until back at cruise speed upward, then cruise up, then stop at y0
        t_up = (self.v - v1) / self.a
        if s < t_up:
            return (self.x, y1 + v1 * s + 0.5 * self.a * s * s), (0.0, v1 + self.a * s), (0.0, self.a)
        y2 = y1 + v1 * t_up + 0.5 * self.a * t_up * t_up
        brake = 0.5 * self.v * self.v / self.a
        y_brake = self.y0 - brake
        if y2 >= y_brake:
            y_brake = y2
        t_cruise = (y_brake - y2) / self.v
        s2 = s - t_up
        if s2 < t_cruise:
            return (self.x, y2 + self.v * s2), (0.0, self.v), (0.0, 0.0)
        s3 = s2 - t_cruise
        t_stop = self.v / self.a
        if s3 < t_stop:
            return (self.x, y_brake + self.v * s3 - 0.5 * self.a * s3 * s3), (0.0, self.v - self.a * s3), (0.0, -self.a)
        if self.t_top is None:
            self.t_top = t
        return (self.x, y_brake + 0.5 * self.v * t_stop), (0.0, 0.0), (0.0, 0.0)


def hanging_pose(cfg) -> np.ndarray:
    """Zero-torque equilibrium with the hand pointing down and the distal
    joint on its lower stop: the finger's centre of mass sits straight below
    the base joint."""
    m1, m2 = cfg["finger"]["link_masses"]
    l1, l2 = cfg["finger"]["l1"], cfg["finger"]["l2"]
    t2 = cfg["finger"]["theta_min"][1]
    t1 = math.atan2(-m2 * 0.5 * l2 * math.sin(t2), 0.5 * m1 * l1 + m2 * l1 + m2 * 0.5 * l2 * math.cos(t2))
    return np.array([t1, t2])


def snatch_once(cfg, seed: int, height: float):
    tb, ball_c, de, gr = cfg["table"], cfg["ball"], cfg["descent"], cfg["grasp"]
    fingers = C.fingers_from(cfg)
    th0 = hanging_pose(cfg)
    tip0 = forward_kinematics(th0, fingers[0])
    reach = tip0[1] + fingers[0].radius
    nominal = tb["height"]
    y0 = nominal + max(tb["offsets"] + [0.0]) + reach + de["start_clearance"]
    statics, objects = [], []
    if tb["present"]:
        statics.append(StaticBox("table", -0.3, height - 0.05, 0.3, height, material="wood"))
    r = ball_c["radius"]
    objects.append(ObjectBody("ball", "disc", ball_c["mass"], r, pos=(ball_c["x"], height + r), material="plastic"))
    pose = HandPose(np.array([0.0, y0]), math.pi)
    world = C.build_world(cfg, objects=objects, statics=statics, hand_pose=pose)
    sim = C.build_sim(cfg, world, seed=seed)
    for f in range(2):
        sim.set_finger_pose(f, th0)
        sim.controllers[f].set_gains(cartesian(0.0, forward_kinematics(th0, fingers[f]), 0.0))
    depth = y0 - (nominal + min(tb["offsets"] + [0.0]) + reach) + de["max_depth"]
    profile = DescentProfile(0.0, y0, de["speed"], de["accel"], depth)
    sim.trajectory = profile
    target = np.array(gr["target"])
    post = tuple(cartesian(gr["stiffness"], target, gr["damping"]) for _ in range(2))
    sm = SnatchStateMachine(cfg["trigger"]["threshold"], post)
    reference = [forward_kinematics(th0, g) for g in fingers]
    log = {"first_contact": None, "speeds": [], "before_impact": 0.0, "impact_peak": None, "limit_violation": 0.0}
    lo = np.array(cfg["finger"]["theta_min"])
    hi = np.array(cfg["finger"]["theta_max"])

    def watch(s):
        w = s.world
        if log["first_contact"] is None and tb["present"] and w.in_contact("finger", "table"):
            log["first_contact"] = w.t
            # restart the peak tracker so it covers the impact window only
            log["before_impact"] = s.peak_em_torque
            s.peak_em_torque = 0.0
        if sm.update(s, reference):
            if log["first_contact"] is not None:
                log["impact_peak"] = s.peak_em_torque
            if de["reverse_on_trigger"]:
                profile.reverse(w.t)
        if sm.phase == Phase.TRIGGERED and (w.in_contact("finger0", "ball") or w.in_contact("finger1", "ball")):
            sm.advance(Phase.GRASPING)
        if sm.phase == Phase.GRASPING and profile.t_top is not None:
            sm.advance(Phase.HOLDING)
        log["speeds"].append(float(profile(w.t)[1][1]))
        over = np.maximum(lo - w.th, 0.0) + np.maximum(w.th - hi, 0.0)
        log["limit_violation"] = max(log["limit_violation"], float(over.max()))

    def done(s):
        return profile.t_top is not None and s.t - profile.t_top >= de["hold"]

    sim.run(10.0, callback=watch, until=done)
    w = world
    held = (
        w.in_contact("finger0", "ball") and w.in_contact("finger1", "ball")
        and w.opos[0, 1] - (height + r) >= cfg["verdict"]["lift"]
    )
    speeds = np.array(log["speeds"])
    # a pause is a stretch of consecutive ticks with zero commanded speed before the hand is back up
    stop_idx = len(speeds) if profile.t_top is None else int(round(profile.t_top / sim.rates.dt_outer))
    zero_run = 0
    worst_run = 0
    for v in speeds[: max(stop_idx - 1, 0)]:
        zero_run = zero_run + 1 if abs(v) < 1e-9 else 0
        worst_run = max(worst_run, zero_run)
    info = {
        "height": height,
        "held": bool(held),
        "trigger_time": sm.trigger_time,
        "trigger_finger": sm.trigger_finger,
        "deflection_at_trigger": sm.deflection_at_trigger,
        "first_contact": log["first_contact"],
        "phase": sm.phase.name,
        "reversal_time": profile.t_rev,
        "paused_ticks": worst_run,
        "impact_em_torque": log["impact_peak"],
        "peak_em_torque": max(log["before_impact"], sim.peak_em_torque),
        "joint_limit_excursion": log["limit_violation"],
        "ball_final": w.opos[0].tolist(),
    }
    return sim, info


def run(cfg, seed: int) -> ScenarioResult:
    tb = cfg["table"]
    heights = [tb["height"] + o for o in tb["offsets"]] or [tb["height"]]
    sims, runs = [], []
    for h in heights:
        sim, info = snatch_once(cfg, seed, h)
        sims.append(sim)
        runs.append(info)
    res = ScenarioResult(NAME, METRICS, sim=sims[0], telemetry=sims[0].recorder)
    res.extra_telemetry = {f"height_{i}": s.recorder for i, s in enumerate(sims[1:], start=1)}
    grasped = [r["held"] for r in runs]
    res.add("grasped_all", grasped, all(grasped), "ball held and lifted at every table height")
    order = [
        r["trigger_time"] is not None and r["first_contact"] is not None and r["trigger_time"] > r["first_contact"]
        for r in runs
    ]
    res.add("trigger_after_contact", order, all(order), "trigger time > first finger-table contact time")
    paused = [r["paused_ticks"] for r in runs]
    res.add("never_paused", paused, all(p <= 1 for p in paused), "commanded hand speed never dwells at zero")
    tau_max = sims[0].motor.tau_max
    impacts = [r["impact_em_torque"] for r in runs]
    ok = all(p is not None for p in impacts)
    peak = max(impacts) if ok else None
    res.add("peak_motor_torque", peak, ok and peak < tau_max,
            f"< tau_max {tau_max:.5f} N m between first table contact and trigger")
    res.info["peak_em_torque_whole_run"] = max(r["peak_em_torque"] for r in runs)
    exc = max(r["joint_limit_excursion"] for r in runs)
    res.add("joint_limits_ok", exc, exc < 0.05, "joint-limit penetration < 0.05 rad")
    tick_metric(res, sims)
    invariant_metrics(res, sims)
    res.info["trigger_log"] = runs
    return res
