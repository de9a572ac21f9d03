"""In-hand rolling of a disc between the fingertips.

The hand points up and pinches a disc at the fingertips in Cartesian mode.
The X targets sit closer together than the disc diameter so the pinch keeps
a squeeze; the Y targets follow antisymmetric triangle strokes (one finger up
while the other goes down), which rolls the disc back and forth in place.

Slip is judged against the rolling-without-slip constraint. Each tick, the
displacement of the fingertip's material point at the contact (tip centre
motion plus link rotation about it) is compared with the displacement of the
disc's material point at the same contact. The slip ratio is the worst
accumulated disagreement, expressed as a fraction of the rotation the
constraint predicts.
"""
from __future__ import annotations

import numpy as np

from .. import config as C
from ..plant import HandPose, ObjectBody
from ..transmission import inverse_kinematics
from .base import INVARIANT_METRICS, ScenarioResult, cartesian, invariant_metrics, tick_metric

NAME = "inhand_roll"
METRICS = ("slip_ratio", "contact_kept", "centre_tracks_midpoint", "inner_per_outer") + INVARIANT_METRICS

DEFAULTS = {
    "disc": {"radius": 0.025, "mass": 0.03, "height": 0.07},
    "grasp": {"stiffness": 300.0, "damping": 4.0, "squeeze": 0.005, "settle": 0.3},
    "stroke": {"amplitude": 0.01, "period": 1.0, "cycles": 2},
    "verdict": {"max_slip_ratio": 0.1, "midpoint_tolerance": 0.003},
}

# a stroke longer than the disc can follow without the pinch slipping off
FAILING_OVERRIDES = ["grasp.squeeze=0.0005", "stroke.amplitude=0.03"]


def triangle(t: float, amplitude: float, period: float) -> float:
    """Zero-mean triangle wave starting at 0 and rising first."""
    if period <= 0 or amplitude == 0:
        return 0.0
    p = (t / period) % 1.0
    if p < 0.25:
        return amplitude * 4.0 * p
    if p < 0.75:
        return amplitude * (2.0 - 4.0 * p)
    return amplitude * (4.0 * p - 4.0)


def _perp(v):
    return np.array([-v[1], v[0]])


class RollingOracle:
    """Accumulates the disc rotation predicted by each fingertip contact."""

    def __init__(self, world, radius: float):
        self.w = world
        self.R = radius
        self.r_tip = np.array([g.radius for g in world.fingers])
        self._snap()
        self.phi_disc = 0.0
        self.phi_exp = np.zeros(2)
        self.worst_err = np.zeros(2)
        self.exp_range = np.zeros((2, 2))
        self.disc_range = [0.0, 0.0]
        self.tip_rel = [0.0, 0.0]
        self.tip_rel0 = self._tip_rel()
        self.mid_dev = 0.0

    def _link_angle(self, f):
        fr = self.w.frames[f]
        return np.arctan2(fr[5] - fr[3], fr[4] - fr[2])

    def _tip_rel(self):
        return float(self.w.frames[0, 5] - self.w.frames[1, 5])

    def _snap(self):
        w = self.w
        self.c = w.opos[0, :2].copy()
        self.ang = float(w.opos[0, 2])
        self.tips = w.frames[:, 4:6].copy()
        self.alpha = np.array([self._link_angle(f) for f in range(2)])

    def update(self):
        w = self.w
        c, ang = w.opos[0, :2], float(w.opos[0, 2])
        tips = w.frames[:, 4:6]
        alpha = np.array([self._link_angle(f) for f in range(2)])
        d_phi = ang - self.ang
        dc = c - self.c
        self.phi_disc += d_phi
        for f in range(2):
            u = c - tips[f]
            u = u / np.linalg.norm(u)
            t = _perp(u)
            d_alpha = (alpha[f] - self.alpha[f] + np.pi) % (2 * np.pi) - np.pi
            d_tip = (tips[f] - self.tips[f]) + d_alpha * _perp(self.r_tip[f] * u)
            # disc point at c - R u moves by dc + d_phi * perp(-R u)
            self.phi_exp[f] += (dc @ t - d_tip @ t) / self.R
            self.worst_err[f] = max(self.worst_err[f], abs(self.phi_disc - self.phi_exp[f]))
            self.exp_range[f] = (min(self.exp_range[f, 0], self.phi_exp[f]), max(self.exp_range[f, 1], self.phi_exp[f]))
        self.disc_range = [min(self.disc_range[0], self.phi_disc), max(self.disc_range[1], self.phi_disc)]
        mid = 0.5 * (tips[0] + tips[1])
        self.mid_dev = max(self.mid_dev, float(np.linalg.norm(c - mid)))
        rel = self._tip_rel() - self.tip_rel0
        self.tip_rel = [min(self.tip_rel[0], rel), max(self.tip_rel[1], rel)]
        self._snap()

    def slip_ratio(self) -> float:
        span = np.maximum(self.exp_range[:, 1] - self.exp_range[:, 0], 1e-12)
        return float(np.max(self.worst_err / span))


def run(cfg, seed: int) -> ScenarioResult:
    dc, gr, st = cfg["disc"], cfg["grasp"], cfg["stroke"]
    pose = HandPose(np.zeros(2), 0.0)
    fingers = C.fingers_from(cfg)
    R, h = dc["radius"], dc["height"]
    gap = R + fingers[0].radius
    disc = ObjectBody("disc", "disc", dc["mass"], R, pos=(0.0, h), material="plastic")
    world = C.build_world(cfg, objects=[disc], hand_pose=pose)
    sim = C.build_sim(cfg, world, seed=seed)
    sides = (-1.0, 1.0)
    for f, g in enumerate(fingers):
        sim.set_finger_pose(f, inverse_kinematics(np.array([sides[f] * gap, h]), g))
        sim.controllers[f].set_gains(cartesian(gr["stiffness"], (sides[f] * (gap - gr["squeeze"]), h), gr["damping"]))
    sim.run(gr["settle"])

    oracle = RollingOracle(world, R)
    t0 = world.t
    lost = {"ticks": 0, "first": None}
    amp, period = st["amplitude"], st["period"]

    def stroke(s):
        w = s.world
        y = triangle(w.t - t0, amp, period)
        for f in range(2):
            # finger 0 rises while finger 1 descends
            target = (sides[f] * (gap - gr["squeeze"]), h + (y if f == 0 else -y))
            s.controllers[f].set_gains(cartesian(gr["stiffness"], target, gr["damping"]))
        oracle.update()
        if not (w.in_contact("finger0", "disc") and w.in_contact("finger1", "disc")):
            lost["ticks"] += 1
            if lost["first"] is None:
                lost["first"] = w.t

    sim.run(st["cycles"] * period, callback=stroke)

    res = ScenarioResult(NAME, METRICS, sim=sim, telemetry=sim.recorder)
    slip = oracle.slip_ratio()
    limit = cfg["verdict"]["max_slip_ratio"]
    kept = lost["ticks"] == 0
    res.add("slip_ratio", slip, kept and slip < limit, f"< {limit} of constraint-predicted rotation")
    res.add("contact_kept", kept, kept, "both fingertips touch the disc on every tick")
    tol = cfg["verdict"]["midpoint_tolerance"]
    res.add("centre_tracks_midpoint", oracle.mid_dev, kept and oracle.mid_dev < tol,
            f"disc centre within {tol} m of the fingertip midpoint")
    travel = oracle.tip_rel[1] - oracle.tip_rel[0]
    rot = oracle.disc_range[1] - oracle.disc_range[0]
    tick_metric(res, [sim])
    invariant_metrics(res, [sim])
    res.info.update({
        "disc_rotation_span_rad": rot,
        "tip_relative_travel_m": travel,
        "predicted_rotation_span_rad": (oracle.exp_range[:, 1] - oracle.exp_range[:, 0]).tolist(),
        "disc_final": world.opos[0].tolist(),
        "contact_lost_ticks": lost["ticks"],
        "first_contact_loss": lost["first"],
    })
    return res
