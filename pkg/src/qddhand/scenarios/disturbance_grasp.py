"""Force-closure grasp of a pliers-like bar under external wrench pulses.

The hand points down and pinches a vertical bar between the fingertips in
Cartesian mode. After the grasp settles, a deterministic pulse train is
applied at the bar's centre of mass. The grasp is retained when the bar
always spans the line between the fingertips and neither fingertip loses
contact for longer than the allowed gap. The bar may end up displaced.
"""
from __future__ import annotations

import math

import numpy as np

from .. import config as C
from ..plant import HandPose, ObjectBody
from ..transmission import inverse_kinematics
from .base import INVARIANT_METRICS, ScenarioResult, cartesian, invariant_metrics, tick_metric

NAME = "disturbance_grasp"
METRICS = ("retained", "max_contact_gap_s", "inner_per_outer") + INVARIANT_METRICS

DEFAULTS = {
    "hand": {"x": 0.0, "y": 0.3},
    "bar": {"mass": 0.08, "half_length": 0.06, "radius": 0.008, "com_offset": 0.02, "grip_height": 0.05},
    "grasp": {"stiffness": 300.0, "damping": 6.0, "squeeze": 0.01, "settle": 0.5},
    "disturbance": {
        "magnitudes": [1.0, 2.0],
        "directions": [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]],
        "duration": 0.1,
        "gap": 0.3,
        "tail": 0.5,
    },
    "retention": {"max_contact_gap": 0.05},
}

# a single pulse far beyond the fingertip force budget must eject the bar
FAILING_OVERRIDES = ["disturbance.magnitudes=[50.0]"]


def _segments_cross(p1, p2, q1, q2) -> bool:
    d1 = p2 - p1
    d2 = q2 - q1
    den = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(den) < 1e-12:
        return False
    w = q1 - p1
    s = (w[0] * d2[1] - w[1] * d2[0]) / den
    u = (w[0] * d1[1] - w[1] * d1[0]) / den
    return 0.0 <= s <= 1.0 and 0.0 <= u <= 1.0


def run(cfg, seed: int) -> ScenarioResult:
    bar_c, gr, dist = cfg["bar"], cfg["grasp"], cfg["disturbance"]
    pose = HandPose(np.array([cfg["hand"]["x"], cfg["hand"]["y"]]), math.pi)
    fingers = C.fingers_from(cfg)
    r_tip = fingers[0].radius
    gap = bar_c["radius"] + r_tip
    h = bar_c["grip_height"]
    centre = pose.to_world((0.0, h))
    bar = ObjectBody("bar", "capsule", bar_c["mass"], bar_c["radius"], bar_c["half_length"],
                     pos=tuple(centre), angle=math.pi / 2, com_offset=bar_c["com_offset"], material="metal")
    world = C.build_world(cfg, objects=[bar], hand_pose=pose)
    sim = C.build_sim(cfg, world, seed=seed)
    targets = []
    for f, g in enumerate(fingers):
        side = -1.0 if f == 0 else 1.0
        contact = np.array([side * gap, h])
        sim.set_finger_pose(f, inverse_kinematics(contact, g))
        x_d = np.array([side * (gap - gr["squeeze"]), h])
        targets.append(x_d)
        sim.controllers[f].set_gains(cartesian(gr["stiffness"], x_d, gr["damping"]))

    res = ScenarioResult(NAME, METRICS, sim=sim, telemetry=sim.recorder)
    t = gr["settle"]
    pulses = []
    for mag in dist["magnitudes"]:
        for d in dist["directions"]:
            u = np.asarray(d, dtype=float)
            u = u / np.linalg.norm(u)
            world.apply_external_wrench("bar", (mag * u[0], mag * u[1], 0.0), dist["duration"], start=t)
            pulses.append({"start": t, "force": (mag * u).tolist()})
            t += dist["duration"] + dist["gap"]
    total = t + dist["tail"]

    state = {"lost": [0.0, 0.0], "max_gap": 0.0, "ejected_at": None}
    dt = sim.rates.dt_outer
    ob = world.objects[0]

    def watch(s):
        w = s.world
        for f in range(2):
            if w.in_contact(f"finger{f}", "bar"):
                state["lost"][f] = 0.0
            else:
                state["lost"][f] += dt
            state["max_gap"] = max(state["max_gap"], state["lost"][f])
        x, y, a = w.opos[0]
        axis = np.array([math.cos(a), math.sin(a)])
        c = np.array([x, y]) - axis * ob.com_offset
        p1 = c - axis * (ob.half_length + ob.radius)
        p2 = c + axis * (ob.half_length + ob.radius)
        spans = _segments_cross(p1, p2, w.fingertip_world(0), w.fingertip_world(1))
        if state["ejected_at"] is None and (not spans or state["max_gap"] > cfg["retention"]["max_contact_gap"]):
            state["ejected_at"] = w.t

    sim.run(total, callback=watch)
    retained = state["ejected_at"] is None
    res.add("retained", retained, retained, "bar spans fingertip line; no long contact loss")
    res.add("max_contact_gap_s", state["max_gap"], state["max_gap"] <= cfg["retention"]["max_contact_gap"],
            f"<= {cfg['retention']['max_contact_gap']} s")
    tick_metric(res, [sim])
    invariant_metrics(res, [sim])
    res.info["pulses"] = pulses
    res.info["ejected_at"] = state["ejected_at"]
    res.info["final_bar_pose"] = world.opos[0].tolist()
    return res
