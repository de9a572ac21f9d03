"""Coin pick at a table edge.

The hand is turned so the fingers point at the table edge: the upper finger
reaches over the table top and the lower finger sits below it, facing the
table's side face. The controller is never told where the edge is.

1. Engage: the upper fingertip presses the coin into the table by a fixed
   depth past its surface (constant normal force); the lower fingertip is
   driven softly into the side face and holds its top flush with the table
   top.
2. Drag: the upper target sweeps toward the palm, sliding the coin over the
   edge. The sweep ends when the upper fingertip is above the lower one, as
   measured by the finger encoders alone.
3. Pinch: the lower fingertip pushes up under the overhanging coin while the
   upper one keeps pressing.
4. Withdraw: the fingertip targets freeze in the hand frame and the hand
   moves away from the table and up, pulling the coin clear.

The pick succeeds when the coin ends between both fingertips, off the table
and entirely past the edge.
"""
from __future__ import annotations

import math

import numpy as np

from .. import config as C
from ..plant import HandPose, ObjectBody, StaticBox
from ..transmission import inverse_kinematics
from .base import INVARIANT_METRICS, ScenarioResult, cartesian, invariant_metrics, tick_metric

NAME = "coin_pick"
METRICS = ("picked_all", "coin_past_edge", "inner_per_outer") + INVARIANT_METRICS

DEFAULTS = {
    "hand": {"x": 0.07, "y": -0.02},
    "table": {"edge": 0.0, "edge_offsets": [-0.01, -0.005, 0.0, 0.005, 0.01]},
    "coin": {"half_length": 0.011, "radius": 0.001, "mass": 0.005, "x": -0.025},
    "press": {"depth": 0.005, "stiffness": 300.0, "damping": 3.0},
    "side": {"stiffness": 50.0, "reach": 0.03, "flush_offset": 0.0},
    "drag": {"speed": 0.04, "max_stroke": 0.08},
    "pinch": {"settle": 0.2},
    "withdraw": {"dx": 0.03, "dy": 0.01, "speed": 0.04, "hold": 0.3},
    "engage": {"settle": 0.3},
}

# a hovering fingertip has no normal force, so no friction drags the coin
FAILING_OVERRIDES = ["press.depth=-0.003"]


class CoinPicker:
    """Phase logic; targets are world points converted to the hand frame."""

    def __init__(self, cfg, pose: HandPose, r_tip: float):
        self.cfg = cfg
        self.pose = pose
        self.r = r_tip
        co, pr, sd = cfg["coin"], cfg["press"], cfg["side"]
        top = 2.0 * co["radius"]
        self.upper = np.array([co["x"], top + r_tip - pr["depth"]])
        self.lower = np.array([co["x"] - sd["reach"], -r_tip + sd["flush_offset"]])
        self.phase = "engage"
        self.t_phase = 0.0
        self.stroke = 0.0
        self.drag_end = None
        self.pinch_at = None
        self.done = False

    def _enter(self, phase, t):
        self.phase, self.t_phase = phase, t

    def _gains(self, s):
        pr, sd = self.cfg["press"], self.cfg["side"]
        k, b = pr["stiffness"], pr["damping"]
        # hand X is world Y (normal to the table), hand Y is world -X
        if self.phase in ("engage", "drag"):
            lower = cartesian((k, sd["stiffness"]), self.pose.to_hand(self.lower), b)
        else:
            lower = cartesian(k, self.pose.to_hand(self.lower), b)
        upper = cartesian(k, self.pose.to_hand(self.upper), b)
        s.controllers[0].set_gains(lower)
        s.controllers[1].set_gains(upper)

    def tip_world(self, s, f):
        return self.pose.to_world(s.fingertip_hand(f, measured=True))

    def __call__(self, s):
        cfg = self.cfg
        t = s.world.t
        el = t - self.t_phase
        dt = s.rates.dt_outer
        if self.phase == "engage" and el >= cfg["engage"]["settle"]:
            self._enter("drag", t)
        elif self.phase == "drag":
            up, lo = self.tip_world(s, 1), self.tip_world(s, 0)
            if up[0] >= lo[0] or self.stroke >= cfg["drag"]["max_stroke"]:
                self.drag_end = t
                # stop pressing into the side face; push up under the coin
                self.lower = np.array([lo[0], -self.r + cfg["press"]["depth"]])
                self.upper[0] = up[0]
                self._enter("pinch", t)
            else:
                step = cfg["drag"]["speed"] * dt
                self.stroke += step
                self.upper[0] += step
        elif self.phase == "pinch" and el >= cfg["pinch"]["settle"]:
            self.pinch_at = t
            wd = cfg["withdraw"]
            s.trajectory = HandWithdraw(self.pose.pos, (wd["dx"], wd["dy"]), wd["speed"], t)
            self._enter("withdraw", t)
        elif self.phase == "withdraw":
            if s.trajectory.finished(t) and el >= s.trajectory.duration + cfg["withdraw"]["hold"]:
                self.done = True
            return
        self._gains(s)


class HandWithdraw:
    """Straight constant-speed hand move starting at ``t0``."""

    def __init__(self, p0, delta, speed: float, t0: float):
        self.p0 = np.asarray(p0, dtype=float).copy()
        d = np.asarray(delta, dtype=float)
        self.length = float(np.linalg.norm(d))
        self.u = d / self.length if self.length > 0 else np.zeros(2)
        self.speed = speed
        self.t0 = t0
        self.duration = self.length / speed if speed > 0 else 0.0

    def finished(self, t) -> bool:
        return t - self.t0 >= self.duration

    def __call__(self, t):
        s = min(max(t - self.t0, 0.0), self.duration)
        moving = 0.0 <= t - self.t0 < self.duration
        vel = self.u * self.speed if moving else np.zeros(2)
        return tuple(self.p0 + self.u * self.speed * s), tuple(vel), (0.0, 0.0)


def pick_once(cfg, seed: int, edge: float):
    co = cfg["coin"]
    pose = HandPose(np.array([cfg["hand"]["x"], cfg["hand"]["y"]]), math.pi / 2)
    fingers = C.fingers_from(cfg)
    r_tip = fingers[0].radius
    table = StaticBox("table", edge - 0.3, -0.3, edge, 0.0, material="wood")
    coin = ObjectBody("coin", "capsule", co["mass"], co["radius"], co["half_length"],
                      pos=(co["x"], co["radius"]), material="metal")
    world = C.build_world(cfg, objects=[coin], statics=[table], hand_pose=pose)
    sim = C.build_sim(cfg, world, seed=seed)
    picker = CoinPicker(cfg, pose, r_tip)
    # start clear of the coin and of the side face for every edge position
    starts = [
        np.array([edge_clear(cfg) + r_tip, -r_tip - 0.002]),
        np.array([co["x"], 2.0 * co["radius"] + r_tip + 0.003]),
    ]
    for f, g in enumerate(fingers):
        sim.set_finger_pose(f, inverse_kinematics(pose.to_hand(starts[f]), g))
    sim.run(10.0, callback=picker, until=lambda s: picker.done)
    w = world
    x, y, a = w.opos[0]
    ends = np.array([x, x]) + np.array([-1.0, 1.0]) * co["half_length"] * abs(math.cos(a))
    pinched = w.in_contact("finger0", "coin") and w.in_contact("finger1", "coin")
    on_table = w.in_contact("table", "coin")
    past = float(ends.min() - co["radius"] - edge)
    info = {
        "edge": edge,
        "picked": bool(picker.done and pinched and not on_table and past > 0.0),
        "pinched": bool(pinched),
        "touching_table": bool(on_table),
        "clearance_past_edge": past,
        "drag_end": picker.drag_end,
        "coin_final": w.opos[0].tolist(),
        "finished": picker.done,
    }
    return sim, info


def edge_clear(cfg) -> float:
    """World x beyond the farthest edge position."""
    tb = cfg["table"]
    return tb["edge"] + max(tb["edge_offsets"] + [0.0]) + 0.008


def run(cfg, seed: int) -> ScenarioResult:
    tb = cfg["table"]
    edges = [tb["edge"] + o for o in tb["edge_offsets"]] or [tb["edge"]]
    sims, runs = [], []
    for e in edges:
        sim, info = pick_once(cfg, seed, e)
        sims.append(sim)
        runs.append(info)
    res = ScenarioResult(NAME, METRICS, sim=sims[0], telemetry=sims[0].recorder)
    res.extra_telemetry = {f"edge_{i}": s.recorder for i, s in enumerate(sims[1:], start=1)}
    picked = [r["picked"] for r in runs]
    res.add("picked_all", picked, all(picked), "coin pinched and lifted off for every edge position")
    past = [r["clearance_past_edge"] for r in runs]
    res.add("coin_past_edge", past, all(p > 0 for p in past), "coin entirely beyond the table edge")
    tick_metric(res, sims)
    invariant_metrics(res, sims)
    res.info["runs"] = runs
    return res
