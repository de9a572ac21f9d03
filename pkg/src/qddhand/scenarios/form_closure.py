"""Form-closure wrap of a disc resting on the palm, in joint-space impedance.

The hand points up with a disc lying on the palm. Both fingers are driven
toward a fixed joint target that lies past the object surface, so the links
fold around it and stop on it. The wrap passes with at least three distinct
contacts on the disc (links and palm) and if the disc stays caged while a set
of probe pulses is applied. The same targets and gains are used for every
disc size.
"""
from __future__ import annotations

import math

import numpy as np

from .. import config as C
from ..plant import HandPose, ObjectBody
from .base import INVARIANT_METRICS, ScenarioResult, invariant_metrics, joint, tick_metric

NAME = "form_closure"
METRICS = ("wrapped", "distinct_contacts", "probe_escape", "inner_per_outer") + INVARIANT_METRICS

DEFAULTS = {
    "hand": {"x": 0.0, "y": 0.0},
    "object": {"present": True, "radii": [0.022, 0.032], "mass": 0.05},
    "wrap": {
        "theta_start": [-0.2, 0.2],
        "theta_d": [math.radians(70.0), math.radians(110.0)],
        "stiffness": [0.3, 0.2],
        "damping": [0.015, 0.008],
        "settle": 1.0,
        "min_contacts": 3,
    },
    "probe": {
        "magnitude": 2.0,
        "directions": [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]],
        "duration": 0.1,
        "gap": 0.3,
        "escape_distance": 0.01,
    },
}

FAILING_OVERRIDES = ["object.present=false"]


def _distinct_contacts(world, name: str) -> list:
    seen = []
    for c in world.contacts():
        if name not in (c.body_a, c.body_b) or c.normal_force <= 0.0:
            continue
        other = c.body_b if c.body_a == name else c.body_a
        if all(o != other or np.linalg.norm(c.point - p) > 2e-3 for o, p in seen):
            seen.append((other, c.point))
    return seen


def wrap_once(cfg, seed: int, radius):
    wr, pr = cfg["wrap"], cfg["probe"]
    pose = HandPose(np.array([cfg["hand"]["x"], cfg["hand"]["y"]]), 0.0)
    objects = []
    if radius is not None:
        objects.append(ObjectBody("disc", "disc", cfg["object"]["mass"], radius, pos=pose.to_world((0.0, radius)),
                                  material="plastic"))
    world = C.build_world(cfg, objects=objects, hand_pose=pose)
    sim = C.build_sim(cfg, world, seed=seed)
    for f in range(2):
        sim.set_finger_pose(f, wr["theta_start"])
        sim.controllers[f].set_gains(joint(wr["stiffness"], wr["theta_d"], wr["damping"]))
    sim.run(wr["settle"])
    contacts = _distinct_contacts(world, "disc") if objects else []
    info = {"radius": radius, "contacts": [o for o, _ in contacts], "theta": world.th.tolist()}
    escaped = radius is None
    if objects:
        home = world.opos[0, :2].copy()
        t = world.t
        for d in pr["directions"]:
            u = np.asarray(d, dtype=float)
            world.apply_external_wrench("disc", pr["magnitude"] * u / np.linalg.norm(u), pr["duration"], start=t)
            t += pr["duration"] + pr["gap"]
        worst = [0.0]

        def watch(s):
            worst[0] = max(worst[0], float(np.linalg.norm(s.world.opos[0, :2] - home)))

        sim.run(t - world.t, callback=watch)
        escaped = worst[0] > pr["escape_distance"]
        info["max_probe_displacement"] = worst[0]
    return sim, contacts, escaped, info


def run(cfg, seed: int) -> ScenarioResult:
    radii = cfg["object"]["radii"] if cfg["object"]["present"] else [None]
    sims, counts, escapes, infos = [], [], [], []
    for r in radii:
        sim, contacts, escaped, info = wrap_once(cfg, seed, r)
        sims.append(sim)
        counts.append(len(contacts))
        escapes.append(escaped)
        infos.append(info)
    res = ScenarioResult(NAME, METRICS, sim=sims[0], telemetry=sims[0].recorder)
    need = cfg["wrap"]["min_contacts"]
    wrapped = all(c >= need for c in counts) and not any(escapes)
    res.add("wrapped", wrapped, wrapped, "every object size wrapped and caged")
    res.add("distinct_contacts", counts, all(c >= need for c in counts), f">= {need} per object")
    res.add("probe_escape", escapes, not any(escapes), f"displacement under probes <= {cfg['probe']['escape_distance']} m")
    tick_metric(res, sims)
    invariant_metrics(res, sims)
    res.info["runs"] = infos
    return res
