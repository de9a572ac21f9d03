"""Compare the numba-compiled inner tick with the plain Python fallback.

Each backend runs in its own interpreter because the choice is made at
import time (``QDDHAND_NUMBA``). The workload is a two-finger pinch of a
disc, which exercises the FOC loops, the plant and the contact solver. The
final joint state of both backends is compared as a parity check.

    python3 benchmarks/bench_kernels.py [--sim-time 0.2] [--repeat 3]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from qddhand import backend_name, config as C
from qddhand.plant import ObjectBody
from qddhand.scenarios.base import cartesian
from qddhand.transmission import inverse_kinematics

sim_time, repeat = float(sys.argv[1]), int(sys.argv[2])

def build():
    cfg = C.load_config()
    R, h = 0.025, 0.07
    disc = ObjectBody("disc", "disc", 0.03, R, pos=(0.0, h), material="plastic")
    world = C.build_world(cfg, objects=[disc])
    sim = C.build_sim(cfg, world, seed=1, record=False)
    gap = R + world.fingers[0].radius
    for f, side in enumerate((-1.0, 1.0)):
        sim.set_finger_pose(f, inverse_kinematics(np.array([side * gap, h]), world.fingers[f]))
        sim.controllers[f].set_gains(cartesian(300.0, (side * (gap - 0.005), h), 4.0))
    return sim

sim = build()
sim.run(0.005)  # compile / warm caches outside the timed region
best = float("inf")
for _ in range(repeat):
    sim = build()
    t0 = time.perf_counter()
    ticks = sim.run(sim_time)
    best = min(best, time.perf_counter() - t0)
print(json.dumps({
    "backend": backend_name(),
    "outer_ticks": ticks,
    "seconds": best,
    "ticks_per_s": ticks / best,
    "theta": sim.world.th.tolist(),
}))
"""


def run_backend(flag: str, sim_time: float, repeat: int) -> dict:
    env = dict(os.environ, QDDHAND_NUMBA=flag)
    out = subprocess.run(
        [sys.executable, "-c", WORKER, str(sim_time), str(repeat)],
        env=env, check=True, capture_output=True, text=True,
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sim-time", type=float, default=0.2, help="simulated seconds per timed run")
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    fast = run_backend("1", args.sim_time, args.repeat)
    slow = run_backend("0", args.sim_time, args.repeat)
    diff = max(abs(a - b) for ra, rb in zip(fast["theta"], slow["theta"]) for a, b in zip(ra, rb))
    for r in (fast, slow):
        rt = args.sim_time / r["seconds"]
        print(f"{r['backend']:>6}: {r['outer_ticks']} outer ticks in {r['seconds']:.3f} s "
              f"({r['ticks_per_s']:.0f} ticks/s, {rt:.2f}x real time)")
    print(f"speedup: {slow['seconds'] / fast['seconds']:.1f}x")
    print(f"max joint-angle difference between backends: {diff:.3e} rad")
    return 0


if __name__ == "__main__":
    sys.exit(main())
