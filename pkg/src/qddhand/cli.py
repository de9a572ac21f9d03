"""Command-line entry point.

Exit codes: 0 all metrics pass, 1 a metric failed, 2 bad configuration or
unknown scenario, 3 the simulation diverged, 4 force calibration infeasible.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path
from typing import List, Optional

from . import config as C
from . import scenarios
from .calibration import CalibrationInfeasible, calibrate_force
from .motor import SimulationDiverged
from .scenarios.base import _jsonable

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_INFEASIBLE = 4

OUT_ENV = "QDDHAND_OUT"
DEFAULT_OUT = "qddhand_out"


def output_dir(arg: Optional[str]) -> Path:
    return Path(arg or os.environ.get(OUT_ENV) or DEFAULT_OUT)


def _dump(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=False) + "\n"


def write_artifacts(result, cfg, out: Path, seed: int, plots: bool = False) -> List[Path]:
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    summary = result.summary()
    summary["seed"] = seed
    (out / "summary.json").write_text(_dump(summary))
    (out / "config.json").write_text(_dump(cfg))
    paths += [out / "summary.json", out / "config.json"]
    if result.telemetry is not None:
        paths += result.telemetry.write(out, "telemetry")
    for key, rec in sorted(result.extra_telemetry.items()):
        paths += rec.write(out, f"telemetry_{key}")
    if plots:
        from .plots import write_plots

        paths += write_plots(result, out)
    return paths


def cmd_run(args) -> int:
    try:
        spec = scenarios.get(args.scenario)
        cfg = C.load_config(spec.defaults, path=args.config, overrides=args.override or [])
    except (scenarios.UnknownScenario, C.ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    seed = C.DEFAULT_SEED if args.seed is None else args.seed
    t0 = time.perf_counter()
    try:
        result = spec.run(cfg, seed)
    except SimulationDiverged as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except scenarios.ScenarioError as exc:
        print(f"FAIL  {spec.name}: {exc}", file=sys.stderr)
        return EXIT_FAILED
    wall = time.perf_counter() - t0
    out = output_dir(args.out) / spec.name
    write_artifacts(result, cfg, out, seed, plots=args.plots)
    for m in result.metrics.values():
        flag = "PASS" if m.passed else "FAIL"
        print(f"{flag}  {m.name} = {_short(m.value)}  ({m.criterion})")
    verdict = "PASS" if result.passed else "FAIL"
    print(f"{verdict}  {spec.name}  seed={seed}  wall={wall:.1f}s  out={out}")
    return EXIT_OK if result.passed else EXIT_FAILED


def _short(value) -> str:
    v = _jsonable(value)
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, list):
        return "[" + ", ".join(f"{x:.4g}" if isinstance(x, float) else str(x) for x in v) + "]"
    return str(v)


def cmd_list(args) -> int:
    entries = [
        {"name": s.name, "experiment": s.experiment, "description": s.description, "metrics": list(s.metrics)}
        for s in scenarios.SCENARIOS.values()
    ]
    if args.json:
        print(json.dumps(entries, indent=2))
    else:
        width = max(len(e["name"]) for e in entries)
        for e in entries:
            print(f"{e['name']:<{width}}  [{e['experiment']}] {e['description']}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    try:
        cfg = C.load_config(path=args.config, overrides=args.override or [])
    except C.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = calibrate_force(
            C.motor_from(cfg), C.transmission_from(cfg), C.fingers_from(cfg)[0], target=args.target
        )
    except CalibrationInfeasible as exc:
        print(f"infeasible ({exc.binding}): {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    out = output_dir(args.out) / "calibrate_force"
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.txt").write_text(report.text())
    (out / "report.json").write_text(_dump(report.as_dict()))
    sys.stdout.write(report.text())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qddhand", description="Two-finger quasi-direct-drive hand simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario and write its artifacts")
    r.add_argument("scenario")
    r.add_argument("--config", help="JSON config file merged over the scenario defaults")
    r.add_argument("--seed", type=int, help=f"RNG seed (default {C.DEFAULT_SEED})")
    r.add_argument("--override", action="append", metavar="K=V", help="dotted-key override, repeatable")
    r.add_argument("--plots", action="store_true", help="also write SVG plots")
    r.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    r.set_defaults(func=cmd_run)

    ls = sub.add_parser("list-scenarios", help="list registered scenarios")
    ls.add_argument("--json", action="store_true")
    ls.set_defaults(func=cmd_list)

    c = sub.add_parser("calibrate-force", help="solve the current limit for a fingertip force")
    c.add_argument("--config")
    c.add_argument("--override", action="append", metavar="K=V")
    c.add_argument("--target", type=float, default=8.2, help="fingertip force in N")
    c.add_argument("--out")
    c.set_defaults(func=cmd_calibrate)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which already matches EXIT_CONFIG
        return int(exc.code or 0)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
