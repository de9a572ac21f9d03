"""Scenario plumbing: declared metrics, results, timed gain schedules and
common world-building helpers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..impedance import CartesianGains, ImpedanceCommand, JointGains
from ..sim import HandSim
from ..telemetry import Recorder


class ScenarioError(RuntimeError):
    """A scenario could not produce its metrics (e.g. too few settled samples)."""


@dataclass
class Metric:
    name: str
    value: Any
    passed: bool
    criterion: str = ""

    def as_dict(self) -> dict:
        v = self.value
        if isinstance(v, np.ndarray):
            v = v.tolist()
        elif isinstance(v, (np.floating, np.integer)):
            v = v.item()
        return {"name": self.name, "value": v, "passed": bool(self.passed), "criterion": self.criterion}


@dataclass
class ScenarioResult:
    name: str
    declared: Tuple[str, ...]
    metrics: Dict[str, Metric] = field(default_factory=dict)
    info: Dict[str, Any] = field(default_factory=dict)
    telemetry: Optional[Recorder] = None
    sim: Optional[HandSim] = None
    extra_telemetry: Dict[str, Recorder] = field(default_factory=dict)

    def add(self, name: str, value, passed: bool, criterion: str = "") -> Metric:
        if name not in self.declared:
            raise ScenarioError(f"metric {name!r} is not declared by scenario {self.name!r}")
        if name in self.metrics:
            raise ScenarioError(f"metric {name!r} evaluated twice")
        m = Metric(name, value, bool(passed), criterion)
        self.metrics[name] = m
        return m

    def finalize(self) -> "ScenarioResult":
        missing = [m for m in self.declared if m not in self.metrics]
        if missing:
            raise ScenarioError(f"scenario {self.name!r} left metrics unevaluated: {missing}")
        return self

    @property
    def passed(self) -> bool:
        return bool(self.metrics) and all(m.passed for m in self.metrics.values())

    def summary(self) -> dict:
        out = {
            "scenario": self.name,
            "passed": self.passed,
            "metrics": [self.metrics[n].as_dict() for n in self.declared if n in self.metrics],
            "info": _jsonable(self.info),
        }
        if self.sim is not None:
            out["ticks"] = {
                "outer": self.sim.outer_ticks,
                "inner": self.sim.inner_ticks,
                "physics": self.sim.phys_steps,
            }
        return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


@dataclass
class ScenarioSpec:
    """Registry entry: how to run one experiment and what it reports."""

    name: str
    description: str
    experiment: str
    defaults: Dict[str, Any]
    metrics: Tuple[str, ...]
    runner: Callable[..., ScenarioResult]
    duration: float = 1.0
    seed: int = 42

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("scenario duration must be positive")

    def run(self, cfg, seed: Optional[int] = None) -> ScenarioResult:
        res = self.runner(cfg, self.seed if seed is None else seed)
        res.finalize()
        return res


@dataclass
class TimedCommand:
    time: float
    finger: int
    command: ImpedanceCommand

    def __post_init__(self):
        if self.finger not in (0, 1):
            raise ValueError(f"schedule references finger {self.finger}; only 0 and 1 exist")


class GainSchedule:
    """Timed impedance commands, released to the controllers at the first
    outer tick whose start time reaches each entry."""

    def __init__(self, entries: Sequence[TimedCommand] = ()):
        self.entries = sorted(entries, key=lambda e: e.time)
        self._next = 0

    def add(self, time: float, finger: int, gains) -> None:
        self.entries.append(TimedCommand(time, finger, ImpedanceCommand(gains, time)))
        self.entries.sort(key=lambda e: e.time)

    def apply(self, sim: HandSim) -> None:
        while self._next < len(self.entries) and self.entries[self._next].time <= sim.t + 1e-9:
            e = self.entries[self._next]
            sim.controllers[e.finger].set_gains(e.command)
            self._next += 1


def cartesian(k, x_d, b=None, m_eff: float = 0.05) -> CartesianGains:
    k = np.broadcast_to(np.asarray(k, dtype=float), (2,)).copy()
    if b is None:
        b = 2.0 * np.sqrt(k * m_eff)
    b = np.broadcast_to(np.asarray(b, dtype=float), (2,)).copy()
    return CartesianGains(k, b, np.asarray(x_d, dtype=float))


def joint(k, theta_d, b) -> JointGains:
    k = np.broadcast_to(np.asarray(k, dtype=float), (2,)).copy()
    b = np.broadcast_to(np.asarray(b, dtype=float), (2,)).copy()
    return JointGains(k, b, np.asarray(theta_d, dtype=float))


def invariant_metrics(res: ScenarioResult, sims: Sequence[HandSim]) -> None:
    """Torque/current safety invariants shared by every scenario."""
    peak_cmd = max(s.peak_cmd_torque for s in sims)
    tau_max = sims[0].motor.tau_max
    over = max(s.max_over_current_run for s in sims)
    res.add("peak_command_torque", peak_cmd, peak_cmd <= tau_max * (1 + 1e-9), f"<= tau_max {tau_max:.5f} N m")
    res.add("over_current_ticks", over, over <= 1, "consecutive inner ticks above i_max <= 1")


INVARIANT_METRICS = ("peak_command_torque", "over_current_ticks")


def tick_metric(res: ScenarioResult, sims: Sequence[HandSim]) -> None:
    ok = all(s.inner_ticks == s.rates.inner_ratio * s.outer_ticks for s in sims)
    ratios = [s.inner_ticks / max(s.outer_ticks, 1) for s in sims]
    res.add("inner_per_outer", ratios[0] if len(set(ratios)) == 1 else ratios, ok, "exactly 5 inner ticks per outer tick")
