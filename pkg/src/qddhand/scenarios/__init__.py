"""Registry of runnable experiments, in a fixed listing order."""
from __future__ import annotations

import difflib
from typing import Dict, List

from . import (
    calibration,
    coin_pick,
    disturbance_grasp,
    force_displacement,
    form_closure,
    inhand_roll,
    regrasp_push,
    smack_snatch,
)
from .base import ScenarioError, ScenarioResult, ScenarioSpec

_MODULES = [
    (force_displacement, "stiffness characterisation",
     "fingertip pushed into a rigid scale; force/displacement slope vs commanded stiffness", 4.0),
    (disturbance_grasp, "grasp retention",
     "pinched bar hit by a pulse train of external forces; must not be ejected", 4.0),
    (form_closure, "form closure",
     "fingers wrap discs of two sizes, then a probe force tries to pull them out", 3.0),
    (smack_snatch, "dynamic grasp",
     "zero-stiffness fingers smack a table of unknown height, trigger on deflection and snatch a ball", 1.5),
    (inhand_roll, "in-hand manipulation",
     "antisymmetric fingertip strokes roll a pinched disc without slipping", 2.3),
    (regrasp_push, "regrasping",
     "pinched disc pushed against the palm with halved normal stiffness so it slides along the tips", 12.0),
    (coin_pick, "coin picking",
     "thin coin dragged over a table edge of unknown position and pinched off it", 2.2),
    (calibration, "force calibration",
     "current limit solved for the rated fingertip force, then checked by a closed-loop wall push", 0.4),
]

SCENARIOS: Dict[str, ScenarioSpec] = {
    mod.NAME: ScenarioSpec(
        name=mod.NAME,
        description=desc,
        experiment=experiment,
        defaults=mod.DEFAULTS,
        metrics=tuple(mod.METRICS),
        runner=mod.run,
        duration=duration,
    )
    for mod, experiment, desc, duration in _MODULES
}

FAILING_OVERRIDES: Dict[str, List[str]] = {mod.NAME: list(mod.FAILING_OVERRIDES) for mod, *_ in _MODULES}


class UnknownScenario(KeyError):
    def __init__(self, name: str):
        self.name = name
        close = difflib.get_close_matches(name, list(SCENARIOS), n=1)
        self.suggestion = close[0] if close else None
        hint = f"; did you mean {self.suggestion!r}?" if self.suggestion else ""
        super().__init__(f"unknown scenario {name!r}{hint}")

    def __str__(self):
        return self.args[0]


def names() -> List[str]:
    return list(SCENARIOS)


def get(name: str) -> ScenarioSpec:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise UnknownScenario(name) from None


__all__ = ["SCENARIOS", "FAILING_OVERRIDES", "ScenarioError", "ScenarioResult", "ScenarioSpec",
           "UnknownScenario", "get", "names"]
