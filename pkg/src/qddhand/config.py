"""JSON run configuration: defaults, validation, dotted-key overrides and
builders for the world, motors and loop rates."""
from __future__ import annotations

import copy
import difflib
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

from .motor import EncoderModel, MotorParams
from .plant import HandPose, ObjectBody, StaticBox, World, WorldConfig, default_fingers
from .sim import HandSim, Rates
from .transmission import TransmissionParams

SCHEMA_VERSION = 1
DEFAULT_SEED = 42


class ConfigError(ValueError):
    """Malformed configuration (maps to CLI exit code 2)."""


BASE_DEFAULTS: Dict[str, Any] = {
    "schema_version": SCHEMA_VERSION,
    "transmission": {"n1": 2.57, "n2": 1.0},
    "finger": {
        "l1": 0.05531,
        "l2": 0.05,
        "separation": 0.12,
        "radius": 0.007,
        "link_masses": [0.02, 0.015],
        "theta_min": [-math.pi / 2, 0.0],
        "theta_max": [math.pi / 2, 3 * math.pi / 4],
        "material": "rubber",
    },
    "palm": {"enabled": True, "half_width": 0.045, "thickness": 0.016, "material": "plastic"},
    "motor": {
        "kv_rating": 360.0,
        "pole_pairs": 7,
        "R": 0.11,
        "L": 30e-6,
        "v_bus": 12.0,
        "i_max": 3.326,
        "rotor_inertia": 1.2e-5,
        "friction": 2e-5,
        "bandwidth_hz": 500.0,
        "current_noise": 0.01,
    },
    "encoder": {"cpr": 16384, "cutoff_hz": 150.0, "feedforward_cutoff_hz": 1000.0},
    "rates": {"outer_hz": 1000.0, "inner_ratio": 5, "substeps": 4},
    "world": {
        "gravity": [0.0, -9.81],
        "contact_stiffness": 2e4,
        "contact_damping": 50.0,
        "tangential_stiffness": 2e4,
        "tangential_damping": 50.0,
        "default_friction": 0.5,
        "joint_limit_stiffness": 50.0,
        "joint_limit_damping": 0.05,
        "tip_region": 0.02,
        "friction": {
            "plastic/rubber": 0.8,
            "metal/rubber": 0.8,
            "metal/wood": 0.3,
            "rubber/wood": 0.8,
            "plastic/wood": 0.5,
            "plastic/plastic": 0.4,
        },
    },
    "telemetry": {"full_rate": False, "contacts": True},
}


def deep_merge(base: Mapping, extra: Mapping) -> Dict[str, Any]:
    out = copy.deepcopy(dict(base))
    for k, v in extra.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), Mapping):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def leaf_keys(cfg: Mapping, prefix: str = "") -> List[str]:
    """Dotted paths of every non-mapping value."""
    keys = []
    for k, v in cfg.items():
        path = f"{prefix}{k}"
        if isinstance(v, Mapping) and v and k != "friction":
            keys += leaf_keys(v, path + ".")
        else:
            keys.append(path)
    return keys


def get_path(cfg: Mapping, dotted: str) -> Any:
    node = cfg
    for part in dotted.split("."):
        node = node[part]
    return node


def _suggest(word: str, options: Iterable[str]) -> str:
    close = difflib.get_close_matches(word, list(options), n=1)
    return f" (did you mean {close[0]!r}?)" if close else ""


def validate(cfg: Mapping, schema: Mapping, prefix: str = "") -> None:
    """Every key of ``cfg`` must exist in ``schema`` (friction tables are open)."""
    for k, v in cfg.items():
        path = f"{prefix}{k}"
        if k not in schema:
            raise ConfigError(f"unknown config key {path!r}{_suggest(k, schema)}")
        ref = schema[k]
        if isinstance(ref, Mapping):
            if not isinstance(v, Mapping):
                raise ConfigError(f"config key {path!r} must be an object")
            if k == "friction":
                for pair, mu in v.items():
                    if not isinstance(mu, (int, float)) or mu < 0:
                        raise ConfigError(f"friction {pair!r} must be a non-negative number")
                continue
            validate(v, ref, path + ".")
        elif isinstance(ref, bool):
            if not isinstance(v, bool):
                raise ConfigError(f"config key {path!r} must be true/false")
        elif isinstance(ref, (int, float)) and ref is not None:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"config key {path!r} must be a number, got {v!r}")
        elif isinstance(ref, list):
            if not isinstance(v, list):
                raise ConfigError(f"config key {path!r} must be a list")
        elif isinstance(ref, str) and not isinstance(v, str):
            raise ConfigError(f"config key {path!r} must be a string")
    if cfg.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {cfg.get('schema_version')!r}")


def parse_override(item: str):
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not KEY=VALUE")
    key, raw = item.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"override {item!r} has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def apply_override(cfg: Dict[str, Any], key: str, value: Any) -> None:
    parts = key.split(".")
    node = cfg
    for i, part in enumerate(parts[:-1]):
        if not isinstance(node, dict) or part not in node:
            where = ".".join(parts[:i + 1])
            raise ConfigError(f"unknown config key {where!r}{_suggest(part, node if isinstance(node, dict) else [])}")
        node = node[part]
    last = parts[-1]
    if not isinstance(node, dict):
        raise ConfigError(f"cannot override inside non-object at {key!r}")
    friction_table = len(parts) >= 2 and parts[-2] == "friction"
    if last not in node and not friction_table:
        raise ConfigError(f"unknown config key {key!r}{_suggest(last, node)}")
    node[last] = value


def load_config(
    scenario_defaults: Mapping = None,
    path: Optional[str] = None,
    overrides: Sequence[str] = (),
) -> Dict[str, Any]:
    """Defaults <- optional JSON file <- dotted overrides, validated against the defaults."""
    schema = deep_merge(BASE_DEFAULTS, scenario_defaults or {})
    cfg = copy.deepcopy(schema)
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config document must be a JSON object")
        if "schema_version" not in user:
            raise ConfigError("config document lacks schema_version")
        validate(user, schema)
        cfg = deep_merge(cfg, user)
    for item in overrides:
        key, value = parse_override(item)
        apply_override(cfg, key, value)
    validate(cfg, schema)
    return cfg


# ---------------------------------------------------------------- builders
def transmission_from(cfg) -> TransmissionParams:
    return TransmissionParams(**cfg["transmission"])


def motor_from(cfg) -> MotorParams:
    m = dict(cfg["motor"])
    m["pole_pairs"] = int(m["pole_pairs"])
    return MotorParams(**m)


def encoder_from(cfg) -> EncoderModel:
    e = cfg["encoder"]
    return EncoderModel(cpr=int(e["cpr"]), cutoff_hz=float(e["cutoff_hz"]),
                        feedforward_cutoff_hz=float(e["feedforward_cutoff_hz"]))


def rates_from(cfg) -> Rates:
    r = cfg["rates"]
    return Rates(float(r["outer_hz"]), int(r["inner_ratio"]), int(r["substeps"]))


def fingers_from(cfg):
    f = cfg["finger"]
    return default_fingers(
        l1=f["l1"], l2=f["l2"], separation=f["separation"], radius=f["radius"],
        theta_min=f["theta_min"], theta_max=f["theta_max"],
    )


def world_config_from(cfg) -> WorldConfig:
    w = cfg["world"]
    rates = rates_from(cfg)
    return WorldConfig(
        gravity=tuple(w["gravity"]),
        contact_stiffness=w["contact_stiffness"],
        contact_damping=w["contact_damping"],
        tangential_stiffness=w["tangential_stiffness"],
        tangential_damping=w["tangential_damping"],
        friction=dict(w["friction"]),
        default_friction=w["default_friction"],
        joint_limit_stiffness=w["joint_limit_stiffness"],
        joint_limit_damping=w["joint_limit_damping"],
        tip_region=w["tip_region"],
        dt=rates.dt_phys,
    )


def build_world(
    cfg,
    objects: Sequence[ObjectBody] = (),
    statics: Sequence[StaticBox] = (),
    hand_pose: HandPose = None,
    world_config: WorldConfig = None,
) -> World:
    palm = cfg["palm"]
    motor = motor_from(cfg)
    return World(
        fingers=fingers_from(cfg),
        link_masses=tuple(cfg["finger"]["link_masses"]),
        transmission=transmission_from(cfg),
        rotor_inertia=motor.rotor_inertia,
        rotor_friction=motor.friction,
        config=world_config or world_config_from(cfg),
        objects=objects,
        statics=statics,
        palm={k: palm[k] for k in ("half_width", "thickness", "material")} if palm["enabled"] else {},
        hand_pose=hand_pose,
        finger_material=cfg["finger"]["material"],
    )


def build_sim(cfg, world: World, seed: int = DEFAULT_SEED, record: bool = True) -> HandSim:
    t = cfg["telemetry"]
    return HandSim(
        world,
        motor=motor_from(cfg),
        encoder=encoder_from(cfg),
        rates=rates_from(cfg),
        seed=seed,
        record=record,
        full_rate=bool(t["full_rate"]),
        record_contacts=bool(t["contacts"]),
    )
