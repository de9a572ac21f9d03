"""Planar rigid-body world: two 2-link fingers on a moving hand, the palm,
static obstacles and free objects, coupled by penalty contact with
regularised Coulomb friction.

Object shapes are all capsules internally. A disc is a capsule with zero
length; a ``box`` object is a capsule whose radius is its half-thickness,
i.e. a rounded box. Static obstacles are axis-aligned boxes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import _kernels as K
from .motor import SimulationDiverged
from .transmission import FingerGeometry, TransmissionParams


@dataclass
class WorldConfig:
    gravity: tuple = (0.0, -9.81)
    contact_stiffness: float = 2e4
    contact_damping: float = 50.0
    tangential_stiffness: Optional[float] = None
    tangential_damping: Optional[float] = None
    friction: Dict[str, float] = field(
        default_factory=lambda: {
            "plastic/rubber": 0.8,
            "metal/rubber": 0.8,
            "metal/wood": 0.3,
            "rubber/wood": 0.8,
            "plastic/wood": 0.5,
            "plastic/plastic": 0.4,
        }
    )
    default_friction: float = 0.5
    joint_limit_stiffness: float = 50.0
    joint_limit_damping: float = 0.05
    tip_region: float = 0.02
    dt: float = 50e-6

    def __post_init__(self):
        if not (self.contact_stiffness > 0 and self.contact_damping > 0):
            raise ValueError("contact stiffness and damping must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    def mu(self, mat_a: str, mat_b: str) -> float:
        key = "/".join(sorted((mat_a, mat_b)))
        return float(self.friction.get(key, self.default_friction))

    def params(self) -> np.ndarray:
        w = np.zeros(K.N_WPARAM)
        w[K.W_GX], w[K.W_GY] = self.gravity
        w[K.W_KC] = self.contact_stiffness
        w[K.W_CC] = self.contact_damping
        w[K.W_KT] = self.tangential_stiffness or self.contact_stiffness
        w[K.W_CT] = self.tangential_damping if self.tangential_damping is not None else self.contact_damping
        w[K.W_KLIM] = self.joint_limit_stiffness
        w[K.W_CLIM] = self.joint_limit_damping
        w[K.W_TIP] = self.tip_region
        return w


@dataclass
class ObjectBody:
    name: str
    shape: str
    mass: float
    radius: float
    half_length: float = 0.0
    pos: tuple = (0.0, 0.0)
    angle: float = 0.0
    vel: tuple = (0.0, 0.0)
    omega: float = 0.0
    inertia: Optional[float] = None
    com_offset: float = 0.0
    material: str = "plastic"

    def __post_init__(self):
        if self.shape not in ("disc", "capsule", "box"):
            raise ValueError(f"unknown object shape {self.shape!r}")
        if not (self.mass > 0 and self.radius > 0):
            raise ValueError("object mass and radius must be positive")
        if self.shape == "disc":
            self.half_length = 0.0
        if self.inertia is None:
            self.inertia = self.default_inertia()
        if not self.inertia > 0:
            raise ValueError("object inertia must be positive")

    def default_inertia(self) -> float:
        if self.shape == "disc":
            return 0.5 * self.mass * self.radius**2
        length = 2.0 * self.half_length
        height = 2.0 * self.radius
        inertia = self.mass * (length**2 + height**2) / 12.0
        return inertia + self.mass * self.com_offset**2


@dataclass
class StaticBox:
    name: str
    xmin: float
    ymin: float
    xmax: float
    ymax: float
    material: str = "wood"

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError(f"degenerate box {self.name}")


@dataclass
class ContactPoint:
    body_a: str
    body_b: str
    point: np.ndarray
    normal: np.ndarray
    depth: float
    normal_force: float
    tangential_force: float
    tangential_velocity: float
    regime: str


@dataclass
class ScheduledWrench:
    obj: int
    wrench: np.ndarray
    start: float
    end: float


@dataclass
class HandPose:
    pos: np.ndarray = field(default_factory=lambda: np.zeros(2))
    angle: float = 0.0

    def to_world(self, p_hand) -> np.ndarray:
        c, s = math.cos(self.angle), math.sin(self.angle)
        p = np.asarray(p_hand, dtype=float)
        return self.pos + np.array([c * p[..., 0] - s * p[..., 1], s * p[..., 0] + c * p[..., 1]]).T

    def to_hand(self, p_world) -> np.ndarray:
        c, s = math.cos(self.angle), math.sin(self.angle)
        d = np.asarray(p_world, dtype=float) - self.pos
        return np.array([c * d[..., 0] + s * d[..., 1], -s * d[..., 0] + c * d[..., 1]]).T

    def rotate_to_hand(self, v_world) -> np.ndarray:
        c, s = math.cos(self.angle), math.sin(self.angle)
        v = np.asarray(v_world, dtype=float)
        return np.array([c * v[0] + s * v[1], -s * v[0] + c * v[1]])


def default_fingers(
    l1: float = 0.05531,
    l2: float = 0.05,
    separation: float = 0.12,
    radius: float = 0.007,
    theta_min=(-np.pi / 2, 0.0),
    theta_max=(np.pi / 2, 3 * np.pi / 4),
):
    half = separation / 2
    common = dict(l1=l1, l2=l2, radius=radius, theta_min=tuple(theta_min), theta_max=tuple(theta_max))
    return (
        FingerGeometry(base=(-half, 0.0), mirror=1, **common),
        FingerGeometry(base=(half, 0.0), mirror=-1, **common),
    )


class World:
    """Arrays and bookkeeping for the planar plant.

    Fingers always exist; the palm can be disabled. The hand pose is
    prescribed (position, velocity, acceleration; fixed orientation).
    """

    def __init__(
        self,
        fingers: Sequence[FingerGeometry] = None,
        link_masses=(0.02, 0.015),
        transmission: TransmissionParams = None,
        rotor_inertia: float = 1.2e-5,
        rotor_friction: float = 2e-5,
        config: WorldConfig = None,
        objects: Sequence[ObjectBody] = (),
        statics: Sequence[StaticBox] = (),
        palm: Optional[dict] = None,
        hand_pose: HandPose = None,
        finger_material: str = "rubber",
    ):
        self.fingers = tuple(fingers) if fingers is not None else default_fingers()
        self.transmission = transmission or TransmissionParams()
        self.config = config or WorldConfig()
        self.objects = list(objects)
        self.statics = list(statics)
        self.palm = {"half_width": 0.045, "thickness": 0.016, "material": "plastic"} if palm is None else palm
        hand_pose = hand_pose or HandPose()
        self.t = 0.0
        self.steps = 0
        self.wrenches: List[ScheduledWrench] = []

        refl = self.transmission.reflected_diagonal(rotor_inertia)
        damp = self.transmission.reflected_diagonal(rotor_friction)
        self.fparam = np.zeros((2, K.N_FPARAM))
        for f, g in enumerate(self.fingers):
            row = self.fparam[f]
            row[K.F_BX], row[K.F_BY] = g.base
            row[K.F_MX] = g.mirror
            row[K.F_L1], row[K.F_L2], row[K.F_R] = g.l1, g.l2, g.radius
            row[K.F_M1], row[K.F_M2] = link_masses
            row[K.F_J1], row[K.F_J2] = refl
            row[K.F_B1], row[K.F_B2] = damp
            row[K.F_LO1], row[K.F_LO2] = g.theta_min
            row[K.F_HI1], row[K.F_HI2] = g.theta_max
        self.link_masses = tuple(link_masses)
        self.wparam = self.config.params()
        self.hand = np.zeros(7)
        self.hand[K.H_PX], self.hand[K.H_PY] = hand_pose.pos
        self.hand[K.H_ANG] = hand_pose.angle

        self.th = np.zeros((2, 2))
        self.thd = np.zeros((2, 2))
        n = max(len(self.objects), 1)
        # a dummy parked object keeps array shapes non-empty; it has no shapes
        self.opos = np.zeros((n, 3))
        self.ovel = np.zeros((n, 3))
        self.omass = np.ones((n, 2))
        self.oext = np.zeros((n, 3))
        for i, ob in enumerate(self.objects):
            self.opos[i] = (*ob.pos, ob.angle)
            self.ovel[i] = (*ob.vel, ob.omega)
            self.omass[i] = (ob.mass, ob.inertia)
        self._build_shapes(finger_material)
        ns = len(self.pairs) * K.SLOTS_PER_PAIR
        self.ts = np.zeros(max(ns, 1))
        self.co = np.zeros((max(ns, 1), K.N_CONTACT_COLS))
        # scratch
        self.frames = np.zeros((2, 6))
        self.sw = np.zeros((len(self.shapes), 4))
        self.tau_c = np.zeros((2, 2))
        self.ofrc = np.zeros((n, 3))
        self.probe = np.zeros((2, 2))
        self.reaction = np.zeros(2)
        self._refresh()

    # ------------------------------------------------------------------ setup
    def _build_shapes(self, finger_material):
        rows, names, mats = [], [], []

        def add(kind, owner, idx, a, b, r, name, mat):
            rows.append([kind, owner, idx, a[0], a[1], b[0], b[1], r])
            names.append(name)
            mats.append(mat)

        for f, g in enumerate(self.fingers):
            for k in range(2):
                add(K.CAPSULE, K.OWN_LINK, 2 * f + k, (0, 0), (0, 0), g.radius, f"finger{f}.link{k + 1}", finger_material)
        if self.palm:
            hw = self.palm["half_width"]
            r = self.palm["thickness"] / 2
            add(K.CAPSULE, K.OWN_HAND, 0, (-hw, -r), (hw, -r), r, "palm", self.palm.get("material", "plastic"))
        for sb in self.statics:
            add(K.BOX, K.OWN_STATIC, 0, (sb.xmin, sb.ymin), (sb.xmax, sb.ymax), 0.0, sb.name, sb.material)
        for i, ob in enumerate(self.objects):
            # local frame origin is the centre of mass; geometry shifted by com_offset
            a = (-ob.half_length - ob.com_offset, 0.0)
            b = (ob.half_length - ob.com_offset, 0.0)
            add(K.CAPSULE, K.OWN_OBJECT, i, a, b, ob.radius, ob.name, ob.material)
        self.shapes = np.array(rows, dtype=float).reshape(-1, K.N_SHAPE_COLS)
        self.shape_names = names
        self.shape_materials = mats

        pairs, mus = [], []
        for i in range(len(rows)):
            for j in range(i + 1, len(rows)):
                oi, oj = int(rows[i][1]), int(rows[j][1])
                dyn_i = oi in (K.OWN_LINK, K.OWN_OBJECT)
                dyn_j = oj in (K.OWN_LINK, K.OWN_OBJECT)
                if not (dyn_i or dyn_j):
                    continue
                if oi == K.OWN_LINK and oj in (K.OWN_LINK, K.OWN_HAND):
                    continue
                if oj == K.OWN_LINK and oi in (K.OWN_LINK, K.OWN_HAND):
                    continue
                a, b = (j, i) if rows[i][0] == K.BOX else (i, j)
                pairs.append([a, b, len(pairs) * K.SLOTS_PER_PAIR])
                mus.append(self.config.mu(mats[i], mats[j]))
        self.pairs = np.array(pairs, dtype=np.int64).reshape(-1, 3)
        self.pair_mu = np.array(mus, dtype=float)

    def shape_index(self, name: str) -> int:
        return self.shape_names.index(name)

    def object_index(self, name) -> int:
        if isinstance(name, (int, np.integer)):
            if not 0 <= name < len(self.objects):
                raise KeyError(f"no object with index {name}")
            return int(name)
        for i, ob in enumerate(self.objects):
            if ob.name == name:
                return i
        raise KeyError(f"no object named {name!r}")

    def _refresh(self):
        K.finger_frames(self.th, self.fparam, self.hand, self.frames)
        K.shapes_world(self.shapes, self.frames, self.hand, self.opos, self.sw)

    # ------------------------------------------------------------ hand / pose
    @property
    def hand_pose(self) -> HandPose:
        return HandPose(self.hand[[K.H_PX, K.H_PY]].copy(), float(self.hand[K.H_ANG]))

    def set_hand_motion(self, pos, vel=(0.0, 0.0), acc=(0.0, 0.0)):
        self.hand[K.H_PX], self.hand[K.H_PY] = pos
        self.hand[K.H_VX], self.hand[K.H_VY] = vel
        self.hand[K.H_AX], self.hand[K.H_AY] = acc
        self._refresh()

    def set_joint_state(self, f: int, theta, theta_dot=(0.0, 0.0)):
        self.th[f] = theta
        self.thd[f] = theta_dot
        self._refresh()

    def fingertip_world(self, f: int) -> np.ndarray:
        return self.frames[f, 4:6].copy()

    # -------------------------------------------------------------- stepping
    def apply_external_wrench(self, obj, wrench, duration: float, start: Optional[float] = None) -> ScheduledWrench:
        """Add ``wrench = (fx, fy, torque)`` to an object for ``duration`` seconds."""
        idx = self.object_index(obj)
        w = np.asarray(wrench, dtype=float)
        if w.shape == (2,):
            w = np.array([w[0], w[1], 0.0])
        if w.shape != (3,):
            raise ValueError("wrench must be (fx, fy[, torque])")
        t0 = self.t if start is None else float(start)
        sw = ScheduledWrench(idx, w, t0, t0 + float(duration))
        self.wrenches.append(sw)
        return sw

    def _update_external(self):
        self.oext[:] = 0.0
        for w in self.wrenches:
            if w.start <= self.t + 1e-12 < w.end:
                self.oext[w.obj] += w.wrench

    def step(self, joint_torques=None, dt: Optional[float] = None) -> int:
        """Advance the plant one step with given actuator joint torques (2, 2)."""
        dt = self.config.dt if dt is None else dt
        tau = np.zeros((2, 2)) if joint_torques is None else np.asarray(joint_torques, dtype=float).reshape(2, 2)
        self._update_external()
        status = K.phys_substep(
            self.th, self.thd, self.opos, self.ovel, self.omass, self.oext, self.hand, self.fparam,
            self.wparam, self.shapes, self.pairs, self.pair_mu, self.ts, self.co, tau, dt,
            self.frames, self.sw, self.tau_c, self.ofrc, self.probe, self.reaction,
        )
        self.t += dt
        self.steps += 1
        self.check(status)
        self._refresh()
        return status

    def check(self, status: int):
        if status != K.STATUS_OK or not (np.all(np.isfinite(self.th)) and np.all(np.isfinite(self.opos))):
            raise SimulationDiverged(
                f"simulation diverged at t={self.t:.5f}s: theta={self.th.tolist()}, objects={self.opos.tolist()}"
            )

    # ------------------------------------------------------------- queries
    def contacts(self) -> List[ContactPoint]:
        """Contacts resolved during the most recent step."""
        out = []
        for p, (a, b, slot0) in enumerate(self.pairs):
            for s in range(K.SLOTS_PER_PAIR):
                row = self.co[slot0 + s]
                if row[K.C_ACTIVE] == 0.0:
                    continue
                out.append(
                    ContactPoint(
                        self.shape_names[a], self.shape_names[b],
                        row[[K.C_PX, K.C_PY]].copy(), row[[K.C_NX, K.C_NY]].copy(),
                        float(row[K.C_DEPTH]), float(row[K.C_FN]), float(row[K.C_FT]),
                        float(row[K.C_VT]), "stick" if row[K.C_STICK] else "slip",
                    )
                )
        return out

    def contact_between(self, name_a: str, name_b: str) -> List[ContactPoint]:
        return [c for c in self.contacts() if {c.body_a, c.body_b} == {name_a, name_b}
                or (c.body_a.startswith(name_a) and c.body_b.startswith(name_b))
                or (c.body_a.startswith(name_b) and c.body_b.startswith(name_a))]

    def in_contact(self, prefix_a: str, prefix_b: str) -> bool:
        names = self.shape_names
        for a, b, slot0 in self.pairs:
            na, nb = names[a], names[b]
            if (na.startswith(prefix_a) and nb.startswith(prefix_b)) or (
                na.startswith(prefix_b) and nb.startswith(prefix_a)
            ):
                if np.any(self.co[slot0:slot0 + K.SLOTS_PER_PAIR, K.C_ACTIVE] != 0.0):
                    return True
        return False

    def fingertip_wrench(self, f: int, frame: str = "hand") -> np.ndarray:
        """Net contact force on finger ``f``'s tip region from the last step."""
        force = self.probe[f].copy()
        if frame == "hand":
            return self.hand_pose.rotate_to_hand(force)
        return force

    def energy(self) -> float:
        """Kinetic + gravitational energy of free objects and contact spring energy.

        Fingers are excluded; use for plant checks with fingers parked clear.
        """
        e = 0.0
        g = np.array(self.config.gravity)
        for i in range(len(self.objects)):
            m, inertia = self.omass[i]
            v = self.ovel[i]
            e += 0.5 * m * (v[0] ** 2 + v[1] ** 2) + 0.5 * inertia * v[2] ** 2
            e -= m * float(g @ self.opos[i, :2])
        kc = self.wparam[K.W_KC]
        kt = self.wparam[K.W_KT]
        active = self.co[:, K.C_ACTIVE] != 0.0
        e += float(np.sum(0.5 * kc * self.co[active, K.C_DEPTH] ** 2))
        e += float(np.sum(0.5 * kt * self.ts[active] ** 2))
        return e


def detect_contacts(world: World) -> List[ContactPoint]:
    """Resolve contacts for the current state without advancing or mutating it."""
    probe = World.__new__(World)
    probe.__dict__.update(world.__dict__)
    probe.ts = world.ts.copy()
    probe.co = np.zeros_like(world.co)
    tau_c, ofrc, prb, reaction = np.zeros((2, 2)), np.zeros_like(world.ofrc), np.zeros((2, 2)), np.zeros(2)
    K.finger_frames(world.th, world.fparam, world.hand, world.frames)
    K.shapes_world(world.shapes, world.frames, world.hand, world.opos, world.sw)
    K.detect_and_apply(
        world.shapes, world.sw, world.pairs, world.pair_mu, world.frames, world.fparam, world.thd,
        world.hand, world.opos, world.ovel, world.wparam, probe.ts, probe.co, tau_c, ofrc, prb,
        reaction, 0.0,
    )
    return probe.contacts()


def step_world(world: World, joint_torques, dt: Optional[float] = None):
    """Advance ``world`` by one step and return (world, contacts)."""
    world.step(joint_torques, dt)
    return world, world.contacts()


def fingertip_wrench(world: World, finger: int) -> np.ndarray:
    return world.fingertip_wrench(finger)


def apply_external_wrench(world: World, obj, wrench, duration: float) -> ScheduledWrench:
    return world.apply_external_wrench(obj, wrench, duration)
