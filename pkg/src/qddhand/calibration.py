"""Current-limit calibration from a target static fingertip force."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .motor import MotorParams
from .transmission import (
    FingerGeometry,
    TransmissionParams,
    forward_kinematics,
    jacobian,
    joint_torque_to_motor_torque,
)

TARGET_FORCE = 8.2
# first link along the palm normal, second bent a right angle: a push along X
# loads only the proximal joint, so the two motors share it equally and
# saturate together
REFERENCE_POSE = (0.0, math.pi / 2)
REFERENCE_DIRECTION = (1.0, 0.0)


class CalibrationInfeasible(RuntimeError):
    def __init__(self, message: str, binding: str):
        super().__init__(message)
        self.binding = binding


@dataclass
class CalibrationReport:
    target_force: float
    pose: np.ndarray
    direction: np.ndarray
    joint_torques: np.ndarray
    motor_torques: np.ndarray
    kt: float
    i_max: float
    stall_voltage: float
    v_max: float
    binding: str
    lines: list = field(default_factory=list)

    @property
    def tau_max(self) -> float:
        return self.kt * self.i_max

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"

    def as_dict(self) -> dict:
        return {
            "target_force_N": self.target_force,
            "pose_rad": self.pose.tolist(),
            "direction": self.direction.tolist(),
            "joint_torques_Nm": self.joint_torques.tolist(),
            "motor_torques_Nm": self.motor_torques.tolist(),
            "kt_Nm_per_A": self.kt,
            "i_max_A": self.i_max,
            "tau_max_Nm": self.tau_max,
            "stall_voltage_V": self.stall_voltage,
            "v_max_V": self.v_max,
            "binding": self.binding,
        }


def calibrate_force(
    motor: MotorParams = None,
    transmission: TransmissionParams = None,
    geometry: FingerGeometry = None,
    target: float = TARGET_FORCE,
    pose=REFERENCE_POSE,
    direction=REFERENCE_DIRECTION,
) -> CalibrationReport:
    """Smallest current limit that lets the fingertip hold ``target`` newtons.

    Statics: joint torques J^T F, motor torques through the drive-train
    transpose, then the most loaded motor sets i_max = |tau_q|max / K_t.
    The stall voltage R i_max must fit inside the modulation limit.
    """
    motor = motor or MotorParams()
    transmission = transmission or TransmissionParams()
    geometry = geometry or FingerGeometry()
    pose = np.asarray(pose, dtype=float)
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    force = target * u
    tau_theta = jacobian(pose, geometry).T @ force
    tau_q = joint_torque_to_motor_torque(tau_theta, transmission)
    worst = float(np.max(np.abs(tau_q)))
    if worst == 0.0:
        raise CalibrationInfeasible("pose cannot resist the requested force direction", "kinematic")
    i_max = worst / motor.kt
    v_stall = motor.R * i_max
    binding = "force"
    if v_stall > motor.v_max:
        raise CalibrationInfeasible(
            f"stall voltage {v_stall:.3f} V for i_max {i_max:.3f} A exceeds limit {motor.v_max:.3f} V",
            "voltage",
        )
    tip = forward_kinematics(pose, geometry)
    lines = [
        "fingertip force calibration",
        f"target force        {target:.4f} N along ({u[0]:.3f}, {u[1]:.3f})",
        f"reference pose      theta = ({pose[0]:.4f}, {pose[1]:.4f}) rad, tip = ({tip[0]:.5f}, {tip[1]:.5f}) m",
        f"joint torques       J^T F = ({tau_theta[0]:.6f}, {tau_theta[1]:.6f}) N m",
        f"motor torques       ({tau_q[0]:.6f}, {tau_q[1]:.6f}) N m",
        f"torque constant     K_t = {motor.kt:.6f} N m/A",
        f"current limit       i_max = {i_max:.4f} A  (tau_max = {worst:.6f} N m)",
        f"stall voltage       R i_max = {v_stall:.4f} V <= {motor.v_max:.4f} V",
        f"binding constraint  {binding}",
    ]
    return CalibrationReport(target, pose, u, tau_theta, tau_q, motor.kt, i_max, v_stall, motor.v_max, binding, lines)


def closed_loop_saturation(cfg=None, i_max: float = None, duration: float = 0.4, seed: int = 0,
                           record: bool = False) -> dict:
    """Push the left fingertip into a wall at the reference pose with a
    saturating stiffness; return the settled normal force on the wall."""
    from . import config as C
    from .impedance import CartesianGains
    from .plant import StaticBox

    cfg = C.load_config() if cfg is None else cfg
    cfg = C.deep_merge(cfg, {"world": {"gravity": [0.0, 0.0]}})
    if i_max is not None:
        cfg = C.deep_merge(cfg, {"motor": {"i_max": float(i_max)}})
    fingers = C.fingers_from(cfg)
    g = fingers[0]
    tip = forward_kinematics(REFERENCE_POSE, g)
    face = tip[0] + g.radius
    wall = StaticBox("wall", face, tip[1] - 0.03, face + 0.04, tip[1] + 0.03)
    world = C.build_world(cfg, statics=[wall])
    sim = C.build_sim(cfg, world, seed=seed, record=record)
    sim.set_finger_pose(0, REFERENCE_POSE)
    sim.set_finger_pose(1, (0.0, 0.0))
    sim.controllers[0].set_gains(CartesianGains((2000.0, 0.0), (5.0, 5.0), tip + np.array([0.05, 0.0])))
    forces = []
    sim.run(duration, callback=lambda s: forces.append(s.world.reaction.copy()))
    tail = np.array(forces[len(forces) // 2:])
    fx = float(np.mean(np.abs(tail[:, 0])))
    return {
        "force_N": fx,
        "i_max_A": sim.motor.i_max,
        "theta": world.th[0].tolist(),
        "peak_command_torque_Nm": sim.peak_cmd_torque,
        "tau_max_Nm": sim.motor.tau_max,
        "sim": sim,
    }
