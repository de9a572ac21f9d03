"""Outer-loop impedance laws (Cartesian and joint space) with tick-boundary gain switching."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .transmission import FingerGeometry, JointState, forward_kinematics, jacobian

CARTESIAN = "cartesian"
JOINT = "joint"


class GainError(ValueError):
    """Raised for negative or malformed impedance gains."""


def _check_nonneg(name, values):
    arr = np.asarray(values, dtype=float)
    if arr.shape != (2,):
        raise GainError(f"{name} needs two entries, got {values!r}")
    if not np.all(np.isfinite(arr)):
        raise GainError(f"{name} must be finite")
    if np.any(arr < 0):
        raise GainError(f"{name} must be non-negative, got {values!r}")
    return arr


@dataclass
class CartesianGains:
    """Diagonal stiffness (N/m) and damping (N s/m) about a fingertip target (m)."""

    k: np.ndarray
    b: np.ndarray
    x_d: np.ndarray

    def __post_init__(self):
        self.k = _check_nonneg("stiffness", self.k)
        self.b = _check_nonneg("damping", self.b)
        self.x_d = np.asarray(self.x_d, dtype=float)
        if self.x_d.shape != (2,):
            raise GainError("x_d must be a 2-vector")


@dataclass
class JointGains:
    k: np.ndarray
    b: np.ndarray
    theta_d: np.ndarray

    def __post_init__(self):
        self.k = _check_nonneg("joint stiffness", self.k)
        self.b = _check_nonneg("joint damping", self.b)
        self.theta_d = np.asarray(self.theta_d, dtype=float)
        if self.theta_d.shape != (2,):
            raise GainError("theta_d must be a 2-vector")


Gains = Union[CartesianGains, JointGains]


@dataclass
class ImpedanceCommand:
    gains: Gains
    timestamp: float = 0.0

    @property
    def mode(self) -> str:
        return CARTESIAN if isinstance(self.gains, CartesianGains) else JOINT


def critical_damping(k, m_eff: float = 0.05) -> np.ndarray:
    return 2.0 * np.sqrt(np.asarray(k, dtype=float) * m_eff)


def cartesian_impedance(js: JointState, gains: CartesianGains, g: FingerGeometry) -> np.ndarray:
    """tau = J^T (K (x_d - x) - B xdot).

    No inversion of J is involved, so the law stays defined at singular poses,
    where the fingertip simply loses the ability to push along the finger axis.
    """
    x = forward_kinematics(js.theta, g)
    jac = jacobian(js.theta, g)
    xdot = jac @ js.theta_dot
    force = gains.k * (gains.x_d - x) - gains.b * xdot
    return jac.T @ force


def joint_impedance(js: JointState, gains: JointGains) -> np.ndarray:
    return gains.k * (gains.theta_d - js.theta) - gains.b * js.theta_dot


@dataclass
class ImpedanceController:
    """Per-finger impedance controller advanced by explicit outer-loop ticks.

    ``set_gains`` only queues the command; queued commands are drained at the
    start of the next ``tick`` so a tick never mixes old and new matrices.
    """

    geometry: FingerGeometry
    gains: Optional[Gains] = None
    _queue: deque = field(default_factory=deque, repr=False)
    ticks: int = 0
    last_force: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def set_gains(self, cmd: Union[ImpedanceCommand, Gains]) -> ImpedanceCommand:
        if not isinstance(cmd, ImpedanceCommand):
            cmd = ImpedanceCommand(cmd)
        if not isinstance(cmd.gains, (CartesianGains, JointGains)):
            raise GainError(f"unsupported gains type {type(cmd.gains).__name__}")
        self._queue.append(cmd)
        return cmd

    @property
    def mode(self) -> Optional[str]:
        if self.gains is None:
            return None
        return CARTESIAN if isinstance(self.gains, CartesianGains) else JOINT

    def tick(self, js: JointState) -> np.ndarray:
        while self._queue:
            self.gains = self._queue.popleft().gains
        self.ticks += 1
        if self.gains is None:
            self.last_force = np.zeros(2)
            return np.zeros(2)
        if isinstance(self.gains, CartesianGains):
            x = forward_kinematics(js.theta, self.geometry)
            jac = jacobian(js.theta, self.geometry)
            self.last_force = self.gains.k * (self.gains.x_d - x) - self.gains.b * (jac @ js.theta_dot)
            return jac.T @ self.last_force
        self.last_force = np.zeros(2)
        return joint_impedance(js, self.gains)
