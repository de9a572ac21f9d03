"""Belt + differential bevel-gear drive train and planar finger kinematics.

Each finger has two motors. The first joint is driven by the difference of
the motor displacements and the second joint by their sum, after a belt
reduction ``n1`` and a bevel reduction ``n2``.

Finger frame convention (hand frame, metres):

* the palm surface lies on ``y = 0`` and fingers extend towards ``+y``;
* ``theta1`` is measured from the palm normal (``+y``), positive closing the
  finger towards the hand centreline;
* ``theta2`` is measured relative to link 1, positive closing;
* the left finger (``mirror = +1``) sits at ``x < 0`` and closes towards
  ``+x``; the right finger (``mirror = -1``) is its mirror image.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TOTAL_FINGER_LENGTH = 0.10531


@dataclass(frozen=True)
class TransmissionParams:
    n1: float = 2.57
    n2: float = 1.0

    def __post_init__(self):
        if not (self.n1 > 0 and self.n2 > 0):
            raise ValueError(f"reductions must be positive, got n1={self.n1}, n2={self.n2}")

    @property
    def motor_to_joint_matrix(self) -> np.ndarray:
        n1, n2 = self.n1, self.n2
        return np.array(
            [[1.0 / (2 * n1), -1.0 / (2 * n1)], [1.0 / (2 * n1 * n2), 1.0 / (2 * n1 * n2)]]
        )

    @property
    def joint_to_motor_matrix(self) -> np.ndarray:
        n1, n2 = self.n1, self.n2
        return np.array([[n1, n1 * n2], [-n1, n1 * n2]])

    @property
    def torque_matrix(self) -> np.ndarray:
        """Joint torques -> motor torques."""
        n1, n2 = self.n1, self.n2
        return np.array(
            [[1.0 / (2 * n1), 1.0 / (2 * n1 * n2)], [-1.0 / (2 * n1), 1.0 / (2 * n1 * n2)]]
        )

    @property
    def inverse_torque_matrix(self) -> np.ndarray:
        """Motor torques -> joint torques."""
        n1, n2 = self.n1, self.n2
        return np.array([[n1, -n1], [n1 * n2, n1 * n2]])

    def reflected_diagonal(self, per_motor: float) -> np.ndarray:
        """Joint-space image of an identical per-motor inertia or viscous term.

        Kinetic energy 0.5*J*(dq1^2 + dq2^2) with dq = G dtheta gives G^T G,
        which is diagonal for this drive.
        """
        g = self.joint_to_motor_matrix
        return per_motor * np.diag(g.T @ g)


@dataclass
class MotorAngles:
    q: np.ndarray
    q_dot: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.q_dot = np.asarray(self.q_dot, dtype=float)


@dataclass
class JointState:
    theta: np.ndarray
    theta_dot: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        self.theta_dot = np.asarray(self.theta_dot, dtype=float)


@dataclass(frozen=True)
class FingerGeometry:
    l1: float = 0.05531
    l2: float = 0.05
    base: tuple = (-0.06, 0.0)
    mirror: int = 1
    radius: float = 0.007
    theta_min: tuple = (-np.pi / 2, 0.0)
    theta_max: tuple = (np.pi / 2, 3 * np.pi / 4)

    def __post_init__(self):
        if self.l1 <= 0 or self.l2 <= 0:
            raise ValueError("link lengths must be positive")
        if self.mirror not in (1, -1):
            raise ValueError("mirror must be +1 (left) or -1 (right)")

    @property
    def length(self) -> float:
        return self.l1 + self.l2

    def within_limits(self, theta, tol: float = 0.0) -> bool:
        theta = np.asarray(theta)
        return bool(
            np.all(theta >= np.asarray(self.theta_min) - tol)
            and np.all(theta <= np.asarray(self.theta_max) + tol)
        )


def motor_to_joint(q: MotorAngles, p: TransmissionParams) -> JointState:
    m = p.motor_to_joint_matrix
    return JointState(q.q @ m.T, q.q_dot @ m.T)


def joint_to_motor(js: JointState, p: TransmissionParams) -> MotorAngles:
    g = p.joint_to_motor_matrix
    return MotorAngles(js.theta @ g.T, js.theta_dot @ g.T)


def joint_torque_to_motor_torque(tau_theta, p: TransmissionParams) -> np.ndarray:
    return np.asarray(tau_theta, dtype=float) @ p.torque_matrix.T


def motor_torque_to_joint_torque(tau_q, p: TransmissionParams) -> np.ndarray:
    return np.asarray(tau_q, dtype=float) @ p.inverse_torque_matrix.T


def _angles(theta):
    if isinstance(theta, JointState):
        theta = theta.theta
    return np.asarray(theta, dtype=float)


def forward_kinematics(theta, g: FingerGeometry) -> np.ndarray:
    """Fingertip (distal link end) position in the hand frame."""
    th = _angles(theta)
    t1 = th[..., 0]
    t12 = t1 + th[..., 1]
    x = g.base[0] + g.mirror * (g.l1 * np.sin(t1) + g.l2 * np.sin(t12))
    y = g.base[1] + g.l1 * np.cos(t1) + g.l2 * np.cos(t12)
    return np.stack([x, y], axis=-1)


def link_points(theta, g: FingerGeometry):
    """Base, knuckle and tip positions (each shape (2,)) in the hand frame."""
    th = _angles(theta)
    base = np.asarray(g.base, dtype=float)
    knuckle = base + g.l1 * np.array([g.mirror * np.sin(th[0]), np.cos(th[0])])
    return base, knuckle, forward_kinematics(th, g)


def jacobian(theta, g: FingerGeometry) -> np.ndarray:
    """Analytic d(fingertip)/d(theta). Singular exactly when sin(theta2) = 0."""
    th = _angles(theta)
    t1 = th[0]
    t12 = th[0] + th[1]
    c1, s1, c12, s12 = np.cos(t1), np.sin(t1), np.cos(t12), np.sin(t12)
    m = g.mirror
    return np.array(
        [
            [m * (g.l1 * c1 + g.l2 * c12), m * g.l2 * c12],
            [-(g.l1 * s1 + g.l2 * s12), -g.l2 * s12],
        ]
    )


def inverse_kinematics(x, g: FingerGeometry) -> np.ndarray:
    """Closed-form IK with the knuckle bent inwards (theta2 >= 0).

    Raises ValueError for targets outside the reachable annulus.
    """
    rel = np.asarray(x, dtype=float) - np.asarray(g.base, dtype=float)
    u = g.mirror * rel[0]
    v = rel[1]
    r2 = u * u + v * v
    c2 = (r2 - g.l1**2 - g.l2**2) / (2 * g.l1 * g.l2)
    if c2 > 1 + 1e-12 or c2 < -1 - 1e-12:
        raise ValueError(f"target {x} is outside the finger workspace")
    t2 = np.arccos(np.clip(c2, -1.0, 1.0))
    # u = l1 sin t1 + l2 sin(t1+t2), v = l1 cos t1 + l2 cos(t1+t2)
    t1 = np.arctan2(u, v) - np.arctan2(g.l2 * np.sin(t2), g.l1 + g.l2 * np.cos(t2))
    return np.array([t1, t2])
