"""Simulation of a two-finger quasi-direct-drive hand with impedance control."""
from ._jit import backend_name
from .impedance import (
    CartesianGains,
    GainError,
    ImpedanceCommand,
    ImpedanceController,
    JointGains,
    cartesian_impedance,
    critical_damping,
    joint_impedance,
)
from .motor import (
    EncoderModel,
    FocDrive,
    MotorParams,
    SimulationDiverged,
    clarke_park,
    inverse_park_clarke,
    motor_electrical_step,
    pi_current_step,
    torque_constant,
    torque_to_current,
)
from .plant import (
    ContactPoint,
    HandPose,
    ObjectBody,
    StaticBox,
    World,
    WorldConfig,
    apply_external_wrench,
    detect_contacts,
    fingertip_wrench,
    step_world,
)
from .sim import HandSim, Rates
from .transmission import (
    FingerGeometry,
    JointState,
    MotorAngles,
    TransmissionParams,
    forward_kinematics,
    inverse_kinematics,
    jacobian,
    joint_to_motor,
    joint_torque_to_motor_torque,
    motor_to_joint,
    motor_torque_to_joint_torque,
)

__version__ = "0.1.0"
