"""BLDC motor model in the dq frame and the FOC torque controller.

The torque command becomes a q-axis current reference (d-axis reference is
zero); two PI regulators turn the current error into dq voltages, which are
limited to the linear-modulation circle ``V_bus / sqrt(3)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels as K


class SimulationDiverged(RuntimeError):
    """Raised when a state becomes non-finite or unbounded."""


def torque_constant(kv_rating: float) -> float:
    """K_t in N m/A for a kv rating in RPM/V."""
    return 60.0 / (2.0 * math.pi * kv_rating)


@dataclass(frozen=True)
class MotorParams:
    kv_rating: float = 360.0
    pole_pairs: int = 7
    R: float = 0.11
    L: float = 30e-6
    v_bus: float = 12.0
    i_max: float = 3.326
    rotor_inertia: float = 1.2e-5
    friction: float = 2e-5
    bandwidth_hz: float = 500.0
    current_noise: float = 0.01

    def __post_init__(self):
        for name in ("kv_rating", "R", "L", "v_bus", "i_max", "rotor_inertia", "bandwidth_hz"):
            if not getattr(self, name) > 0:
                raise ValueError(f"motor parameter {name} must be positive")
        if self.pole_pairs < 1:
            raise ValueError("pole_pairs must be >= 1")
        if self.friction < 0 or self.current_noise < 0:
            raise ValueError("friction and current_noise must be non-negative")

    @property
    def kt(self) -> float:
        return torque_constant(self.kv_rating)

    @property
    def flux_linkage(self) -> float:
        return self.kt / (1.5 * self.pole_pairs)

    @property
    def tau_max(self) -> float:
        return self.kt * self.i_max

    @property
    def v_max(self) -> float:
        return self.v_bus / math.sqrt(3.0)

    @property
    def kp(self) -> float:
        return self.L * 2 * math.pi * self.bandwidth_hz

    @property
    def ki(self) -> float:
        return self.R * 2 * math.pi * self.bandwidth_hz

    @property
    def electrical_time_constant(self) -> float:
        return self.L / self.R

    def with_(self, **kw) -> "MotorParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class EncoderModel:
    cpr: int = 16384
    cutoff_hz: float = 150.0
    feedforward_cutoff_hz: float = 1000.0

    @property
    def resolution(self) -> float:
        return 2.0 * math.pi / self.cpr

    def alpha(self, dt: float, cutoff_hz: float = None) -> float:
        tc = 1.0 / (2.0 * math.pi * (cutoff_hz or self.cutoff_hz))
        return dt / (dt + tc)


@dataclass
class MotorState:
    angle: float = 0.0
    velocity: float = 0.0
    i_d: float = 0.0
    i_q: float = 0.0
    integ_d: float = 0.0
    integ_q: float = 0.0
    enc_prev: float = 0.0
    vel_est: float = 0.0
    vel_ff: float = 0.0

    def copy(self) -> "MotorState":
        return replace(self)


@dataclass
class PIGains:
    kp: float
    ki: float
    v_limit: float

    @classmethod
    def from_motor(cls, p: MotorParams) -> "PIGains":
        return cls(p.kp, p.ki, p.v_max)


def torque_to_current(tau_cmd: float, p: MotorParams) -> tuple:
    """(i_d_ref, i_q_ref) for a shaft torque command, clamped to +-i_max."""
    iq = tau_cmd / p.kt
    return 0.0, float(np.clip(iq, -p.i_max, p.i_max))


def clarke_park(i_a: float, i_b: float, i_c: float, theta_e: float) -> tuple:
    """Amplitude-invariant Clarke transform followed by the Park rotation."""
    return K.clarke_park(float(i_a), float(i_b), float(i_c), float(theta_e))


def inverse_park_clarke(i_d: float, i_q: float, theta_e: float) -> tuple:
    return K.inverse_park_clarke(float(i_d), float(i_q), float(theta_e))


def pi_current_step(ref: float, measured: float, integ: float, gains: PIGains, dt: float) -> tuple:
    """One PI update; returns (voltage, new integrator). Integrator clamped to the limit."""
    return K.pi_step(float(ref), float(measured), float(integ), gains.kp, gains.ki, float(dt), gains.v_limit)


def electromagnetic_torque(i_q: float, p: MotorParams) -> float:
    return 1.5 * p.pole_pairs * p.flux_linkage * i_q


def motor_electrical_step(
    state: MotorState,
    v_d: float,
    v_q: float,
    load_torque: float,
    dt: float,
    p: MotorParams,
    hold_speed: bool = False,
) -> MotorState:
    """Advance one motor by ``dt``: dq currents, then rotor speed and angle.

    With ``hold_speed`` the rotor is driven at its current speed by an ideal
    dynamometer (the electrical part still sees the back-EMF).
    """
    i_d, i_q = K.motor_substep(
        state.i_d, state.i_q, v_d, v_q, state.velocity, p.R, p.L, p.flux_linkage, p.pole_pairs, dt
    )
    new = replace(state, i_d=i_d, i_q=i_q)
    if not hold_speed:
        tau = electromagnetic_torque(i_q, p)
        new.velocity = state.velocity + dt * (tau - load_torque - p.friction * state.velocity) / p.rotor_inertia
    new.angle = state.angle + dt * new.velocity
    if not all(math.isfinite(v) for v in (new.i_d, new.i_q, new.velocity, new.angle)):
        raise SimulationDiverged("motor state became non-finite")
    return new


def read_encoder(state: MotorState, model: EncoderModel, dt: float) -> tuple:
    """Quantised angle and first-order-filtered finite-difference velocity.

    Updates ``state.enc_prev`` / ``state.vel_est`` in place.
    """
    angle = K.quantize(state.angle, model.resolution)
    raw = (angle - state.enc_prev) / dt
    state.vel_est += model.alpha(dt) * (raw - state.vel_est)
    state.enc_prev = angle
    return angle, state.vel_est


@dataclass
class FocDrive:
    """Single motor with its current loop, for bench tests outside the hand.

    ``step`` runs one inner-loop tick: sense, PI, then ``substeps`` electrical
    integrations with the voltage held.
    """

    params: MotorParams = field(default_factory=MotorParams)
    encoder: EncoderModel = field(default_factory=EncoderModel)
    dt: float = 1.0 / 5000.0
    substeps: int = 4
    seed: int = 0
    state: MotorState = field(default_factory=MotorState)
    locked: bool = False
    hold_speed: bool = False

    def __post_init__(self):
        self.rng = np.random.default_rng(self.seed)
        self.gains = PIGains.from_motor(self.params)
        self.state.enc_prev = K.quantize(self.state.angle, self.encoder.resolution)
        self.v_dq = (0.0, 0.0)
        self.ticks = 0

    def step(self, tau_cmd: float, load_torque: float = 0.0) -> MotorState:
        p = self.params
        s = self.state
        _, iq_ref = torque_to_current(tau_cmd, p)
        prev = s.enc_prev
        angle_enc, _ = read_encoder(s, self.encoder, self.dt)
        raw = (angle_enc - prev) / self.dt
        s.vel_ff += self.encoder.alpha(self.dt, self.encoder.feedforward_cutoff_hz) * (raw - s.vel_ff)
        we_ff = p.pole_pairs * s.vel_ff
        th_e = p.pole_pairs * s.angle
        th_enc = p.pole_pairs * angle_enc
        ia, ib, _ = inverse_park_clarke(s.i_d, s.i_q, th_e)
        if p.current_noise > 0:
            na, nb = self.rng.normal(0.0, p.current_noise, 2)
            ia += na
            ib += nb
        idm, iqm = clarke_park(ia, ib, -ia - ib, th_enc)
        vd, s.integ_d = pi_current_step(0.0, idm, s.integ_d, self.gains, self.dt)
        vq, s.integ_q = pi_current_step(iq_ref, iqm, s.integ_q, self.gains, self.dt)
        vd -= we_ff * p.L * iqm
        vq += we_ff * (p.L * idm + p.flux_linkage)
        mag = math.hypot(vd, vq)
        if mag > p.v_max:
            vd, vq = vd * p.v_max / mag, vq * p.v_max / mag
        delta = th_enc - th_e
        c, sn = math.cos(delta), math.sin(delta)
        vdt, vqt = c * vd - sn * vq, sn * vd + c * vq
        self.v_dq = (vd, vq)
        h = self.dt / self.substeps
        for _ in range(self.substeps):
            new = motor_electrical_step(s, vdt, vqt, load_torque, h, p, hold_speed=self.hold_speed or self.locked)
            if self.locked:
                new.velocity = 0.0
                new.angle = s.angle
            s = new
        self.state = s
        self.ticks += 1
        return s

    @property
    def torque(self) -> float:
        return electromagnetic_torque(self.state.i_q, self.params)
