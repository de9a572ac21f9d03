"""Two-rate closed loop: impedance controllers at the outer rate, FOC current
loops and the plant at the inner rate.

One outer tick runs the impedance law for both fingers, maps joint torques
to motor torques, clamps them to current references, then executes exactly
``inner_ratio`` inner ticks. Each inner tick senses, runs both PI loops per
motor and integrates ``substeps`` plant steps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _kernels as K
from .impedance import ImpedanceController
from .motor import EncoderModel, MotorParams, SimulationDiverged, torque_to_current
from .plant import World
from .telemetry import Recorder
from .transmission import JointState, forward_kinematics, joint_torque_to_motor_torque


@dataclass(frozen=True)
class Rates:
    outer_hz: float = 1000.0
    inner_ratio: int = 5
    substeps: int = 4

    def __post_init__(self):
        if self.outer_hz <= 0 or self.inner_ratio < 1 or self.substeps < 1:
            raise ValueError("rates must be positive")

    @property
    def dt_outer(self) -> float:
        return 1.0 / self.outer_hz

    @property
    def dt_inner(self) -> float:
        return self.dt_outer / self.inner_ratio

    @property
    def dt_phys(self) -> float:
        return self.dt_inner / self.substeps


class HandSim:
    """Closed-loop hand: world + four FOC drives + two impedance controllers."""

    def __init__(
        self,
        world: World,
        motor: MotorParams = None,
        encoder: EncoderModel = None,
        rates: Rates = None,
        seed: int = 0,
        record: bool = True,
        full_rate: bool = False,
        record_contacts: bool = True,
    ):
        self.world = world
        self.motor = motor or MotorParams()
        self.encoder = encoder or EncoderModel()
        self.rates = rates or Rates()
        if abs(self.rates.dt_phys - world.config.dt) > 1e-12:
            world.config.dt = self.rates.dt_phys
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.controllers = [ImpedanceController(g) for g in world.fingers]
        self.trajectory: Optional[Callable] = None

        p = self.motor
        self.mpar = np.zeros(K.N_MPARAM)
        self.mpar[K.MP_R] = p.R
        self.mpar[K.MP_L] = p.L
        self.mpar[K.MP_LAM] = p.flux_linkage
        self.mpar[K.MP_PP] = p.pole_pairs
        self.mpar[K.MP_KP] = p.kp
        self.mpar[K.MP_KI] = p.ki
        self.mpar[K.MP_VMAX] = p.v_max
        self.mpar[K.MP_RES] = self.encoder.resolution
        self.mpar[K.MP_ALPHA] = self.encoder.alpha(self.rates.dt_inner)
        self.mpar[K.MP_DT] = self.rates.dt_inner
        self.mpar[K.MP_ALPHA_FF] = self.encoder.alpha(self.rates.dt_inner, self.encoder.feedforward_cutoff_hz)
        self.trans = np.array([world.transmission.n1, world.transmission.n2])
        self.ms = np.zeros((4, K.N_MSTATE))
        self.counters = np.zeros(2, dtype=np.int64)
        self.outer_ticks = 0
        self.iq_ref = np.zeros(4)
        self.tau_joint_cmd = np.zeros((2, 2))
        self.tau_motor_cmd = np.zeros(4)
        self.tau_act = np.zeros((2, 2))
        self.sync_encoders()

        # invariant trackers
        self.peak_cmd_torque = 0.0
        self.peak_em_torque = 0.0
        self.over_current_run = np.zeros(4, dtype=np.int64)
        self.max_over_current_run = 0
        self.over_current_margin = 1.05

        self.full_rate = full_rate
        names = [o.name for o in world.objects]
        self.recorder = Recorder(names, contacts=record_contacts) if record else None
        self.inner_hook: Optional[Callable] = None

    # ----------------------------------------------------------------- state
    @property
    def t(self) -> float:
        return self.world.t

    def sync_encoders(self):
        """Reset encoder history to the current joint state (no velocity spike)."""
        g = self.world.transmission.joint_to_motor_matrix
        for f in range(2):
            q = g @ self.world.th[f]
            for j in range(2):
                m = 2 * f + j
                self.ms[m, K.M_ENC] = K.quantize(q[j], self.encoder.resolution)
                self.ms[m, K.M_VEL] = 0.0
                self.ms[m, K.M_VFF] = 0.0

    def set_finger_pose(self, f: int, theta, theta_dot=(0.0, 0.0)):
        self.world.set_joint_state(f, theta, theta_dot)
        self.sync_encoders()

    def measured_joint_state(self, f: int) -> JointState:
        m = self.world.transmission.motor_to_joint_matrix
        q = self.ms[2 * f:2 * f + 2, K.M_ENC]
        qd = self.ms[2 * f:2 * f + 2, K.M_VEL]
        return JointState(m @ q, m @ qd)

    def fingertip_hand(self, f: int, measured: bool = False) -> np.ndarray:
        th = self.measured_joint_state(f).theta if measured else self.world.th[f]
        return forward_kinematics(th, self.world.fingers[f])

    def bus_current(self) -> float:
        p = 1.5 * (self.ms[:, K.M_VDT] * self.ms[:, K.M_ID] + self.ms[:, K.M_VQT] * self.ms[:, K.M_IQ])
        return float(np.sum(np.clip(p, 0.0, None)) / self.motor.v_bus)

    # ----------------------------------------------------------------- loops
    def _outer_control(self):
        tq = self.world.transmission
        for f, ctl in enumerate(self.controllers):
            tau = ctl.tick(self.measured_joint_state(f))
            self.tau_joint_cmd[f] = tau
            tau_q = joint_torque_to_motor_torque(tau, tq)
            for j in range(2):
                m = 2 * f + j
                _, iq = torque_to_current(tau_q[j], self.motor)
                self.iq_ref[m] = iq
                self.tau_motor_cmd[m] = iq * self.motor.kt
        self.peak_cmd_torque = max(self.peak_cmd_torque, float(np.max(np.abs(self.tau_motor_cmd))))

    def _inner(self):
        w = self.world
        sigma = self.motor.current_noise
        noise = self.rng.normal(0.0, sigma, (4, 2)) if sigma > 0 else np.zeros((4, 2))
        w._update_external()
        status = K.inner_tick(
            w.th, w.thd, w.opos, w.ovel, w.omass, w.oext, w.hand, w.fparam, w.wparam, w.shapes,
            w.pairs, w.pair_mu, w.ts, w.co, self.ms, self.mpar, self.iq_ref, noise, self.trans,
            self.counters, self.rates.substeps, self.rates.dt_phys, w.frames, w.sw, w.tau_c,
            w.ofrc, w.probe, w.reaction, self.tau_act,
        )
        w.t += self.rates.dt_inner
        w.steps += self.rates.substeps
        w.check(status)
        mag = np.hypot(self.ms[:, K.M_ID], self.ms[:, K.M_IQ])
        over = mag > self.over_current_margin * self.motor.i_max
        self.over_current_run = np.where(over, self.over_current_run + 1, 0)
        self.max_over_current_run = max(self.max_over_current_run, int(self.over_current_run.max()))
        self.peak_em_torque = max(self.peak_em_torque, float(np.max(np.abs(self.ms[:, K.M_TAU]))))
        if self.inner_hook is not None:
            self.inner_hook(self)

    def outer_tick(self):
        if self.trajectory is not None:
            pos, vel, acc = self.trajectory(self.world.t)
            self.world.set_hand_motion(pos, vel, acc)
        self._outer_control()
        for k in range(self.rates.inner_ratio):
            self._inner()
            if self.full_rate and self.recorder is not None:
                self._record()
        self.outer_ticks += 1
        if not self.full_rate and self.recorder is not None:
            self._record()

    def run(self, duration: float, callback: Optional[Callable] = None, until: Optional[Callable] = None) -> int:
        """Run for ``duration`` seconds; ``callback(sim)`` after every outer tick.

        Stops early when ``until(sim)`` returns True. Returns outer ticks executed.
        """
        n = int(round(duration * self.rates.outer_hz))
        done = 0
        for _ in range(n):
            self.outer_tick()
            done += 1
            if callback is not None:
                callback(self)
            if until is not None and until(self):
                break
        return done

    @property
    def inner_ticks(self) -> int:
        return int(self.counters[0])

    @property
    def phys_steps(self) -> int:
        return int(self.counters[1])

    # ------------------------------------------------------------- telemetry
    def _record(self):
        w = self.world
        row = [w.t, w.hand[K.H_PX], w.hand[K.H_PY]]
        for m in range(4):
            s = self.ms[m]
            row += [s[K.M_ENC], s[K.M_VEL], s[K.M_ID], s[K.M_IQ], s[K.M_TAU]]
        for f in range(2):
            js = self.measured_joint_state(f)
            x = forward_kinematics(js.theta, w.fingers[f])
            probe = w.fingertip_wrench(f)
            row += [*js.theta, *js.theta_dot, *x, *self.tau_joint_cmd[f], *probe]
        for i in range(len(w.objects)):
            row += list(w.opos[i])
        row.append(self.bus_current())
        self.recorder.add(np.array(row))
        if self.recorder.record_contacts:
            self.recorder.add_contacts(w.t, w.contacts())


def trapezoid_profile(distance: float, v_peak: float, accel: float):
    """Times (t_acc, t_cruise) of a trapezoidal move over ``distance``."""
    t_acc = v_peak / accel
    d_acc = 0.5 * accel * t_acc**2
    if 2 * d_acc >= distance:
        t_acc = math.sqrt(distance / accel)
        return t_acc, 0.0
    return t_acc, (distance - 2 * d_acc) / v_peak
