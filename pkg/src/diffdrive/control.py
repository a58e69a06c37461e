"""Open-loop (feedforward only) and closed-loop position control.

Both pipelines share the torque formulator: the reference path is turned into
body rates, then into wheel torques with the *nominal* lumped parameters.
The closed loop adds a PD(+I) law on Cartesian position whose output is
rotated into the body frame.  The longitudinal part corrects ``dV`` directly;
the lateral part sets a yaw-rate target that an inner proportional loop
(gain ``Kw``) converts into a ``domega`` correction.  With all gains zero the
correction is exactly zero and the closed loop reproduces the open loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Optional

import numpy as np

from .dynamics import PoseState, Telemetry, WheelTorques, guarded_step, state_derivative
from .inverse import V_MIN_PLAN, BodyRates, body_to_torques, flat_to_body, initial_state
from .motor import MotorParams, SrmDrive
from .params import RobotParams, lump_params, wheel_speeds
from .trajectories import TrajectorySample, TrajectorySpec, sample


@dataclass(frozen=True)
class RegulatorGains:
    """Per-axis position gains and the torque limit.

    ``Kp`` [1/s^2], ``Kd`` [1/s], ``Ki`` [1/s^3]; ``Kw`` [1/s] is the inner
    yaw-rate gain; ``Mmax`` [N m] clamps each wheel torque.
    """

    Kp: float = 25.0
    Kd: float = 10.0
    Ki: float = 0.0
    Kw: float = 20.0
    Mmax: float = 0.5

    def __post_init__(self):
        for name in ("Kp", "Kd", "Ki", "Kw"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative (got {getattr(self, name)!r})")
        if not self.Mmax > 0.0:
            raise ValueError(f"Mmax must be positive (got {self.Mmax!r})")

    @classmethod
    def zero(cls, Mmax: float = 0.5) -> "RegulatorGains":
        return cls(0.0, 0.0, 0.0, 0.0, Mmax)


@dataclass(frozen=True)
class LoopConfig:
    """Everything a run needs besides the reference path.

    ``mismatch`` maps :class:`RobotParams` field names to multipliers applied
    to the plant only; the torque formulator keeps ``robot``.
    ``initial_offset`` perturbs the start state by ``(dx, dy, dpsi)``.
    """

    mode: str = "closed"
    robot: RobotParams = field(default_factory=RobotParams)
    gains: RegulatorGains = field(default_factory=RegulatorGains)
    mismatch: dict = field(default_factory=dict)
    dt: float = 1e-3
    duration: float = 20.0
    drive_model: str = "ideal"
    motor: Optional[MotorParams] = None
    v_min: float = V_MIN_PLAN
    initial_offset: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.mode not in ("open", "closed"):
            raise ValueError(f"mode must be 'open' or 'closed' (got {self.mode!r})")
        if not self.dt > 0.0:
            raise ValueError(f"dt must be positive (got {self.dt!r})")
        if self.duration < self.dt:
            raise ValueError("duration must cover at least one step")
        if self.drive_model not in ("ideal", "srm"):
            raise ValueError(f"drive_model must be 'ideal' or 'srm' (got {self.drive_model!r})")

    @property
    def plant_robot(self) -> RobotParams:
        return self.robot.scaled(**self.mismatch) if self.mismatch else self.robot


def position_regulator(
    ref: TrajectorySample, meas: PoseState, integ, gains: RegulatorGains
) -> tuple[float, float]:
    """Commanded Cartesian accelerations: reference acceleration plus PID on position."""
    vx = meas.V * math.cos(meas.psi)
    vy = meas.V * math.sin(meas.psi)
    ax = ref.ddx + gains.Kd * (ref.dx - vx) + gains.Kp * (ref.x - meas.x) + gains.Ki * integ[0]
    ay = ref.ddy + gains.Kd * (ref.dy - vy) + gains.Kp * (ref.y - meas.y) + gains.Ki * integ[1]
    return ax, ay


def accel_to_body(cmd, meas: PoseState, v_min: float = V_MIN_PLAN) -> tuple[float, float]:
    """Rotate a Cartesian acceleration into the body frame.

    Returns the longitudinal acceleration and the yaw rate that produces the
    lateral part at the measured speed.  Below ``v_min`` the lateral channel
    is dropped (heading hold).
    """
    c, s = math.cos(meas.psi), math.sin(meas.psi)
    along = cmd[0] * c + cmd[1] * s
    if abs(meas.V) < v_min:
        return along, 0.0
    return along, (cmd[1] * c - cmd[0] * s) / meas.V


def saturate(u: WheelTorques, Mmax: float) -> tuple[WheelTorques, bool]:
    """Clamp each torque to ``[-Mmax, Mmax]``; the flag reports any clamping."""
    if not Mmax > 0.0:
        raise ValueError("Mmax must be positive")
    M1 = min(max(u.M1, -Mmax), Mmax)
    M2 = min(max(u.M2, -Mmax), Mmax)
    return WheelTorques(M1, M2), (M1 != u.M1 or M2 != u.M2)


def run_open_loop(cfg: LoopConfig, spec: TrajectorySpec) -> Telemetry:
    return _run(cfg, spec, closed=False)


def run_closed_loop(cfg: LoopConfig, spec: TrajectorySpec) -> Telemetry:
    return _run(cfg, spec, closed=True)


def run(cfg: LoopConfig, spec: TrajectorySpec) -> Telemetry:
    return _run(cfg, spec, closed=cfg.mode == "closed")


def _run(cfg: LoopConfig, spec: TrajectorySpec, closed: bool) -> Telemetry:
    dt = cfg.dt
    n = int(math.floor(min(cfg.duration, spec.duration) / dt + 1e-9))
    t0 = spec.t0
    traj = partial(sample, spec)
    lp_nom = lump_params(cfg.robot)
    plant = cfg.plant_robot
    lp_plant = lump_params(plant)
    gains = cfg.gains
    v_min_sq = cfg.v_min * cfg.v_min

    def fld(s, u):
        return state_derivative(lp_plant, s, u)

    ref0 = traj(t0)
    s = initial_state(ref0)
    ox, oy, opsi = cfg.initial_offset
    s = PoseState(s.x + ox, s.y + oy, s.psi + opsi, s.V, s.omega)

    srm = cfg.drive_model == "srm"
    if srm:
        mp = cfg.motor or MotorParams(h=0.02 * gains.Mmax)
        drives = (SrmDrive(mp), SrmDrive(mp))
        motor_log = {
            "M1_ref": np.empty(n),
            "M2_ref": np.empty(n),
            "currents1": np.empty((n, mp.n_ph)),
            "currents2": np.empty((n, mp.n_ph)),
        }
    else:
        motor_log = {}

    states = np.empty((n + 1, 5))
    torques = np.empty((n, 2))
    reference = np.empty((n + 1, 2))
    integral = np.zeros((n + 1, 2))
    states[0] = s
    reference[0] = (ref0.x, ref0.y)
    integ = [0.0, 0.0]
    clamp_count = 0
    psi_ff = None
    psi_k = None
    ref_k = ref0
    for k in range(n):
        tk = t0 + k * dt
        ref_mid = traj(tk + 0.5 * dt)
        ff = flat_to_body(ref_mid, v_min_sq, psi_ff)
        psi_ff = ff.psi
        if closed:
            brk = flat_to_body(ref_k, v_min_sq, psi_k)
            psi_k = brk.psi
            ax, ay = position_regulator(ref_k, s, integ, gains)
            d_dv, d_w = accel_to_body((ax - ref_k.ddx, ay - ref_k.ddy), s, cfg.v_min)
            dV = ff.dV + d_dv
            dw = ff.domega + gains.Kw * (brk.omega + d_w - s.omega)
            u_cmd = body_to_torques(BodyRates(ff.psi, ff.V, ff.omega, dV, dw), lp_nom)
        else:
            u_cmd = body_to_torques(ff, lp_nom)
        u, clamped = saturate(u_cmd, gains.Mmax)
        clamp_count += clamped
        if closed and not clamped:
            integ[0] += (ref_k.x - s.x) * dt
            integ[1] += (ref_k.y - s.y) * dt
        if srm:
            wl, wr = wheel_speeds(s, plant)
            # M1 drives the wheel whose speed grows with positive yaw rate
            u_applied = WheelTorques(
                drives[0].advance(u.M1, plant.n * wr, dt),
                drives[1].advance(u.M2, plant.n * wl, dt),
            )
            motor_log["M1_ref"][k] = u.M1
            motor_log["M2_ref"][k] = u.M2
            motor_log["currents1"][k] = drives[0].currents
            motor_log["currents2"][k] = drives[1].currents
        else:
            u_applied = u
        s = guarded_step(fld, s, u_applied, dt, k + 1)
        states[k + 1] = s
        torques[k] = u_applied
        ref_k = traj(t0 + (k + 1) * dt)
        reference[k + 1] = (ref_k.x, ref_k.y)
        integral[k + 1] = integ

    t = t0 + dt * np.arange(n + 1)
    energy = 0.5 * lp_plant.m * states[:, 3] ** 2 + 0.5 * lp_plant.J * states[:, 4] ** 2
    error = np.hypot(states[:, 0] - reference[:, 0], states[:, 1] - reference[:, 1])
    return Telemetry(
        dt=dt,
        t=t,
        states=states,
        torques=torques,
        energy=energy,
        reference=reference,
        error=error,
        saturation_events=clamp_count,
        integral=integral,
        motor=motor_log,
    )
