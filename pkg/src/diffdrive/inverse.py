"""Inverse dynamics: from a planar reference path to wheel torques.

A C3 path ``(x(t), y(t))`` fixes heading, speed, yaw rate and their rates
(the platform is differentially flat in ``(x, y)``); inverting the last two
rows of the forward model then gives the torques that reproduce it::

    M1 = (dV - a45 w^2) / (2 m4) - (a54 V w - dw) / (2 m5)
    M2 = (dV - a45 w^2) / (2 m4) + (a54 V w - dw) / (2 m5)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .dynamics import PoseState, WheelTorques
from .params import LumpedParams
from .trajectories import TrajectorySample, fd_derivatives

V_MIN_SQ_MAP = 1e-6
V_MIN_PLAN = 1e-3


class SingularSpeed(ArithmeticError):
    """Path speed fell below the floor where heading is undefined."""

    def __init__(self, t: float, speed: float, floor: float):
        super().__init__(f"path speed {speed:.3g} m/s below floor {floor:.3g} m/s at t={t!r}")
        self.t = t
        self.speed = speed
        self.floor = floor


class BodyRates(NamedTuple):
    psi: float
    V: float
    omega: float
    dV: float
    domega: float


def unwrap_near(angle: float, reference: float) -> float:
    """Shift ``angle`` by a multiple of 2*pi to lie closest to ``reference``."""
    return angle + 2.0 * math.pi * round((reference - angle) / (2.0 * math.pi))


def flat_to_body(
    ts: TrajectorySample, v_min_sq: float = V_MIN_SQ_MAP, psi_prev: Optional[float] = None
) -> BodyRates:
    """Heading, speed, yaw rate and their rates along the path.

    ``psi_prev`` is the heading of the previous sample; when given the result
    is unwrapped to stay continuous with it.
    """
    dx, dy, ddx, ddy, dddx, dddy = ts.dx, ts.dy, ts.ddx, ts.ddy, ts.dddx, ts.dddy
    q = dx * dx + dy * dy
    if not q >= v_min_sq:
        raise SingularSpeed(ts.t, math.sqrt(q), math.sqrt(v_min_sq))
    psi = math.atan2(dy, dx)
    if psi_prev is not None:
        psi = unwrap_near(psi, psi_prev)
    V = math.sqrt(q)
    cross = ddy * dx - dy * ddx
    dot = dx * ddx + dy * ddy
    omega = cross / q
    dV = dot / V
    domega = (dddy * dx - dy * dddx) / q - 2.0 * dot * cross / (q * q)
    return BodyRates(psi, V, omega, dV, domega)


def body_to_torques(br: BodyRates, lp: LumpedParams) -> WheelTorques:
    common = (br.dV - lp.a45 * br.omega**2) / (2.0 * lp.m4)
    diff = (lp.a54 * br.V * br.omega - br.domega) / (2.0 * lp.m5)
    return WheelTorques(common - diff, common + diff)


def initial_state(ts: TrajectorySample) -> PoseState:
    """Plant state that lies exactly on the path at the sample time."""
    br = flat_to_body(ts)
    return PoseState(ts.x, ts.y, br.psi, br.V, br.omega)


def body_rates_from_samples(t: np.ndarray, x: np.ndarray, y: np.ndarray) -> list[BodyRates]:
    """Body rates for a path given only as uniformly spaced positions.

    Derivatives come from second-order finite differences with the sample
    spacing as step.
    """
    t = np.asarray(t, dtype=float)
    h = float(t[1] - t[0])
    if not np.allclose(np.diff(t), h, rtol=1e-9, atol=0.0):
        raise ValueError("samples must be uniformly spaced in time")
    dxs = fd_derivatives(x, h)
    dys = fd_derivatives(y, h)
    out = []
    psi = None
    for k in range(len(t)):
        ts = TrajectorySample(
            t[k], x[k], y[k], dxs[0, k], dys[0, k], dxs[1, k], dys[1, k], dxs[2, k], dys[2, k]
        )
        br = flat_to_body(ts, psi_prev=psi)
        psi = br.psi
        out.append(br)
    return out


@dataclass(frozen=True)
class TorqueSchedule:
    """Piecewise-constant torques, one pair per integration step.

    ``torques[k]`` is held over ``[t0 + k dt, t0 + (k + 1) dt)`` and was
    evaluated at the midpoint of that interval.
    """

    t0: float
    dt: float
    torques: np.ndarray
    rates: np.ndarray

    def __call__(self, t: float) -> WheelTorques:
        k = int(math.floor((t - self.t0) / self.dt))
        k = min(max(k, 0), len(self.torques) - 1)
        return WheelTorques(*map(float, self.torques[k]))

    @property
    def t_mid(self) -> np.ndarray:
        return self.t0 + self.dt * (np.arange(len(self.torques)) + 0.5)


def plan_open_loop(
    traj: Callable[[float], TrajectorySample],
    lp: LumpedParams,
    t0: float,
    T: float,
    dt: float,
    v_min: float = V_MIN_PLAN,
) -> TorqueSchedule:
    """Feedforward torque schedule that drives the plant along ``traj``."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive (got {dt!r})")
    n = int(math.floor(T / dt + 1e-9))
    torques = np.empty((n, 2))
    rates = np.empty((n, 5))
    psi = None
    for k in range(n):
        ts = traj(t0 + (k + 0.5) * dt)
        br = flat_to_body(ts, v_min * v_min, psi)
        psi = br.psi
        rates[k] = br
        torques[k] = body_to_torques(br, lp)
    return TorqueSchedule(t0=t0, dt=dt, torques=torques, rates=rates)
