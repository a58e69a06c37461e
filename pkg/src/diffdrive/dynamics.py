"""Forward dynamics of the platform and its fixed-step integration.

State is ``(x, y, psi, V, omega)``: position of the axle midpoint, heading,
body speed and yaw rate.  The vector field is::

    x'     = V cos(psi)
    y'     = V sin(psi)
    psi'   = omega
    V'     = a45 omega^2 + m4 (M1 + M2)
    omega' = a54 V omega + m5 (M1 - M2)

Heading is never wrapped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .params import LumpedParams


class PoseState(NamedTuple):
    x: float = 0.0
    y: float = 0.0
    psi: float = 0.0
    V: float = 0.0
    omega: float = 0.0


class WheelTorques(NamedTuple):
    M1: float = 0.0
    M2: float = 0.0


VectorField = Callable[[PoseState, WheelTorques], PoseState]


class NumericalDivergence(ArithmeticError):
    """The integrated state became non-finite."""

    def __init__(self, step: int, state):
        super().__init__(f"non-finite state at step {step}: {tuple(state)}")
        self.step = step
        self.state = state


def state_derivative(lp: LumpedParams, s: PoseState, u: WheelTorques) -> PoseState:
    """Evaluate the vector field; the result is laid out like a :class:`PoseState`."""
    x, y, psi, V, w = s
    M1, M2 = u
    return PoseState(
        V * math.cos(psi),
        V * math.sin(psi),
        w,
        lp.a45 * w * w + lp.m4 * (M1 + M2),
        lp.a54 * V * w + lp.m5 * (M1 - M2),
    )


def power_input(lp: LumpedParams, s: PoseState, u: WheelTorques) -> float:
    """Mechanical power delivered by the drive torques.

    The Coriolis coefficients cancel in ``d/dt (m V^2/2 + J omega^2/2)``, so this
    equals the kinetic energy rate along any trajectory.
    """
    M1, M2 = u
    return ((M1 + M2) * s.V + (M1 - M2) * s.omega) * lp.m4 * lp.m


def rk4_step(field: VectorField, s: PoseState, u: WheelTorques, dt: float) -> PoseState:
    """Classical Runge-Kutta step with ``u`` held over the interval."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive (got {dt!r})")
    h2 = 0.5 * dt
    k1 = field(s, u)
    k2 = field(PoseState(*(a + h2 * b for a, b in zip(s, k1))), u)
    k3 = field(PoseState(*(a + h2 * b for a, b in zip(s, k2))), u)
    k4 = field(PoseState(*(a + dt * b for a, b in zip(s, k3))), u)
    h6 = dt / 6.0
    return PoseState(
        *(a + h6 * (b1 + 2.0 * b2 + 2.0 * b3 + b4) for a, b1, b2, b3, b4 in zip(s, k1, k2, k3, k4))
    )


@dataclass
class Telemetry:
    """Sampled run of the platform.

    ``states`` and ``energy`` hold ``n_steps + 1`` samples starting at ``t[0]``;
    ``torques[k]`` is the input held over ``[t[k], t[k+1])``.  Reference and
    error arrays are ``None`` for runs without a tracked reference.
    """

    dt: float
    t: np.ndarray
    states: np.ndarray
    torques: np.ndarray
    energy: np.ndarray
    reference: Optional[np.ndarray] = None
    error: Optional[np.ndarray] = None
    saturation_events: int = 0
    integral: Optional[np.ndarray] = None
    motor: dict = field(default_factory=dict)

    @property
    def n_steps(self) -> int:
        return len(self.torques)

    def pose(self, k: int) -> PoseState:
        return PoseState(*map(float, self.states[k]))

    @property
    def xy(self) -> np.ndarray:
        return self.states[:, :2]


def _check_finite(step: int, s: PoseState):
    if not all(math.isfinite(v) for v in s):
        raise NumericalDivergence(step, s)


def guarded_step(field: VectorField, s: PoseState, u: WheelTorques, dt: float, step: int) -> PoseState:
    """RK4 step that turns any non-finite outcome into :class:`NumericalDivergence`.

    ``step`` is the index of the state being produced.
    """
    try:
        out = rk4_step(field, s, u, dt)
    except (ValueError, OverflowError) as exc:
        raise NumericalDivergence(step, s) from exc
    _check_finite(step, out)
    return out


def simulate(
    lp: LumpedParams,
    s0: PoseState,
    torque_source: Callable[[float], WheelTorques],
    dt: float,
    T: float,
    t0: float = 0.0,
) -> Telemetry:
    """Integrate the platform under a time-scheduled torque input.

    The source is sampled once per step at the step midpoint and held over
    the step, which keeps the input discretisation second-order accurate.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive (got {dt!r})")
    if T < dt:
        raise ValueError(f"horizon T={T!r} is shorter than one step dt={dt!r}")
    n = int(math.floor(T / dt + 1e-9))

    def fld(s, u):
        return state_derivative(lp, s, u)

    states = np.empty((n + 1, 5))
    torques = np.empty((n, 2))
    s = PoseState(*map(float, s0))
    _check_finite(0, s)
    states[0] = s
    for k in range(n):
        tk = t0 + k * dt
        u = WheelTorques(*map(float, torque_source(tk + 0.5 * dt)))
        s = guarded_step(fld, s, u, dt, k + 1)
        states[k + 1] = s
        torques[k] = u
    t = t0 + dt * np.arange(n + 1)
    energy = 0.5 * lp.m * states[:, 3] ** 2 + 0.5 * lp.J * states[:, 4] ** 2
    return Telemetry(dt=dt, t=t, states=states, torques=torques, energy=energy)


def power_balance_residual(lp: LumpedParams, tel: Telemetry) -> np.ndarray:
    """Per-step relative mismatch between energy change and supplied work.

    The input is held over each step, so the work is the torque times the
    integral of ``V`` and ``omega``.  Those integrals use the end-corrected
    trapezoidal rule with the accelerations at both ends of the step, which
    is fourth-order accurate like the integrator.  Residuals are normalised by
    the largest power magnitude reached by either drive channel during the run
    so that steps where the net power crosses zero stay well defined.
    """
    s = tel.states
    u = tel.torques
    dt = tel.dt
    dE = np.diff(tel.energy) / dt
    sum_u = u[:, 0] + u[:, 1]
    dif_u = u[:, 0] - u[:, 1]
    k = lp.m4 * lp.m

    def accel(rows):
        V, w = rows[:, 3], rows[:, 4]
        return lp.a45 * w * w + lp.m4 * sum_u, lp.a54 * V * w + lp.m5 * dif_u

    dV0, dw0 = accel(s[:-1])
    dV1, dw1 = accel(s[1:])
    mean_V = 0.5 * (s[:-1, 3] + s[1:, 3]) + dt * (dV0 - dV1) / 12.0
    mean_w = 0.5 * (s[:-1, 4] + s[1:, 4]) + dt * (dw0 - dw1) / 12.0
    work_rate = k * (sum_u * mean_V + dif_u * mean_w)
    scale = np.max(k * (np.abs(sum_u * s[:-1, 3]) + np.abs(dif_u * s[:-1, 4])), initial=0.0)
    if scale == 0.0:
        scale = 1.0
    return np.abs(dE - work_rate) / scale
