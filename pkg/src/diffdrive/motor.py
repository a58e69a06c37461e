"""Reluctance motor phases and the relay (sliding-mode) torque loop.

Phase ``k`` (1-based) has the inductance profile::

    L_k(theta)    = L0 + L1 cos(Nr theta - 2 pi (k - 1) / n_ph)
    dL_k/dtheta   = -L1 Nr sin(Nr theta - 2 pi (k - 1) / n_ph)

with electrical balance ``U = R i + i (dL/dtheta) omega + L di/dt`` and phase
torque ``i^2 dL/dtheta`` (optionally halved).  The torque loop picks the most
productive phase and switches its voltage between ``+Udc`` and ``-Udc`` with a
hysteresis band ``h`` on the total torque error.  Currents are unipolar: a
phase driven negative clamps at zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numba
import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class MotorParams:
    n_ph: int = 3
    Rk: float = 1.0
    L0: float = 0.02
    L1: float = 0.01
    Nr: int = 4
    Udc: float = 24.0
    h: float = 0.01
    torque_half_factor: bool = False
    demag_threshold: float = 1e-3
    substeps: int = 100

    def __post_init__(self):
        if int(self.n_ph) != self.n_ph or self.n_ph < 1:
            raise ValueError(f"n_ph must be a positive integer (got {self.n_ph!r})")
        if int(self.Nr) != self.Nr or self.Nr < 1:
            raise ValueError(f"Nr must be a positive integer (got {self.Nr!r})")
        if not self.Rk > 0.0:
            raise ValueError(f"Rk must be positive (got {self.Rk!r})")
        if not (self.L0 > self.L1 >= 0.0):
            raise ValueError(f"need L0 > L1 >= 0 (got L0={self.L0!r}, L1={self.L1!r})")
        if not self.Udc > 0.0:
            raise ValueError(f"Udc must be positive (got {self.Udc!r})")
        if not self.h > 0.0:
            raise ValueError(f"h must be positive (got {self.h!r})")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise ValueError("substeps must be a positive integer")

    @property
    def torque_coefficient(self) -> float:
        return 0.5 if self.torque_half_factor else 1.0

    @property
    def time_constant(self) -> float:
        return self.L0 / self.Rk


@dataclass(frozen=True)
class MotorState:
    """Phase currents, rotor angle/speed and the relay memory.

    ``relay`` is the last relay output (+1, -1, or 0 before the first switch)
    and ``active`` the 1-based index of the energised phase (0 when idle).
    """

    currents: tuple[float, ...]
    theta: float = 0.0
    omega_m: float = 0.0
    relay: int = 0
    active: int = 0

    @classmethod
    def at_rest(cls, mp: MotorParams, theta: float = 0.0, omega_m: float = 0.0) -> "MotorState":
        return cls(currents=(0.0,) * mp.n_ph, theta=theta, omega_m=omega_m)


def _check_phase(mp: MotorParams, k: int):
    if not 1 <= k <= mp.n_ph:
        raise IndexError(f"phase index {k} outside 1..{mp.n_ph}")


def phase_inductance(mp: MotorParams, k: int, theta: float) -> tuple[float, float]:
    _check_phase(mp, k)
    arg = mp.Nr * theta - TWO_PI * (k - 1) / mp.n_ph
    return mp.L0 + mp.L1 * math.cos(arg), -mp.L1 * mp.Nr * math.sin(arg)


def phase_torque(mp: MotorParams, k: int, theta: float, i_k: float) -> float:
    _, dL = phase_inductance(mp, k, theta)
    return mp.torque_coefficient * i_k * i_k * dL


def total_torque(mp: MotorParams, ms: MotorState) -> float:
    return sum(phase_torque(mp, k, ms.theta, i) for k, i in enumerate(ms.currents, start=1))


def current_derivative(mp: MotorParams, ms: MotorState, k: int, U_k: float) -> float:
    L, dL = phase_inductance(mp, k, ms.theta)
    i = ms.currents[k - 1]
    return (U_k - i * mp.Rk - i * dL * ms.omega_m) / L


class LoopCommand(NamedTuple):
    voltages: tuple[float, ...]
    relay: int
    active: int


def sliding_torque_loop(mp: MotorParams, ms: MotorState, M_ref: float) -> LoopCommand:
    """Relay torque regulator with commutation.

    The selected phase is the one whose inductance slope has the sign of the
    reference and the largest magnitude.  Its voltage follows a hysteresis
    relay on ``sign(M_ref) * (M_ref - M)``; all other phases are driven to
    ``-Udc`` until their current falls below ``demag_threshold``.
    """
    sigma = (M_ref > 0.0) - (M_ref < 0.0)
    active = 0
    if sigma != 0:
        best = 0.0
        for k in range(1, mp.n_ph + 1):
            slope = sigma * phase_inductance(mp, k, ms.theta)[1]
            if slope > best:
                best, active = slope, k
    relay = ms.relay
    if active:
        err = sigma * (M_ref - total_torque(mp, ms))
        if err > mp.h:
            relay = 1
        elif err < -mp.h:
            relay = -1
    else:
        relay = 0
    volts = []
    for k, i in enumerate(ms.currents, start=1):
        if k == active:
            volts.append(relay * mp.Udc)
        elif i > mp.demag_threshold:
            volts.append(-mp.Udc)
        else:
            volts.append(0.0)
    return LoopCommand(tuple(volts), relay, active)


def step_motor(mp: MotorParams, ms: MotorState, M_ref: float, dt_e: float) -> MotorState:
    """One explicit electrical step of the loop and the phase circuits.

    The rotor turns at the held speed ``ms.omega_m``.  This is the reference
    implementation; :class:`SrmDrive` runs the same arithmetic compiled.
    """
    cmd = sliding_torque_loop(mp, ms, M_ref)
    currents = []
    for k, (i, U) in enumerate(zip(ms.currents, cmd.voltages), start=1):
        i_new = i + dt_e * current_derivative(mp, ms, k, U)
        currents.append(max(i_new, 0.0))
    return replace(
        ms,
        currents=tuple(currents),
        theta=ms.theta + ms.omega_m * dt_e,
        relay=cmd.relay,
        active=cmd.active,
    )


@numba.njit(cache=True)
def _advance(
    n_ph, Rk, L0, L1, Nr, Udc, h, coef, thr, currents, theta, omega_m, relay, M_ref, dt_e, nsub
):
    sigma = 1.0 if M_ref > 0.0 else (-1.0 if M_ref < 0.0 else 0.0)
    L = np.empty(n_ph)
    dL = np.empty(n_ph)
    volts = np.empty(n_ph)
    torque_sum = 0.0
    for _ in range(nsub):
        M = 0.0
        for k in range(n_ph):
            arg = Nr * theta - 2.0 * np.pi * k / n_ph
            L[k] = L0 + L1 * np.cos(arg)
            dL[k] = -L1 * Nr * np.sin(arg)
            M += coef * currents[k] * currents[k] * dL[k]
        active = -1
        if sigma != 0.0:
            best = 0.0
            for k in range(n_ph):
                slope = sigma * dL[k]
                if slope > best:
                    best = slope
                    active = k
        if active >= 0:
            err = sigma * (M_ref - M)
            if err > h:
                relay = 1
            elif err < -h:
                relay = -1
        else:
            relay = 0
        for k in range(n_ph):
            if k == active:
                volts[k] = relay * Udc
            elif currents[k] > thr:
                volts[k] = -Udc
            else:
                volts[k] = 0.0
        for k in range(n_ph):
            i = currents[k]
            i_new = i + dt_e * (volts[k] - i * Rk - i * dL[k] * omega_m) / L[k]
            currents[k] = i_new if i_new > 0.0 else 0.0
        theta += omega_m * dt_e
        # torque produced over the substep is taken at its start (explicit)
        torque_sum += M
    return theta, relay, active + 1, torque_sum / nsub


class SrmDrive:
    """Stateful motor plus torque loop used inside system simulations.

    ``advance`` runs ``mp.substeps`` electrical steps over one mechanical step
    with the rotor speed held, and returns the mean electromagnetic torque.
    """

    def __init__(self, mp: MotorParams, theta: float = 0.0):
        self.mp = mp
        self.currents = np.zeros(mp.n_ph)
        self.theta = float(theta)
        self.relay = 0
        self.active = 0

    @property
    def state(self) -> MotorState:
        return MotorState(
            currents=tuple(map(float, self.currents)),
            theta=self.theta,
            relay=self.relay,
            active=self.active,
        )

    def advance(self, M_ref: float, omega_m: float, dt: float) -> float:
        mp = self.mp
        nsub = int(mp.substeps)
        self.theta, self.relay, self.active, mean = _advance(
            int(mp.n_ph),
            float(mp.Rk),
            float(mp.L0),
            float(mp.L1),
            float(mp.Nr),
            float(mp.Udc),
            float(mp.h),
            mp.torque_coefficient,
            float(mp.demag_threshold),
            self.currents,
            self.theta,
            float(omega_m),
            int(self.relay),
            float(M_ref),
            dt / nsub,
            nsub,
        )
        return mean


def simulate_torque_loop(
    mp: MotorParams, M_ref: float, omega_m: float, dt_e: float, T: float, theta0: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Electrical sub-simulation at constant rotor speed.

    Returns ``(t, torque)`` sampled at every electrical step, with torque
    evaluated at the start of each step.
    """
    drive = SrmDrive(replace(mp, substeps=1), theta=theta0)
    n = int(round(T / dt_e))
    torque = np.empty(n)
    for j in range(n):
        torque[j] = drive.advance(M_ref, omega_m, dt_e)
    return dt_e * np.arange(n), torque
