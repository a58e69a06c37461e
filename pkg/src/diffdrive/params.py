"""Physical parameters of the robot and their lumped reductions.

The platform is reduced to two inertias: a translational one ``m`` that
absorbs the wheel masses and the wheel/rotor spin inertia reflected through
the gearbox, and a yaw inertia ``J``.  The remaining coefficients are the
gains of the state-space model used by :mod:`diffdrive.dynamics`::

    Jy  = Jky + n^2 Jry
    m   = m1 + 2 mk + 2 Jy / r^2
    J   = J1 + 2 Jkz + (m - m1) l^2 + m1 a^2
    a45 = m1 a / m      m4 = 1 / (m r)
    a54 = -m1 a / J     m5 = 1 / (J r)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .dynamics import PoseState


class ParameterError(ValueError):
    """A physical parameter violates its constraint.

    ``field`` names the offending attribute so callers (the scenario loader in
    particular) can map it back to a configuration key.
    """

    def __init__(self, field: str, message: str):
        super().__init__(message)
        self.field = field


@dataclass(frozen=True)
class RobotParams:
    """Mass and geometry of the three-wheeled platform (SI units).

    ``a`` is the half distance between the drive wheels and ``l`` the wheel
    offset used in the yaw inertia; the two are independent.
    """

    m1: float = 10.0
    mk: float = 0.5
    J1: float = 0.2
    Jky: float = 0.0006
    Jkz: float = 0.001
    Jry: float = 0.0001
    n: float = 2.0
    r: float = 0.05
    a: float = 0.15
    l: float = 0.15

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value):
                raise ParameterError(f.name, f"{f.name} must be finite (got {value!r})")
        for name in ("m1", "mk", "J1", "Jky", "Jkz", "Jry", "r", "a"):
            value = getattr(self, name)
            if value <= 0.0:
                raise ParameterError(name, f"{name} must be positive (got {value!r})")
        if self.l < 0.0:
            raise ParameterError("l", f"l must be non-negative (got {self.l!r})")
        if self.n < 1.0:
            raise ParameterError("n", f"n must be at least 1 (got {self.n!r})")

    def scaled(self, **multipliers: float) -> "RobotParams":
        """Return a copy with selected fields multiplied, e.g. ``scaled(m1=1.2)``."""
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        for name, k in multipliers.items():
            if name not in values:
                raise ParameterError(name, f"unknown robot parameter {name!r}")
            values[name] = values[name] * k
        return RobotParams(**values)


@dataclass(frozen=True)
class LumpedParams:
    """Reduced coefficients of the planar model (see module docstring)."""

    m: float
    J: float
    Jy: float
    a45: float
    a54: float
    m4: float
    m5: float


def lump_params(p: RobotParams) -> LumpedParams:
    Jy = p.Jky + p.n**2 * p.Jry
    m = p.m1 + 2.0 * p.mk + 2.0 * Jy / p.r**2
    J = p.J1 + 2.0 * p.Jkz + (m - p.m1) * p.l**2 + p.m1 * p.a**2
    return LumpedParams(
        m=m,
        J=J,
        Jy=Jy,
        a45=p.m1 * p.a / m,
        a54=-p.m1 * p.a / J,
        m4=1.0 / (m * p.r),
        m5=1.0 / (J * p.r),
    )


def kinetic_energy(lp: LumpedParams, s: "PoseState") -> float:
    """Kinetic energy ``m V^2 / 2 + J omega^2 / 2`` of the platform [J]."""
    return 0.5 * lp.m * s.V * s.V + 0.5 * lp.J * s.omega * s.omega


def wheel_speeds(s: "PoseState", p: RobotParams) -> tuple[float, float]:
    """No-slip wheel spin rates ``(left, right)`` in rad/s."""
    return (s.V - p.a * s.omega) / p.r, (s.V + p.a * s.omega) / p.r
