"""Reference trajectories with analytic derivatives up to third order.

Each generator maps time to a path progress ``s(t)`` (metres) through a speed
profile and then maps progress to the plane.  Derivatives are propagated with
truncated Taylor arithmetic (:class:`Jet`), so every sample carries exact
first, second and third time derivatives without hand-expanded chain rules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "Jet",
    "TrajectorySample",
    "TrajectorySpec",
    "sample",
    "min_speed",
    "fd_derivatives",
]

_FACT = (1.0, 1.0, 2.0, 6.0)


class Jet:
    """Truncated Taylor polynomial ``c0 + c1 h + c2 h^2 + c3 h^3``.

    Only the operations needed by the path generators are defined.
    """

    __slots__ = ("c",)

    def __init__(self, c):
        self.c = c

    @classmethod
    def variable(cls, t: float) -> "Jet":
        return cls((float(t), 1.0, 0.0, 0.0))

    @classmethod
    def const(cls, v: float) -> "Jet":
        return cls((float(v), 0.0, 0.0, 0.0))

    @property
    def value(self) -> float:
        return self.c[0]

    def derivatives(self) -> tuple[float, float, float, float]:
        return tuple(ck * f for ck, f in zip(self.c, _FACT))

    def __add__(self, o):
        if isinstance(o, Jet):
            return Jet(tuple(a + b for a, b in zip(self.c, o.c)))
        return Jet((self.c[0] + o,) + self.c[1:])

    __radd__ = __add__

    def __neg__(self):
        return Jet(tuple(-a for a in self.c))

    def __sub__(self, o):
        return self + (-o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if isinstance(o, Jet):
            a, b = self.c, o.c
            return Jet(
                (
                    a[0] * b[0],
                    a[0] * b[1] + a[1] * b[0],
                    a[0] * b[2] + a[1] * b[1] + a[2] * b[0],
                    a[0] * b[3] + a[1] * b[2] + a[2] * b[1] + a[3] * b[0],
                )
            )
        return Jet(tuple(a * o for a in self.c))

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        a = self.c
        q0 = 1.0 / a[0]
        q1 = -a[1] * q0 * q0
        q2 = -(a[1] * q1 + a[2] * q0) * q0
        q3 = -(a[1] * q2 + a[2] * q1 + a[3] * q0) * q0
        return Jet((q0, q1, q2, q3))

    def __truediv__(self, o):
        if isinstance(o, Jet):
            return self * o.reciprocal()
        return self * (1.0 / o)

    def sincos(self) -> tuple["Jet", "Jet"]:
        a0, a1, a2, a3 = self.c
        s, c = math.sin(a0), math.cos(a0)
        # sin/cos of (a0 + d) with d = a1 h + a2 h^2 + a3 h^3
        d2 = a1 * a1
        sin_c = (s, c * a1, c * a2 - 0.5 * s * d2, c * a3 - s * a1 * a2 - c * d2 * a1 / 6.0)
        cos_c = (c, -s * a1, -s * a2 - 0.5 * c * d2, -s * a3 - c * a1 * a2 + s * d2 * a1 / 6.0)
        return Jet(sin_c), Jet(cos_c)


class TrajectorySample(NamedTuple):
    t: float
    x: float
    y: float
    dx: float
    dy: float
    ddx: float
    ddy: float
    dddx: float
    dddy: float


def _smoothstep_integral(u):
    # antiderivative of the quintic smoothstep, zero at u = 0
    u4 = u * u * u * u
    return u4 * (2.5 - 3.0 * u + u * u)


@dataclass(frozen=True)
class TrajectorySpec:
    """Geometry and timing of a reference path.

    ``kind`` is one of ``line``, ``circle``, ``lemniscate`` or
    ``polyline-smoothed``.  ``speed`` is the cruise path speed in m/s; for the
    lemniscate it is the speed at the crossing point (the speed dips to
    ``speed / sqrt(2)`` at the lobe tips).  With ``ramp_time > 0`` the speed
    starts at ``ramp_from * speed`` and blends to ``speed`` with a quintic
    profile, keeping the samples C3.

    Geometric fields used per kind:

    * line: ``start``, ``heading``
    * circle: ``center``, ``radius``, ``phase`` (start angle), ``direction`` (+1 CCW)
    * lemniscate: ``center``, ``scale`` (half width), ``rotation``
    * polyline-smoothed: ``points``, ``blend`` (corner blend length, m)
    """

    kind: str = "circle"
    speed: float = 0.5
    duration: float = 20.0
    t0: float = 0.0
    ramp_time: float = 0.0
    ramp_from: float = 1.0
    start: tuple[float, float] = (0.0, 0.0)
    heading: float = 0.0
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0
    phase: float = 0.0
    direction: int = 1
    scale: float = 1.0
    rotation: float = 0.0
    points: tuple[tuple[float, float], ...] = field(default_factory=tuple)
    blend: float = 0.5

    KINDS = ("line", "circle", "lemniscate", "polyline-smoothed")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"kind must be one of {self.KINDS} (got {self.kind!r})")
        if not self.speed > 0.0:
            raise ValueError(f"speed must be positive (got {self.speed!r})")
        if not self.duration > 0.0:
            raise ValueError(f"duration must be positive (got {self.duration!r})")
        if self.ramp_time < 0.0:
            raise ValueError("ramp_time must be non-negative")
        if not 0.0 < self.ramp_from <= 1.0:
            raise ValueError("ramp_from must lie in (0, 1]")
        if self.kind == "circle":
            if not self.radius > 0.0:
                raise ValueError(f"radius must be positive (got {self.radius!r})")
            if self.direction not in (1, -1):
                raise ValueError("direction must be +1 or -1")
        if self.kind == "lemniscate" and not self.scale > 0.0:
            raise ValueError(f"scale must be positive (got {self.scale!r})")
        if self.kind == "polyline-smoothed":
            self._check_polyline()

    def _check_polyline(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise ValueError("polyline needs at least two 2-D points")
        lengths = np.hypot(*np.diff(pts, axis=0).T)
        if np.any(lengths <= 0.0):
            raise ValueError("polyline has repeated points")
        if not self.blend > 0.0:
            raise ValueError("blend must be positive")
        if np.any(lengths[1:-1] <= self.blend) or (
            len(lengths) > 1 and (lengths[0] <= self.blend / 2 or lengths[-1] <= self.blend / 2)
        ):
            raise ValueError("blend length too long for polyline segments")
        d = np.diff(pts, axis=0) / lengths[:, None]
        if np.any(np.einsum("ij,ij->i", d[:-1], d[1:]) <= -1.0 + 1e-9):
            raise ValueError("polyline reverses direction; cannot keep positive speed")

    @property
    def t_end(self) -> float:
        return self.t0 + self.duration


def _progress(spec: TrajectorySpec, t: Jet) -> Jet:
    """Path progress s(t) in metres."""
    tau = t - spec.t0
    v = spec.speed
    Tr = spec.ramp_time
    if Tr <= 0.0 or spec.ramp_from == 1.0:
        return tau * v
    rho = spec.ramp_from
    if tau.value <= Tr:
        u = tau / Tr
        return v * (rho * tau + (1.0 - rho) * Tr * _smoothstep_integral(u))
    s_ramp = v * Tr * (rho + (1.0 - rho) * 0.5)
    return s_ramp + v * (tau - Tr)


def _geometry(spec: TrajectorySpec, s: Jet) -> tuple[Jet, Jet]:
    kind = spec.kind
    if kind == "line":
        c, sn = math.cos(spec.heading), math.sin(spec.heading)
        return spec.start[0] + c * s, spec.start[1] + sn * s
    if kind == "circle":
        R = spec.radius
        sin_a, cos_a = (spec.phase + spec.direction * (s / R)).sincos()
        return spec.center[0] + R * cos_a, spec.center[1] + R * sin_a
    if kind == "lemniscate":
        A = spec.scale
        sin_p, cos_p = (s / A).sincos()
        den = (1.0 + sin_p * sin_p).reciprocal()
        u = A * cos_p * den
        w = A * sin_p * cos_p * den
        cr, sr = math.cos(spec.rotation), math.sin(spec.rotation)
        return spec.center[0] + cr * u - sr * w, spec.center[1] + sr * u + cr * w
    return _polyline(spec, s)


def _polyline(spec: TrajectorySpec, s: Jet) -> tuple[Jet, Jet]:
    pts = [tuple(map(float, p)) for p in spec.points]
    b = spec.blend
    dirs, starts = [], []
    S = 0.0
    for p, q in zip(pts[:-1], pts[1:]):
        L = math.hypot(q[0] - p[0], q[1] - p[1])
        dirs.append(((q[0] - p[0]) / L, (q[1] - p[1]) / L))
        starts.append(S)
        S += L
    sv = s.value
    for j in range(1, len(dirs)):
        if abs(sv - starts[j]) < 0.5 * b:
            # direction blends from segment j-1 to j around vertex j
            d_in, d_out = dirs[j - 1], dirs[j]
            base = s - (starts[j] - 0.5 * b)
            I = b * _smoothstep_integral(base / b)
            p_c = pts[j]
            x = p_c[0] - 0.5 * b * d_in[0] + d_in[0] * base + (d_out[0] - d_in[0]) * I
            y = p_c[1] - 0.5 * b * d_in[1] + d_in[1] * base + (d_out[1] - d_in[1]) * I
            return x, y
    j = max([0] + [i for i in range(len(dirs)) if starts[i] <= sv])
    off = s - starts[j]
    return pts[j][0] + dirs[j][0] * off, pts[j][1] + dirs[j][1] * off


def sample(spec: TrajectorySpec, t: float) -> TrajectorySample:
    """Position and time derivatives to order three at time ``t``."""
    if not (spec.t0 - 1e-12 <= t <= spec.t_end + 1e-9):
        raise ValueError(f"t={t!r} outside [{spec.t0}, {spec.t_end}]")
    x, y = _geometry(spec, _progress(spec, Jet.variable(t)))
    x0, x1, x2, x3 = x.derivatives()
    y0, y1, y2, y3 = y.derivatives()
    return TrajectorySample(float(t), x0, y0, x1, y1, x2, y2, x3, y3)


def min_speed(spec: TrajectorySpec) -> float:
    """Lower bound on the path speed over the whole domain."""
    v = spec.speed * spec.ramp_from
    if spec.kind == "lemniscate":
        return v / math.sqrt(2.0)
    if spec.kind == "polyline-smoothed":
        pts = np.asarray(spec.points, dtype=float)
        d = np.diff(pts, axis=0)
        d /= np.hypot(*d.T)[:, None]
        if len(d) > 1:
            # the blended direction is shortest halfway through the blend
            cos_turn = np.einsum("ij,ij->i", d[:-1], d[1:])
            return v * float(np.min(np.sqrt(0.5 * (1.0 + cos_turn))))
    return v


def fd_derivatives(positions: Sequence[float], h: float) -> np.ndarray:
    """Finite-difference derivatives of uniformly sampled positions.

    Returns an array of shape ``(3, N)`` (or ``(3, N, ...)`` for stacked
    coordinates) with first, second and third derivatives.  Interior points
    use second-order central stencils; the edges use second-order one-sided
    stencils.
    """
    p = np.asarray(positions, dtype=float)
    n = p.shape[0]
    if n < 7:
        raise ValueError(f"need at least 7 samples, got {n}")
    if not h > 0.0:
        raise ValueError("h must be positive")
    d1 = np.empty_like(p)
    d2 = np.empty_like(p)
    d3 = np.empty_like(p)

    d1[1:-1] = (p[2:] - p[:-2]) / (2 * h)
    d1[0] = (-3 * p[0] + 4 * p[1] - p[2]) / (2 * h)
    d1[-1] = (3 * p[-1] - 4 * p[-2] + p[-3]) / (2 * h)

    d2[1:-1] = (p[2:] - 2 * p[1:-1] + p[:-2]) / h**2
    d2[0] = (2 * p[0] - 5 * p[1] + 4 * p[2] - p[3]) / h**2
    d2[-1] = (2 * p[-1] - 5 * p[-2] + 4 * p[-3] - p[-4]) / h**2

    d3[2:-2] = (p[4:] - 2 * p[3:-1] + 2 * p[1:-3] - p[:-4]) / (2 * h**3)
    fwd = (-5 * p[0:2] + 18 * p[1:3] - 24 * p[2:4] + 14 * p[3:5] - 3 * p[4:6]) / (2 * h**3)
    bwd = (5 * p[-2:] - 18 * p[-3:-1] + 24 * p[-4:-2] - 14 * p[-5:-3] + 3 * p[-6:-4]) / (2 * h**3)
    d3[:2] = fwd
    d3[-2:] = bwd
    return np.stack([d1, d2, d3])
