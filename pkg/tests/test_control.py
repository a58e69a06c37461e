import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffdrive.control import (
    LoopConfig,
    RegulatorGains,
    accel_to_body,
    position_regulator,
    run,
    run_closed_loop,
    run_open_loop,
    saturate,
)
from diffdrive.dynamics import NumericalDivergence, PoseState, WheelTorques
from diffdrive.inverse import SingularSpeed
from diffdrive.trajectories import TrajectorySample, TrajectorySpec

LEMNISCATE = TrajectorySpec(kind="lemniscate", scale=1.5, speed=0.3, ramp_time=2.0, ramp_from=0.5)
CIRCLE = TrajectorySpec(kind="circle", radius=1.0, speed=0.5)


def ref_at(x=0.0, y=0.0, dx=0.0, dy=0.0, ddx=0.0, ddy=0.0):
    return TrajectorySample(0.0, x, y, dx, dy, ddx, ddy, 0.0, 0.0)


def test_regulator_zero_error():
    g = RegulatorGains()
    assert position_regulator(ref_at(dx=1.0), PoseState(V=1.0), (0.0, 0.0), g) == (0.0, 0.0)


def test_regulator_pure_position_error():
    g = RegulatorGains(Kp=25.0, Kd=10.0)
    ax, ay = position_regulator(ref_at(x=1.0, ddx=0.3, ddy=-0.2), PoseState(), (0.0, 0.0), g)
    assert ax == pytest.approx(25.3)
    assert ay == pytest.approx(-0.2)


def test_regulator_integral_term():
    g = RegulatorGains(Kp=1.0, Kd=1.0, Ki=4.0)
    assert position_regulator(ref_at(), PoseState(), (0.5, -0.25), g) == (2.0, -1.0)


def test_regulator_step_on_double_integrator_is_critically_damped():
    g = RegulatorGains(Kp=25.0, Kd=10.0)
    dt = 1e-4
    x, v = 0.0, 0.0
    xs = []
    for _ in range(int(3.0 / dt)):
        a, _ = position_regulator(ref_at(x=1.0), PoseState(x=x, V=v), (0.0, 0.0), g)
        v += a * dt
        x += v * dt
        xs.append(x)
    xs = np.array(xs)
    t = dt * np.arange(1, len(xs) + 1)
    # poles at -5, -5
    np.testing.assert_allclose(xs, 1 - (1 + 5 * t) * np.exp(-5 * t), atol=2e-3)
    assert xs.max() - 1.0 < 0.01


def test_accel_to_body_examples():
    assert accel_to_body((1.0, 0.0), PoseState(V=1.0)) == (1.0, 0.0)
    assert accel_to_body((0.0, 1.0), PoseState(V=1.0)) == (0.0, 1.0)
    # heading hold below the speed floor
    assert accel_to_body((0.0, 1.0), PoseState(V=0.0)) == (0.0, 0.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(-10, 10), st.floats(-5, 5), st.floats(-5, 5))
def test_accel_to_body_round_trip(psi, ax, ay):
    along, lat = accel_to_body((ax, ay), PoseState(psi=psi, V=1.0))
    c, s = math.cos(psi), math.sin(psi)
    assert along * c - lat * s == pytest.approx(ax, abs=1e-12)
    assert along * s + lat * c == pytest.approx(ay, abs=1e-12)


def test_saturate_examples():
    assert saturate(WheelTorques(0.2, -0.3), 0.5) == (WheelTorques(0.2, -0.3), False)
    assert saturate(WheelTorques(10.0, -10.0), 1.0) == (WheelTorques(1.0, -1.0), True)
    with pytest.raises(ValueError):
        saturate(WheelTorques(0.0, 0.0), 0.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(-100, 100), st.floats(-100, 100), st.floats(0.01, 10))
def test_saturate_bounds_and_signs(M1, M2, Mmax):
    (a, b), _ = saturate(WheelTorques(M1, M2), Mmax)
    assert abs(a) <= Mmax and abs(b) <= Mmax
    assert a * M1 >= 0 and b * M2 >= 0


@pytest.mark.parametrize("kwargs", [dict(Kp=-1.0), dict(Mmax=0.0), dict(Ki=-0.1)])
def test_invalid_gains(kwargs):
    with pytest.raises(ValueError):
        RegulatorGains(**kwargs)


@pytest.mark.parametrize("kwargs", [dict(mode="half"), dict(dt=0.0), dict(drive_model="hydraulic")])
def test_invalid_loop_config(kwargs):
    with pytest.raises(ValueError):
        LoopConfig(**kwargs)


def test_zero_gains_reproduce_open_loop_bit_for_bit():
    cfg = LoopConfig(gains=RegulatorGains.zero(), duration=5.0, mismatch={"m1": 1.2})
    a = run_open_loop(cfg, LEMNISCATE)
    b = run_closed_loop(cfg, LEMNISCATE)
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.torques, b.torques)


def test_mode_dispatch():
    cfg = LoopConfig(mode="open", duration=1.0)
    assert np.array_equal(run(cfg, CIRCLE).states, run_open_loop(cfg, CIRCLE).states)


def test_matched_closed_loop_stays_on_reference():
    cfg = LoopConfig(duration=20.0)
    op = run_open_loop(cfg, LEMNISCATE)
    cl = run_closed_loop(cfg, LEMNISCATE)
    assert op.error.max() < 1e-4
    assert cl.error.max() <= op.error.max() + 1e-9
    assert cl.saturation_events == 0


def test_closed_loop_recovers_from_offset_under_mismatch():
    cfg = LoopConfig(duration=12.0, mismatch={"m1": 1.2}, initial_offset=(0.05, -0.03, 0.1))
    tel = run_closed_loop(cfg, LEMNISCATE)
    assert tel.error[0] == pytest.approx(math.hypot(0.05, 0.03))
    k = int(np.argmax(tel.error < 1e-3))
    assert k > 0
    assert tel.error[k:].max() < 1e-3


@pytest.mark.parametrize("scale", [0.5, 1.5])
@pytest.mark.parametrize("name", ["m1", "J1", "r"])
def test_closed_loop_finite_under_large_mismatch(name, scale):
    cfg = LoopConfig(duration=10.0, mismatch={name: scale})
    tel = run_closed_loop(cfg, LEMNISCATE)
    assert np.all(np.isfinite(tel.states))
    assert tel.error[-1] < 0.05


def test_torques_respect_limit_and_integral_freezes():
    g = RegulatorGains(Ki=20.0, Mmax=0.05)
    cfg = LoopConfig(gains=g, duration=20.0, initial_offset=(0.2, 0.0, 0.0))
    tel = run_closed_loop(cfg, CIRCLE)
    assert np.all(np.isfinite(tel.states))
    assert np.abs(tel.torques).max() <= 0.05
    assert tel.saturation_events > 0
    clamped = np.any(np.abs(tel.torques) == 0.05, axis=1)
    frozen = np.all(tel.integral[1:] == tel.integral[:-1], axis=1)
    assert np.all(frozen[clamped])
    assert np.abs(tel.integral).max() < 0.01


def test_persistent_saturation_keeps_integral_at_zero():
    g = RegulatorGains(Ki=20.0, Mmax=0.05)
    cfg = LoopConfig(gains=g, duration=3.0, initial_offset=(0.5, 0.0, 0.0))
    tel = run_closed_loop(cfg, CIRCLE)
    assert tel.saturation_events == tel.n_steps
    assert np.all(tel.integral == 0.0)


def test_srm_drive_close_to_ideal():
    base = dict(duration=5.0, mismatch={"m1": 1.2})
    ideal = run_closed_loop(LoopConfig(**base), LEMNISCATE)
    srm = run_closed_loop(LoopConfig(drive_model="srm", **base), LEMNISCATE)
    assert set(srm.motor) == {"M1_ref", "M2_ref", "currents1", "currents2"}
    assert np.all(srm.motor["currents1"] >= 0.0)
    dev = np.abs(ideal.xy - srm.xy).max()
    assert dev < 0.01


def test_planner_singularity_propagates():
    cfg = LoopConfig(mode="open", duration=1.0)
    stop = TrajectorySpec(kind="line", speed=1e-4)
    with pytest.raises(SingularSpeed):
        run(cfg, stop)


def test_divergence_propagates():
    # yaw rate 100 rad/s with a 50 ms step is far outside RK4 stability
    cfg = LoopConfig(mode="open", duration=2.0, dt=0.05, gains=RegulatorGains(Mmax=1e6))
    spin = TrajectorySpec(kind="circle", radius=0.01, speed=1.0, duration=2.0)
    with pytest.raises(NumericalDivergence) as ei:
        run(cfg, spin)
    assert ei.value.step > 0


def test_matched_closed_loop_torques_equal_schedule_on_circle():
    cfg = LoopConfig(duration=20.0)
    op = run_open_loop(replace(cfg, mode="open"), CIRCLE)
    cl = run_closed_loop(cfg, CIRCLE)
    assert np.abs(op.torques - cl.torques).max() < 1e-9


def test_matched_feedback_residue_shrinks_with_step():
    # the held input is second order, so the plant leaves the path by O(dt^2)
    diffs = []
    for dt in (1e-3, 5e-4):
        cfg = LoopConfig(dt=dt, duration=10.0)
        op = run_open_loop(replace(cfg, mode="open"), LEMNISCATE)
        cl = run_closed_loop(cfg, LEMNISCATE)
        diffs.append(np.abs(op.torques - cl.torques).max())
    assert diffs[0] < 2e-8
    assert diffs[0] / diffs[1] == pytest.approx(4.0, abs=0.5)
