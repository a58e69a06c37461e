import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffdrive.motor import (
    MotorParams,
    MotorState,
    SrmDrive,
    current_derivative,
    phase_inductance,
    phase_torque,
    simulate_torque_loop,
    sliding_torque_loop,
    step_motor,
    total_torque,
)

MP = MotorParams()
angles = st.floats(-10, 10, allow_nan=False)
currents = st.floats(-5, 5, allow_nan=False)


def theta_with_slope(mp, k, slope):
    """Rotor angle where phase k has the given positive inductance slope."""
    s = -slope / (mp.L1 * mp.Nr)
    return (math.asin(s) + 2 * math.pi * (k - 1) / mp.n_ph) / mp.Nr


@settings(max_examples=50, deadline=None)
@given(angles, st.integers(1, 3))
def test_inductance_slope_matches_finite_difference(theta, k):
    h = 1e-6
    lo, _ = phase_inductance(MP, k, theta - h)
    hi, _ = phase_inductance(MP, k, theta + h)
    L, dL = phase_inductance(MP, k, theta)
    assert MP.L0 - MP.L1 <= L <= MP.L0 + MP.L1
    assert dL == pytest.approx((hi - lo) / (2 * h), abs=1e-8)


def test_phase_index_checked():
    with pytest.raises(IndexError):
        phase_inductance(MP, 0, 0.0)
    with pytest.raises(IndexError):
        phase_inductance(MP, 4, 0.0)


def test_phase_torque_examples():
    mp = MotorParams(L0=0.05, L1=0.025, Nr=8)
    theta = theta_with_slope(mp, 1, 0.1)
    assert phase_inductance(mp, 1, theta)[1] == pytest.approx(0.1)
    assert phase_torque(mp, 1, theta, 0.0) == 0.0
    assert phase_torque(mp, 1, theta, 1.0) == pytest.approx(0.1)
    assert phase_torque(mp, 1, theta, 2.0) == pytest.approx(0.4)
    half = replace(mp, torque_half_factor=True)
    assert phase_torque(half, 1, theta, 2.0) == pytest.approx(0.2)


@settings(max_examples=50, deadline=None)
@given(angles, st.tuples(currents, currents, currents))
def test_total_torque_is_sum_and_even(theta, i):
    ms = MotorState(currents=i, theta=theta)
    flipped = MotorState(currents=tuple(-c for c in i), theta=theta)
    parts = [phase_torque(MP, k, theta, c) for k, c in enumerate(i, start=1)]
    assert total_torque(MP, ms) == pytest.approx(sum(parts), abs=1e-15)
    assert total_torque(MP, flipped) == total_torque(MP, ms)


def test_total_torque_single_phase():
    ms = MotorState(currents=(0.0, 1.5, 0.0), theta=0.3)
    assert total_torque(MP, ms) == phase_torque(MP, 2, 0.3, 1.5)
    assert total_torque(MP, MotorState.at_rest(MP, 0.3)) == 0.0


def test_current_derivative_examples():
    # steady electrical equilibrium
    ms = MotorState(currents=(0.5, 0.0, 0.0), theta=0.2)
    assert current_derivative(MP, ms, 1, 0.5 * MP.Rk) == pytest.approx(0.0, abs=1e-15)
    L, _ = phase_inductance(MP, 2, 0.2)
    assert current_derivative(MP, ms, 2, 3.0) == pytest.approx(3.0 / L)


def test_current_derivative_hand_value():
    # L = 0.02, dL/dtheta = 0.01 at this angle with these parameters
    mp = MotorParams(L0=0.02, L1=0.0025, Nr=4)
    theta = math.asin(-0.01 / (mp.L1 * mp.Nr)) / mp.Nr
    L, dL = phase_inductance(mp, 1, theta)
    assert dL == pytest.approx(0.01)
    ms = MotorState(currents=(0.5, 0.0, 0.0), theta=theta, omega_m=10.0)
    expect = (1 - 0.5 - 0.05) / L
    assert current_derivative(mp, ms, 1, 1.0) == pytest.approx(expect)
    assert L == pytest.approx(0.02, rel=1e-12)
    assert expect == pytest.approx(22.5)


@settings(max_examples=50, deadline=None)
@given(angles, currents, st.floats(-100, 100), st.floats(-50, 50), st.floats(-50, 50))
def test_current_derivative_linear_in_voltage(theta, i, w, U1, U2):
    ms = MotorState(currents=(i, 0.0, 0.0), theta=theta, omega_m=w)
    f = lambda U: current_derivative(MP, ms, 1, U)
    assert f(U1) - f(U2) == pytest.approx((U1 - U2) / phase_inductance(MP, 1, theta)[0], rel=1e-9, abs=1e-9)


def test_loop_idle_at_zero_reference():
    cmd = sliding_torque_loop(MP, MotorState.at_rest(MP), 0.0)
    assert cmd.voltages == (0.0, 0.0, 0.0)
    assert cmd.active == 0


def test_loop_energises_productive_phase():
    ms = MotorState.at_rest(MP, theta=0.1)
    cmd = sliding_torque_loop(MP, ms, 0.05)
    assert cmd.relay == 1
    k = cmd.active
    assert phase_inductance(MP, k, 0.1)[1] == max(phase_inductance(MP, j, 0.1)[1] for j in (1, 2, 3))
    assert cmd.voltages[k - 1] == MP.Udc
    assert sum(v != 0 for v in cmd.voltages) == 1


def test_loop_demagnetises_idle_phases_and_holds_inside_band():
    ms = MotorState(currents=(0.0, 0.0, 0.0), theta=0.1, relay=-1)
    k = sliding_torque_loop(MP, ms, 0.05).active
    cur = [0.2, 0.2, 0.2]
    cur[k - 1] = 0.0
    ms = replace(ms, currents=tuple(cur))
    err = 0.05 - total_torque(MP, ms)
    cmd = sliding_torque_loop(MP, ms, 0.05)
    for j, v in enumerate(cmd.voltages, start=1):
        if j != k:
            assert v == -MP.Udc
    if abs(err) <= MP.h:
        assert cmd.relay == -1


def test_negative_reference_selects_negative_slope():
    cmd = sliding_torque_loop(MP, MotorState.at_rest(MP, theta=0.1), -0.05)
    assert phase_inductance(MP, cmd.active, 0.1)[1] < 0
    assert cmd.voltages[cmd.active - 1] == MP.Udc


def test_currents_never_negative():
    ms = MotorState(currents=(1e-3, 0.0, 0.0), theta=0.0, relay=-1)
    for _ in range(50):
        ms = step_motor(MP, ms, 0.0, 1e-4)
        assert min(ms.currents) >= 0.0


@pytest.mark.parametrize("omega_m", [0.0, 20.0])
def test_compiled_kernel_matches_reference(omega_m):
    dt_e = 1e-5
    ms = MotorState.at_rest(MP, theta=0.05, omega_m=omega_m)
    drive = SrmDrive(replace(MP, substeps=1), theta=0.05)
    for j in range(3000):
        ref = 0.05 if j < 2000 else -0.03
        drive.advance(ref, omega_m, dt_e)
        ms = step_motor(MP, ms, ref, dt_e)
    np.testing.assert_allclose(drive.currents, ms.currents, atol=1e-12)
    assert drive.theta == pytest.approx(ms.theta, abs=1e-12)
    assert drive.relay == ms.relay


def test_fixed_rotor_stays_in_discrete_band():
    dt_e = 1e-5
    t, M = simulate_torque_loop(MP, 0.05, 0.0, dt_e, 0.2, theta0=0.1)
    err = np.abs(M - 0.05)
    first = int(np.argmax(err <= MP.h))
    assert err[first] <= MP.h
    slope = np.abs(np.diff(M)).max()
    assert err[first:].max() <= MP.h + slope
    assert slope < 0.01 * MP.h * 100


@pytest.mark.parametrize("omega_m", [0.0, 5.0, 20.0])
def test_window_averaged_torque_tracks_reference(omega_m):
    dt_e = 1e-5
    t, M = simulate_torque_loop(MP, 0.05, omega_m, dt_e, 0.5, theta0=0.1)
    win = int(round(5 * MP.time_constant / dt_e))
    avg = np.convolve(M, np.ones(win) / win, mode="valid")
    settled = avg[int(round(0.05 / dt_e)):]
    assert np.abs(settled - 0.05).max() <= MP.h


def test_drive_advance_returns_mean_torque():
    drive = SrmDrive(MP, theta=0.1)
    out = [drive.advance(0.05, 0.0, 1e-3) for _ in range(200)]
    assert abs(np.mean(out[50:]) - 0.05) <= MP.h
    assert drive.state.currents == tuple(drive.currents)


@pytest.mark.parametrize(
    "kwargs", [dict(n_ph=0), dict(Rk=0.0), dict(L1=0.03), dict(Udc=-1.0), dict(h=0.0), dict(substeps=0)]
)
def test_invalid_motor_params(kwargs):
    with pytest.raises(ValueError):
        MotorParams(**kwargs)
