# ---
# jupyter:
#   jupytext:
#     text_representation:
#       extension: .py
#       format_name: percent
#       format_version: '1.3'
#       jupytext_version: 1.15.0
# ---

# %% [markdown]
# # Reluctance motor under a relay torque loop
#
# Each phase inductance varies sinusoidally with rotor angle. The loop
# energises the most productive phase and switches its voltage so that the
# torque error stays inside a hysteresis band `h`.

# %%
import numpy as np

from diffdrive.motor import MotorParams, simulate_torque_loop

mp = MotorParams()
print("electrical time constant", mp.time_constant, "s")

# %% [markdown]
# Torque at a fixed rotor and while turning. The instantaneous torque
# chatters around the reference. Its average over five time constants stays
# well inside the band.

# %%
dt_e = 1e-5
win = int(round(5 * mp.time_constant / dt_e))
for omega_m in (0.0, 10.0, 20.0):
    t, M = simulate_torque_loop(mp, 0.05, omega_m, dt_e, 0.5, theta0=0.1)
    avg = np.convolve(M, np.ones(win) / win, mode="valid")[5000:]
    settled = M[5000:]
    print(
        f"omega_m = {omega_m:4.1f}: instantaneous range [{settled.min():.4f}, {settled.max():.4f}], "
        f"averaged error {np.abs(avg - 0.05).max():.1e}"
    )

# %% [markdown]
# ## Inside the platform loop
#
# Swapping the ideal torque source for two motors barely moves the path. The
# change grows with the band width.

# %%
from dataclasses import replace

from diffdrive.control import LoopConfig, run_closed_loop
from diffdrive.trajectories import TrajectorySpec

lem = TrajectorySpec(kind="lemniscate", scale=1.5, speed=0.3, ramp_time=2.0, ramp_from=0.5)
base = LoopConfig(duration=10.0, mismatch={"m1": 1.2})
ideal = run_closed_loop(base, lem)
for h in (0.005, 0.01, 0.02):
    srm = run_closed_loop(replace(base, drive_model="srm", motor=MotorParams(h=h)), lem)
    print(f"h = {h}: max path deviation {np.hypot(*(srm.xy - ideal.xy).T).max():.2e} m")
