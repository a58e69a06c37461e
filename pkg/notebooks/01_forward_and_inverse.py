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
# # Forward model and the inverse round trip
#
# The platform state is `(x, y, psi, V, omega)`. Wheel and rotor inertias are
# folded into a lumped mass and yaw inertia, and two wheel torques drive it.

# %%
import numpy as np

from diffdrive import RobotParams, lump_params
from diffdrive.dynamics import PoseState, WheelTorques, simulate, power_balance_residual
from diffdrive.inverse import initial_state, plan_open_loop
from diffdrive.trajectories import TrajectorySpec, sample

robot = RobotParams()
lp = lump_params(robot)
lp

# %% [markdown]
# Equal torques from rest give straight-line motion. Heading stays exactly zero.

# %%
tel = simulate(lp, PoseState(), lambda t: WheelTorques(0.1, 0.1), dt=1e-3, T=5.0)
print("final pose", tel.pose(-1))
print("max |psi|", np.abs(tel.states[:, 2]).max())

# %% [markdown]
# ## Inverse dynamics
#
# A path with three derivatives fixes heading, speed and yaw rate. Inverting
# the last two rows of the model then gives the torques. On a uniform circle
# those torques are constant.

# %%
circle = TrajectorySpec(kind="circle", radius=1.0, speed=0.5)
sched = plan_open_loop(lambda t: sample(circle, t), lp, 0.0, 20.0, 1e-3)
print("torque range M1", sched.torques[:, 0].min(), sched.torques[:, 0].max())
print("torque range M2", sched.torques[:, 1].min(), sched.torques[:, 1].max())

# %% [markdown]
# Feeding the schedule to the forward model from the exact initial state
# reproduces the path. Only the integration error remains.

# %%
lem = TrajectorySpec(kind="lemniscate", scale=1.5, speed=0.3, ramp_time=2.0, ramp_from=0.5)
for spec in (circle, lem):
    sched = plan_open_loop(lambda t: sample(spec, t), lp, 0.0, 20.0, 1e-3)
    tel = simulate(lp, initial_state(sample(spec, 0.0)), sched, 1e-3, 20.0)
    ref = np.array([[(s := sample(spec, t)).x, s.y] for t in tel.t])
    err = np.hypot(*(tel.xy - ref).T)
    print(f"{spec.kind:12s} max error {err.max():.2e} m, power balance {power_balance_residual(lp, tel).max():.1e}")

# %% [markdown]
# Halving the step shrinks the error by about 16, as expected for RK4.

# %%
for dt in (4e-3, 2e-3, 1e-3):
    sched = plan_open_loop(lambda t: sample(lem, t), lp, 0.0, 20.0, dt)
    tel = simulate(lp, initial_state(sample(lem, 0.0)), sched, dt, 20.0)
    ref = np.array([[(s := sample(lem, t)).x, s.y] for t in tel.t])
    print(dt, np.hypot(*(tel.xy - ref).T).max())
