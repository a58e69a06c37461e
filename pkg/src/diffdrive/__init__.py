"""Dynamics, inverse dynamics and position control of a differential-drive robot."""

from .control import (
    LoopConfig,
    RegulatorGains,
    accel_to_body,
    position_regulator,
    run,
    run_closed_loop,
    run_open_loop,
    saturate,
)
from .dynamics import (
    NumericalDivergence,
    PoseState,
    Telemetry,
    WheelTorques,
    power_balance_residual,
    rk4_step,
    simulate,
    state_derivative,
)
from .inverse import BodyRates, SingularSpeed, body_to_torques, flat_to_body, initial_state, plan_open_loop
from .motor import MotorParams, MotorState, SrmDrive, phase_inductance, phase_torque, total_torque
from .params import LumpedParams, ParameterError, RobotParams, kinetic_energy, lump_params, wheel_speeds
from .trajectories import TrajectorySample, TrajectorySpec, fd_derivatives, sample

__version__ = "0.1.0"
