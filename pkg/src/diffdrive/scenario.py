"""Scenario files: TOML text with units spelled out in the key names.

A scenario has the sections ``[robot]``, ``[trajectory]``, ``[loop]`` (with an
optional ``[loop.mismatch]`` table of plant multipliers), ``[output]`` and an
optional ``[motor]``.  Missing keys take the library defaults; unknown keys are
errors.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import tomli
import tomli_w

from .control import LoopConfig, RegulatorGains
from .motor import MotorParams
from .params import ParameterError, RobotParams
from .trajectories import TrajectorySpec

ROBOT_KEYS = {
    "platform_mass_kg": "m1",
    "wheel_mass_kg": "mk",
    "platform_yaw_inertia_kgm2": "J1",
    "wheel_spin_inertia_kgm2": "Jky",
    "wheel_yaw_inertia_kgm2": "Jkz",
    "rotor_inertia_kgm2": "Jry",
    "gear_ratio": "n",
    "wheel_radius_m": "r",
    "half_track_m": "a",
    "wheel_offset_m": "l",
}

MOTOR_KEYS = {
    "phases": "n_ph",
    "phase_resistance_ohm": "Rk",
    "inductance_mean_H": "L0",
    "inductance_amplitude_H": "L1",
    "rotor_poles": "Nr",
    "supply_voltage_V": "Udc",
    "hysteresis_Nm": "h",
    "torque_half_factor": "torque_half_factor",
    "demag_threshold_A": "demag_threshold",
    "substeps": "substeps",
}

TRAJECTORY_KEYS = {
    "kind": "kind",
    "speed_mps": "speed",
    "duration_s": "duration",
    "t0_s": "t0",
    "ramp_time_s": "ramp_time",
    "ramp_from": "ramp_from",
    "start_m": "start",
    "heading_rad": "heading",
    "center_m": "center",
    "radius_m": "radius",
    "phase_rad": "phase",
    "direction": "direction",
    "scale_m": "scale",
    "rotation_rad": "rotation",
    "points_m": "points",
    "blend_m": "blend",
}

GAIN_KEYS = {
    "Kp_per_s2": "Kp",
    "Kd_per_s": "Kd",
    "Ki_per_s3": "Ki",
    "Kw_per_s": "Kw",
    "torque_limit_Nm": "Mmax",
}

LOOP_KEYS = {
    "mode": "mode",
    "dt_s": "dt",
    "duration_s": "duration",
    "drive_model": "drive_model",
    "v_min_mps": "v_min",
}
OFFSET_KEYS = ("offset_x_m", "offset_y_m", "offset_psi_rad")

OUTPUT_KEYS = ("csv", "svg", "decimation")
REQUIRED_SECTIONS = ("robot", "trajectory", "loop", "output")
SECTIONS = REQUIRED_SECTIONS + ("motor",)


class ScenarioError(ValueError):
    """Invalid scenario text; carries the 1-based line and column when known."""

    def __init__(self, message: str, line: Optional[int] = None, col: Optional[int] = None):
        where = f" (line {line}, column {col})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.col = col


@dataclass(frozen=True)
class OutputConfig:
    csv: str = "telemetry.csv"
    svg: str = "path.svg"
    decimation: int = 1

    def __post_init__(self):
        if int(self.decimation) != self.decimation or self.decimation < 1:
            raise ValueError(f"decimation must be a positive integer (got {self.decimation!r})")


@dataclass(frozen=True)
class ScenarioFile:
    robot: RobotParams
    trajectory: TrajectorySpec
    loop: LoopConfig
    output: OutputConfig = field(default_factory=OutputConfig)
    motor: Optional[MotorParams] = None


def _locate(text: str, section: str, key: Optional[str] = None) -> tuple[Optional[int], Optional[int]]:
    lines = text.splitlines()
    header = re.compile(r"^\s*\[\s*" + re.escape(section) + r"\s*\]\s*(#.*)?$")
    any_header = re.compile(r"^\s*\[")
    start = None
    for i, ln in enumerate(lines):
        if header.match(ln):
            start = i
            break
    if start is None:
        return None, None
    if key is None:
        return start + 1, lines[start].index("[") + 1
    key_re = re.compile(r"^(\s*)" + re.escape(key) + r"\s*=")
    for i in range(start + 1, len(lines)):
        if any_header.match(lines[i]):
            break
        m = key_re.match(lines[i])
        if m:
            return i + 1, len(m.group(1)) + 1
    return start + 1, 1


def _tupleize(v):
    if isinstance(v, list):
        return tuple(_tupleize(x) for x in v)
    return v


def _float_fields(cls) -> set:
    return {f.name for f in fields(cls) if f.type in ("float", float)}


def _section_kwargs(text, table, section, keymap, cls):
    kwargs = {}
    floats = _float_fields(cls)
    for key, value in table.items():
        if key not in keymap:
            raise ScenarioError(f"[{section}] unknown key {key!r}", *_locate(text, section, key))
        attr = keymap[key]
        if attr in floats and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        kwargs[attr] = _tupleize(value)
    return kwargs


def _build(text, section, keymap, cls, kwargs):
    try:
        return cls(**kwargs)
    except ParameterError as exc:
        key = next((k for k, a in keymap.items() if a == exc.field), exc.field)
        raise ScenarioError(f"[{section}] {key}: {exc}", *_locate(text, section, key)) from exc
    except (ValueError, TypeError) as exc:
        key = next((k for k, a in keymap.items() if re.search(rf"\b{a}\b", str(exc))), None)
        raise ScenarioError(f"[{section}] {exc}", *_locate(text, section, key)) from exc


def parse_scenario(text: str) -> ScenarioFile:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+), column (\d+)", str(exc))
        line, col = (int(m.group(1)), int(m.group(2))) if m else (None, None)
        raise ScenarioError(f"syntax error: {exc}", line, col) from exc

    for name in data:
        if name not in SECTIONS:
            raise ScenarioError(f"unknown section [{name}]", *_locate(text, name))
    for name in REQUIRED_SECTIONS:
        if name not in data:
            raise ScenarioError(f"missing section [{name}]")
        if not isinstance(data[name], dict):
            raise ScenarioError(f"[{name}] must be a table")

    robot = _build(
        text, "robot", ROBOT_KEYS, RobotParams,
        _section_kwargs(text, data["robot"], "robot", ROBOT_KEYS, RobotParams),
    )

    motor = None
    if "motor" in data:
        motor = _build(
            text, "motor", MOTOR_KEYS, MotorParams,
            _section_kwargs(text, data["motor"], "motor", MOTOR_KEYS, MotorParams),
        )

    traj_kwargs = _section_kwargs(text, data["trajectory"], "trajectory", TRAJECTORY_KEYS, TrajectorySpec)
    trajectory = _build(text, "trajectory", TRAJECTORY_KEYS, TrajectorySpec, traj_kwargs)

    loop_table = dict(data["loop"])
    mismatch_table = loop_table.pop("mismatch", {})
    gain_table = {k: loop_table.pop(k) for k in list(loop_table) if k in GAIN_KEYS}
    offset = [float(loop_table.pop(k, 0.0)) for k in OFFSET_KEYS]
    gains = _build(
        text, "loop", GAIN_KEYS, RegulatorGains,
        _section_kwargs(text, gain_table, "loop", GAIN_KEYS, RegulatorGains),
    )
    loop_kwargs = _section_kwargs(text, loop_table, "loop", LOOP_KEYS, LoopConfig)

    mismatch = {}
    for key, k in mismatch_table.items():
        if key not in ROBOT_KEYS:
            raise ScenarioError(f"[loop.mismatch] unknown key {key!r}", *_locate(text, "loop.mismatch", key))
        if not (isinstance(k, (int, float)) and k > 0 and math.isfinite(k)):
            raise ScenarioError(
                f"[loop.mismatch] {key}: multiplier must be positive", *_locate(text, "loop.mismatch", key)
            )
        mismatch[ROBOT_KEYS[key]] = float(k)
    loop_kwargs.update(
        robot=robot, gains=gains, mismatch=mismatch, motor=motor, initial_offset=tuple(offset)
    )
    loop = _build(text, "loop", LOOP_KEYS, LoopConfig, loop_kwargs)
    if mismatch:
        _check_plant(text, loop)
    if loop.drive_model == "srm" and motor is None:
        raise ScenarioError("drive_model = 'srm' requires a [motor] section", *_locate(text, "loop", "drive_model"))

    output = _build(
        text, "output", {k: k for k in OUTPUT_KEYS}, OutputConfig,
        _section_kwargs(text, data["output"], "output", {k: k for k in OUTPUT_KEYS}, OutputConfig),
    )
    return ScenarioFile(robot=robot, trajectory=trajectory, loop=loop, output=output, motor=motor)


def _check_plant(text, loop: LoopConfig):
    try:
        loop.plant_robot
    except ParameterError as exc:
        key = next((k for k, a in ROBOT_KEYS.items() if a == exc.field), exc.field)
        raise ScenarioError(f"[loop.mismatch] {key}: {exc}", *_locate(text, "loop.mismatch", key)) from exc


def _dump_section(obj, keymap) -> dict:
    out = {}
    for key, attr in keymap.items():
        value = getattr(obj, attr)
        if isinstance(value, tuple):
            value = [list(v) if isinstance(v, tuple) else v for v in value]
        out[key] = value
    return out


def emit_scenario(sf: ScenarioFile) -> str:
    """Serialise a scenario back to TOML; ``parse_scenario`` inverts it."""
    doc = {"robot": _dump_section(sf.robot, ROBOT_KEYS)}
    if sf.motor is not None:
        doc["motor"] = _dump_section(sf.motor, MOTOR_KEYS)
    doc["trajectory"] = _dump_section(sf.trajectory, TRAJECTORY_KEYS)
    loop = _dump_section(sf.loop, LOOP_KEYS)
    loop.update(_dump_section(sf.loop.gains, GAIN_KEYS))
    loop.update(dict(zip(OFFSET_KEYS, sf.loop.initial_offset)))
    inverse = {a: k for k, a in ROBOT_KEYS.items()}
    loop["mismatch"] = {inverse[a]: v for a, v in sf.loop.mismatch.items()}
    doc["loop"] = loop
    doc["output"] = {k: getattr(sf.output, k) for k in OUTPUT_KEYS}
    return tomli_w.dumps(doc)


def load_scenario(path) -> ScenarioFile:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


def shipped_scenarios() -> dict[str, Path]:
    """Scenario files bundled with the package, keyed by stem."""
    root = resources.files("diffdrive") / "scenarios"
    return {Path(p.name).stem: Path(str(p)) for p in root.iterdir() if p.name.endswith(".scn")}


def resolve_scenario(name_or_path: str) -> Path:
    p = Path(name_or_path)
    if p.exists():
        return p
    shipped = shipped_scenarios()
    stem = p.name[:-4] if p.name.endswith(".scn") else p.name
    if stem in shipped:
        return shipped[stem]
    raise FileNotFoundError(f"no scenario file or shipped scenario named {name_or_path!r}")


def with_dt(sf: ScenarioFile, dt: float) -> ScenarioFile:
    return replace(sf, loop=replace(sf.loop, dt=dt))
