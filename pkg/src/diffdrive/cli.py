"""Scenario runner.

Usage::

    diffdrive list-scenarios
    diffdrive validate circle
    diffdrive run circle lemniscate_closed --out-dir out/ --jobs 2

Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 numeric
divergence, 4 planner singularity.  ``DIFFDRIVE_OUT`` sets the output
directory when ``--out-dir`` is not given.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .control import run
from .dynamics import NumericalDivergence, Telemetry
from .inverse import SingularSpeed
from .output import emit_svg, read_csv, telemetry_csv
from .scenario import (
    ScenarioError,
    ScenarioFile,
    load_scenario,
    resolve_scenario,
    shipped_scenarios,
    with_dt,
)
from .trajectories import sample

log = logging.getLogger("diffdrive")

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_SINGULAR = 4


@dataclass
class RunResult:
    status: int
    message: str = ""
    csv_path: Optional[Path] = None
    svg_path: Optional[Path] = None
    telemetry: Optional[Telemetry] = None


def run_scenario(sf: ScenarioFile, out_dir=None) -> RunResult:
    """Simulate a scenario and write its CSV telemetry and SVG plot.

    Relative output paths are resolved against ``out_dir`` (default: the
    current directory).  Numerical failures are reported through the status
    code rather than raised.
    """
    out_dir = Path(out_dir) if out_dir is not None else Path.cwd()
    try:
        tel = run(sf.loop, sf.trajectory)
    except NumericalDivergence as exc:
        return RunResult(EXIT_DIVERGENCE, f"numeric divergence: {exc}")
    except SingularSpeed as exc:
        return RunResult(EXIT_SINGULAR, f"planner singularity: {exc}")

    csv_path = out_dir / sf.output.csv
    svg_path = out_dir / sf.output.svg
    try:
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        svg_path.parent.mkdir(parents=True, exist_ok=True)
        text = telemetry_csv(tel, with_reference=sf.loop.mode == "closed")
        csv_path.write_text(text, encoding="utf-8")
        svg_path.write_text(svg_from_csv(text, sf), encoding="utf-8")
    except OSError as exc:
        return RunResult(EXIT_IO, f"I/O failure: {exc}", telemetry=tel)
    return RunResult(EXIT_OK, "ok", csv_path, svg_path, tel)


def svg_from_csv(text: str, sf: ScenarioFile) -> str:
    cols = read_csv(text)
    step = sf.output.decimation
    path = np.column_stack([cols["x"], cols["y"]])[::step]
    ref = np.column_stack([cols["x_ref"], cols["y_ref"]])[::step]
    if not np.isfinite(ref).any():
        # open-loop CSVs carry no reference columns; resample the path spec
        spec = sf.trajectory
        ref = np.array([[(s := sample(spec, min(t, spec.t_end))).x, s.y] for t in cols["t"][::step]])
    return emit_svg(path, ref, title=Path(sf.output.csv).stem)


def _run_one(name: str, out_dir, dt_override) -> tuple[int, str]:
    try:
        sf = load_scenario(resolve_scenario(name))
        if dt_override is not None:
            sf = with_dt(sf, dt_override)
    except ScenarioError as exc:
        return EXIT_CONFIG, f"{name}: config error: {exc}"
    except OSError as exc:
        return EXIT_IO, f"{name}: {exc}"
    res = run_scenario(sf, out_dir)
    if res.status == EXIT_OK:
        return EXIT_OK, f"{name}: wrote {res.csv_path} and {res.svg_path}"
    return res.status, f"{name}: {res.message}"


def _out_dir(args) -> Optional[Path]:
    if args.out_dir:
        return Path(args.out_dir)
    env = os.environ.get("DIFFDRIVE_OUT")
    return Path(env) if env else None


def cmd_run(args) -> int:
    out_dir = _out_dir(args)
    names = args.scenarios
    if args.jobs > 1 and len(names) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, names, [out_dir] * len(names), [args.dt_override] * len(names)))
    else:
        results = [_run_one(n, out_dir, args.dt_override) for n in names]
    status = EXIT_OK
    for code, msg in results:
        (print if code == EXIT_OK else log.error)(msg)
        status = max(status, code)
    return status


def cmd_validate(args) -> int:
    status = EXIT_OK
    for name in args.scenarios:
        try:
            load_scenario(resolve_scenario(name))
            print(f"{name}: ok")
        except ScenarioError as exc:
            log.error("%s: %s", name, exc)
            status = max(status, EXIT_CONFIG)
        except OSError as exc:
            log.error("%s: %s", name, exc)
            status = max(status, EXIT_IO)
    return status


def cmd_list(args) -> int:
    for name, path in sorted(shipped_scenarios().items()):
        print(f"{name}\t{path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diffdrive", description="Differential-drive robot scenarios")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate scenarios and write CSV/SVG")
    p_run.add_argument("scenarios", nargs="+", help="scenario file or shipped scenario name")
    p_run.add_argument("--out-dir", help="directory for outputs (default: $DIFFDRIVE_OUT or cwd)")
    p_run.add_argument("--dt-override", type=float, help="replace the scenario step [s]")
    p_run.add_argument("--seed", type=int, help="reserved; all scenarios are deterministic")
    p_run.add_argument("--jobs", type=int, default=1, help="run independent scenarios in parallel")
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="parse and check scenarios without running them")
    p_val.add_argument("scenarios", nargs="+")
    p_val.set_defaults(func=cmd_validate)

    p_list = sub.add_parser("list-scenarios", help="list the shipped scenarios")
    p_list.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    if getattr(args, "dt_override", None) is not None and not args.dt_override > 0.0:
        log.error("--dt-override must be positive")
        return EXIT_CONFIG
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
