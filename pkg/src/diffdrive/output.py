"""Telemetry CSV and SVG path plots."""

from __future__ import annotations

import csv
import io
from typing import Optional
from xml.sax.saxutils import escape

import numpy as np

from .dynamics import Telemetry

CSV_HEADER = ("t", "x", "y", "psi", "V", "omega", "M1", "M2", "E", "x_ref", "y_ref", "err")


def _fmt(v) -> str:
    return repr(float(v))


def motor_columns(tel: Telemetry) -> list[str]:
    if not tel.motor:
        return []
    n_ph = tel.motor["currents1"].shape[1]
    cols = ["M1_ref", "M2_ref"]
    cols += [f"i1_{k}" for k in range(1, n_ph + 1)]
    cols += [f"i2_{k}" for k in range(1, n_ph + 1)]
    return cols


def telemetry_csv(tel: Telemetry, with_reference: bool = True) -> str:
    """Render telemetry as CSV text.

    One row per integration step, stamped with the time at the end of the
    step; ``M1``/``M2`` are the torques held over that step.  Reference and
    error cells are left empty when ``with_reference`` is false.  Motor
    columns follow when the run used the reluctance drive.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    extra = motor_columns(tel)
    w.writerow(CSV_HEADER + tuple(extra))
    has_ref = with_reference and tel.reference is not None
    for k in range(1, tel.n_steps + 1):
        s = tel.states[k]
        row = [_fmt(tel.t[k]), *map(_fmt, s), *map(_fmt, tel.torques[k - 1]), _fmt(tel.energy[k])]
        if has_ref:
            row += [_fmt(tel.reference[k, 0]), _fmt(tel.reference[k, 1]), _fmt(tel.error[k])]
        else:
            row += ["", "", ""]
        if extra:
            m = tel.motor
            row += [_fmt(m["M1_ref"][k - 1]), _fmt(m["M2_ref"][k - 1])]
            row += [_fmt(v) for v in m["currents1"][k - 1]]
            row += [_fmt(v) for v in m["currents2"][k - 1]]
        w.writerow(row)
    return buf.getvalue()


def read_csv(text: str) -> dict[str, np.ndarray]:
    """Parse telemetry CSV into column arrays; empty cells become NaN."""
    rows = list(csv.reader(io.StringIO(text)))
    header = rows[0]
    if tuple(header[: len(CSV_HEADER)]) != CSV_HEADER:
        raise ValueError(f"unexpected telemetry header {header!r}")
    body = np.array([[float(c) if c else np.nan for c in r] for r in rows[1:]], dtype=float)
    body = body.reshape(len(rows) - 1, len(header))
    return {name: body[:, j] for j, name in enumerate(header)}


def emit_svg(
    path: np.ndarray,
    reference: Optional[np.ndarray] = None,
    width: int = 640,
    height: int = 640,
    title: str = "",
) -> str:
    """Plot the driven path (and the reference, if any) with equal axis scales.

    ``path`` and ``reference`` are ``(N, 2)`` arrays of ``(x, y)`` in metres.
    Start and end of the driven path are marked with a circle and a square.
    """
    path = np.atleast_2d(np.asarray(path, dtype=float))
    if path.size == 0:
        raise ValueError("empty path")
    pts = [path]
    if reference is not None:
        reference = np.atleast_2d(np.asarray(reference, dtype=float))
        reference = reference[np.all(np.isfinite(reference), axis=1)]
        if len(reference):
            pts.append(reference)
        else:
            reference = None
    allp = np.vstack(pts)
    lo = allp.min(axis=0)
    hi = allp.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-9))
    margin = 40.0
    scale = min(width, height - 40) - 2 * margin
    scale /= span
    cx, cy = 0.5 * (lo + hi)

    def to_px(p):
        X = width / 2 + (p[:, 0] - cx) * scale
        Y = (height - 40) / 2 + 40 - (p[:, 1] - cy) * scale
        return np.column_stack([X, Y])

    def poly(p, style):
        q = to_px(p)
        coords = " ".join(f"{x:.3f},{y:.3f}" for x, y in q)
        return f'<polyline points="{coords}" fill="none" {style}/>'

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>')
    if reference is not None:
        out.append(poly(reference, 'stroke="#888888" stroke-width="2" stroke-dasharray="6,4"'))
    if len(path) > 1:
        out.append(poly(path, 'stroke="#1f77b4" stroke-width="1.5"'))
    start = to_px(path[:1])[0]
    end = to_px(path[-1:])[0]
    out.append(f'<circle cx="{start[0]:.3f}" cy="{start[1]:.3f}" r="5" fill="#2ca02c"/>')
    if len(path) > 1:
        out.append(f'<rect x="{end[0] - 4:.3f}" y="{end[1] - 4:.3f}" width="8" height="8" fill="#d62728"/>')
    # legend
    ly = height - 12
    out.append(f'<line x1="10" y1="{ly - 4}" x2="40" y2="{ly - 4}" stroke="#1f77b4" stroke-width="2"/>')
    out.append(f'<text x="45" y="{ly}" font-size="12">actual</text>')
    if reference is not None:
        out.append(
            f'<line x1="110" y1="{ly - 4}" x2="140" y2="{ly - 4}" stroke="#888888" '
            'stroke-width="2" stroke-dasharray="6,4"/>'
        )
        out.append(f'<text x="145" y="{ly}" font-size="12">reference</text>')
    out.append(f'<text x="{width - 10}" y="{ly}" font-size="12" text-anchor="end">span {span:.3g} m</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
