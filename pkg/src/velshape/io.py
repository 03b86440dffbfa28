"""CSV and text writers for boundaries, simulation runs and profiles.

Numbers are written with ``repr`` of Python floats so that identical runs
produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


def _num(v):
    return repr(float(v))


def _write_rows(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_boundary_csv(path, curve):
    rows = ([_num(a), _num(b), tag] for a, b, tag in zip(curve.x1, curve.x2, curve.tags))
    return _write_rows(path, ["x1", "x2", "provenance"], rows)


def read_boundary_csv(path):
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return (np.array([float(r["x1"]) for r in rows]), np.array([float(r["x2"]) for r in rows]),
            [r["provenance"] for r in rows])


def write_region_csv(path, xs, lower, upper, raw_upper):
    rows = ([_num(a), _num(b), _num(c), _num(d), int(c < d)]
            for a, b, c, d in zip(xs, lower, upper, raw_upper))
    return _write_rows(path, ["x1", "x2_lower", "x2_upper", "c_upper", "clipped"], rows)


def _trajectory_rows(t, x1, x2, u, torques):
    for k in range(len(t)):
        yield [_num(t[k]), _num(x1[k]), _num(x2[k]), _num(u[k])] + [_num(v) for v in torques[k]]


def write_trajectory_csv(path, t, x1, x2, u, torques):
    n = torques.shape[1] if torques.ndim == 2 else 0
    header = ["t", "x1", "x2", "u"] + [f"tau_{i + 1}" for i in range(n)]
    return _write_rows(path, header, _trajectory_rows(t, x1, x2, u, torques))


def write_simrun_csv(path, run):
    return write_trajectory_csv(path, run.t, run.x1, run.x2, run.u, run.torques)


def read_trajectory_csv(path):
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader])
    return header, data


def profile_table(profile, system):
    """Time stamps, inputs and torques along a time-optimal profile.

    Inputs are the constant accelerations ``(x2b**2 - x2a**2) / (2 dx1)`` of
    the polyline segments; the last point repeats the last input.
    """
    x1 = profile.trajectory.x1
    x2 = profile.trajectory.x2
    dx = np.diff(x1)
    seg_t = 2.0 * dx / (x2[:-1] + x2[1:])
    t = np.concatenate([[0.0], np.cumsum(seg_t)])
    u = (x2[1:] ** 2 - x2[:-1] ** 2) / (2.0 * dx)
    u = np.concatenate([u, u[-1:]])
    dyn = system.dynamics
    if hasattr(dyn, "torques"):
        torques = np.array([dyn.torques(a, b, c) for a, b, c in zip(x1, x2, u)])
    else:
        torques = np.zeros((len(x1), 0))
    return t, x1, x2, u, torques


def write_profile_csv(path, profile, system):
    return write_trajectory_csv(path, *profile_table(profile, system))


def write_switch_sidecar(path, profile):
    meta = {
        "switch_points": [float(v) for v in profile.switch_points],
        "total_time": float(profile.total_time),
        "arcs": [{"x1_from": float(a), "x1_to": float(b), "kind": k} for a, b, k in profile.arcs],
        "flags": list(profile.flags),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def write_summary(path, entries):
    """Plain ``key: value`` lines in insertion order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for key, value in entries.items():
        if isinstance(value, (list, tuple)):
            value = "; ".join(str(v) for v in value) if value else "none"
        lines.append(f"{key}: {value}")
    path.write_text("\n".join(lines) + "\n")
    return path
