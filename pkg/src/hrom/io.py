"""CSV and JSON export of trajectories, plot data and solver reports.

Floats are written with ``repr`` so every value parses back to the identical
double, which makes exported files both lossless and byte-deterministic.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from . import __version__
from .params import LEGS, RobotParams
from .sim import Trajectory, foot_states
from .state import NX, STATE_NAMES

GRF_COLUMNS = [f"{leg}_grf_{a}" for leg in LEGS for a in "xyz"]
THRUST_COLUMNS = ["f1", "f2", "f3", "f4"]
WRENCH_COLUMNS = ["fx", "fy", "fz", "mx", "my", "mz"]
JOINT_INPUT_COLUMNS = [f"{leg}_{j}_ddot" for leg in LEGS for j in ("phi", "gamma", "l")]
CONTACT_COLUMNS = [f"{leg}_contact" for leg in LEGS]
TRAJECTORY_COLUMNS = (["t"] + STATE_NAMES + GRF_COLUMNS + THRUST_COLUMNS + WRENCH_COLUMNS
                      + JOINT_INPUT_COLUMNS + CONTACT_COLUMNS)


def _fmt(v):
    return repr(float(v))


def _write_table(path, header, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _write_json(path, payload):
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def trajectory_table(traj: Trajectory):
    """(N, 81) array in the column order of ``TRAJECTORY_COLUMNS``."""
    n = len(traj.t)
    return np.column_stack([
        traj.t, traj.states, traj.grf.reshape(n, 12), traj.thrust, traj.controls[:, :6],
        traj.controls[:, 6:], traj.contact.astype(float),
    ])


def write_trajectory_csv(path, traj: Trajectory):
    return _write_table(path, TRAJECTORY_COLUMNS, trajectory_table(traj))


def read_trajectory_csv(path) -> Trajectory:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader], dtype=float).reshape(-1, len(header))
    if header != TRAJECTORY_COLUMNS:
        raise ValueError(f"{path}: unexpected trajectory columns")
    col = {name: i for i, name in enumerate(header)}

    def block(names):
        return data[:, [col[c] for c in names]]

    n = data.shape[0]
    controls = np.hstack([block(WRENCH_COLUMNS), block(JOINT_INPUT_COLUMNS)])
    return Trajectory(
        t=data[:, 0].copy(),
        states=block(STATE_NAMES),
        controls=controls,
        grf=block(GRF_COLUMNS).reshape(n, 4, 3),
        contact=block(CONTACT_COLUMNS) > 0.5,
        thrust=block(THRUST_COLUMNS),
    )


def write_plot_data(out_dir, traj: Trajectory, robot: RobotParams):
    """Per-figure tables: body states, joints, feet, GRF and thruster forces."""
    out = Path(out_dir)
    s, t = traj.states, traj.t[:, None]
    body = [0, 1, 2, 3, 4, 5, 18, 19, 20, 21, 22, 23]
    files = [
        _write_table(out / "body_states.csv", ["t"] + [STATE_NAMES[i] for i in body], np.hstack([t, s[:, body]])),
        _write_table(out / "joint_traj.csv", ["t"] + STATE_NAMES[6:18] + STATE_NAMES[24:NX],
                     np.hstack([t, s[:, 6:18], s[:, 24:NX]])),
    ]
    P, V = foot_states(traj, robot)
    n = len(traj.t)
    foot_cols = ([f"{leg}_foot_{a}" for leg in LEGS for a in "xyz"]
                 + [f"{leg}_foot_v{a}" for leg in LEGS for a in "xyz"] + CONTACT_COLUMNS)
    files.append(_write_table(out / "foot_states.csv", ["t"] + foot_cols,
                              np.hstack([t, P.reshape(n, 12), V.reshape(n, 12), traj.contact.astype(float)])))
    files.append(_write_table(out / "grf.csv", ["t"] + GRF_COLUMNS, np.hstack([t, traj.grf.reshape(n, 12)])))
    files.append(_write_table(out / "thruster_forces.csv", ["t"] + THRUST_COLUMNS + ["total"],
                              np.hstack([t, traj.thrust, traj.thrust.sum(axis=1, keepdims=True)])))
    return files


def write_metadata(path, config_echo: dict, extra: dict | None = None):
    payload = {"version": __version__, "config": config_echo}
    payload.update(extra or {})
    return _write_json(path, payload)


def write_solution_csv(path, decision):
    """Generic collocation solution table: t, x0.., u0.. (for models other than the HROM)."""
    header = ["t"] + [f"x{i}" for i in range(decision.nx)] + [f"u{i}" for i in range(decision.nu)]
    return _write_table(path, header, np.column_stack([decision.times, decision.states, decision.controls]))


def write_solver_report(path, report, extra: dict | None = None):
    payload = dict(report.as_dict())
    payload["version"] = __version__
    payload.update(extra or {})
    return _write_json(path, payload)
