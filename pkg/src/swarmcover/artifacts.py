"""Run-directory files: trajectories.csv, metrics.json and field_final.csv."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import DPHI, DPX, DPY, DTHETA, PHI, PX, PY, THETA
from .errors import MalformedLog, MissingRun
from .sim import Metrics, TrajectoryLog

TRAJ_FILE = "trajectories.csv"
METRICS_FILE = "metrics.json"
FIELD_FILE = "field_final.csv"

TRAJ_COLUMNS = [
    "step", "agent", "px", "py", "dpx", "dpy", "theta", "dtheta", "phi", "dphi",
    "taux_nom", "tauy_nom", "taux", "tauy", "status", "min_h",
]
# state columns in CSV order, as indices into the model state
_STATE_ORDER = [PX, PY, DPX, DPY, THETA, DTHETA, PHI, DPHI]
FIELD_COLUMNS = ["index", "x", "y", "weight_initial", "weight_final"]


def fmt(v: float) -> str:
    """17 significant digits: enough to round-trip any double."""
    return format(float(v), ".17g")


def write_text(path, text: str) -> None:
    # newline="" keeps byte output identical across platforms
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def trajectories_csv(log: TrajectoryLog) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJ_COLUMNS)
    for k in range(log.steps + 1):
        for i in range(log.n_agents):
            x = log.states[k, i]
            row = [str(k), str(i)]
            row += [fmt(x[j]) for j in _STATE_ORDER]
            row += [fmt(v) for v in log.u_nom[k, i]]
            row += [fmt(v) for v in log.u[k, i]]
            row += [log.status[k][i], fmt(log.min_h[k, i])]
            w.writerow(row)
    return buf.getvalue()


@dataclass
class LoggedRun:
    """Arrays recovered from a trajectories file, laid out like TrajectoryLog."""

    states: np.ndarray
    u_nom: np.ndarray
    u: np.ndarray
    status: list[list[str]]
    min_h: np.ndarray

    def positions(self) -> np.ndarray:
        return self.states[:, :, [PX, PY]]


def read_trajectories(path) -> LoggedRun:
    path = Path(path)
    if not path.is_file():
        raise MissingRun(f"{path} not found")
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise MissingRun(f"{path} is empty")
    if rows[0] != TRAJ_COLUMNS:
        raise MalformedLog(f"{path}: unexpected header {rows[0]}")
    body = rows[1:]
    if not body:
        raise MissingRun(f"{path} has no rows")
    try:
        steps = [int(r[0]) for r in body]
        agents = [int(r[1]) for r in body]
        n_steps, n_agents = max(steps) + 1, max(agents) + 1
        if len(body) != n_steps * n_agents:
            raise MalformedLog(f"{path}: {len(body)} rows for {n_steps} steps x {n_agents} agents")
        states = np.full((n_steps, n_agents, 8), np.nan)
        u_nom = np.full((n_steps, n_agents, 2), np.nan)
        u = np.full((n_steps, n_agents, 2), np.nan)
        min_h = np.full((n_steps, n_agents), np.nan)
        status = [[""] * n_agents for _ in range(n_steps)]
        for r, k, i in zip(body, steps, agents):
            if len(r) != len(TRAJ_COLUMNS):
                raise MalformedLog(f"{path}: row for step {k} agent {i} has {len(r)} fields")
            vals = [float(v) for v in r[2:10]]
            states[k, i, _STATE_ORDER] = vals
            u_nom[k, i] = [float(r[10]), float(r[11])]
            u[k, i] = [float(r[12]), float(r[13])]
            status[k][i] = r[14]
            min_h[k, i] = float(r[15])
    except (ValueError, IndexError) as exc:
        raise MalformedLog(f"{path}: {exc}") from exc
    return LoggedRun(states, u_nom, u, status, min_h)


def field_csv(initial, final_weights) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIELD_COLUMNS)
    for j, (p, w0, w1) in enumerate(zip(initial.points, initial.weights, final_weights)):
        w.writerow([str(j), fmt(p[0]), fmt(p[1]), fmt(w0), fmt(w1)])
    return buf.getvalue()


def read_field(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Points, initial weights and final weights."""
    path = Path(path)
    if not path.is_file():
        raise MissingRun(f"{path} not found")
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != FIELD_COLUMNS:
        raise MalformedLog(f"{path}: unexpected header")
    try:
        data = np.array([[float(v) for v in r[1:]] for r in rows[1:]]).reshape(-1, 4)
    except ValueError as exc:
        raise MalformedLog(f"{path}: {exc}") from exc
    return data[:, :2], data[:, 2], data[:, 3]


def final_weights(log: TrajectoryLog, initial) -> np.ndarray:
    """Element-wise minimum over the agents' final copies of the field."""
    if not log.final_fields:
        return np.asarray(initial.weights, dtype=float)
    return np.min([f.weights for f in log.final_fields], axis=0)


def to_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def metrics_document(metrics: Metrics, provenance: dict) -> dict:
    return {**metrics.as_dict(), "provenance": provenance}


def read_metrics(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise MissingRun(f"{path} not found")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedLog(f"{path}: {exc}") from exc
    if not isinstance(doc, dict) or "provenance" not in doc:
        raise MalformedLog(f"{path}: no provenance block")
    return doc


def write_run(out_dir, log: TrajectoryLog, metrics: Metrics, initial_field, provenance: dict) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_text(out / TRAJ_FILE, trajectories_csv(log))
    write_text(out / METRICS_FILE, to_json(metrics_document(metrics, provenance)))
    write_text(out / FIELD_FILE, field_csv(initial_field, final_weights(log, initial_field)))
