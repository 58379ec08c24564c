"""Trajectory and report serialization.

CSV contract: UTF-8, '.' decimal separator, '\n' line endings, mandatory
header row. Column order is fixed: t,m,E,eps followed by whichever
diagnostic columns the producing run carries, in the order
x,y,C,u,branch_count,residual. Floats are written with repr so files
round-trip bit-exactly.

JSON manifests are written with sorted keys so reruns produce identical
bytes for identical content.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .glauber import Trajectory

DIAG_ORDER = ("x", "y", "C", "u", "branch_count", "residual")
BASE_COLUMNS = ("t", "m", "E", "eps")


def _fmt(v: float) -> str:
    f = float(v)
    if math.isnan(f):
        return "nan"
    return repr(f)


def write_trajectory_csv(path: str, traj: Trajectory) -> list[str]:
    """Write one trajectory; returns the column names used."""
    cols = list(BASE_COLUMNS)
    series = [traj.times, traj.m, traj.E, traj.eps]
    if traj.diagnostics:
        for key in DIAG_ORDER:
            if key in traj.diagnostics:
                cols.append(key)
                series.append(traj.diagnostics[key])
    n = len(traj.times)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for row in range(n):
            fh.write(",".join(_fmt(s[row]) for s in series) + "\n")
    return cols


def read_csv_columns(path: str) -> dict[str, np.ndarray]:
    """Read a trajectory-style CSV back into named float arrays."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln]
    if not lines:
        raise ValueError(f"{path}: empty CSV")
    header = lines[0].split(",")
    data = np.array([[float(tok) for tok in ln.split(",")] for ln in lines[1:]])
    if data.size == 0:
        raise ValueError(f"{path}: no data rows")
    return {name: data[:, j] for j, name in enumerate(header)}


def write_json(path: str, payload: dict):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
