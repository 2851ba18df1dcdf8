"""CSV/JSON readers and writers. Floats use shortest round-trip ``repr``."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .hawkes import JumpRecords
from .sde import SamplePath


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "" if v is None else str(v)


def header_line(version: str, config_hash: str, seed) -> str:
    return f"# hjd {version} config={config_hash} seed={seed}"


def write_csv(path, columns, rows, header=None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header:
            fh.write(header + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            values = [row[c] for c in columns] if isinstance(row, dict) else row
            w.writerow([fmt(v) for v in values])


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    if not rows:
        raise ValueError(f"{path}: no header row")
    return rows[0], rows[1:]


def write_json(path, obj, meta=None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if meta is not None:
        obj = {"meta": meta, **obj}
    path.write_text(json.dumps(obj, indent=2, allow_nan=True) + "\n", encoding="utf-8")


def write_path_csv(path, sp: SamplePath, header=None) -> None:
    cols = ["t", "x"]
    M = 0 if sp.lam is None else sp.lam.shape[1]
    cols += [f"lambda{j + 1}" for j in range(M)]
    t = sp.times
    rows = ([t[k], sp.x[k], *(sp.lam[k] if M else ())] for k in range(sp.n + 1))
    write_csv(path, cols, rows, header)


def read_path_csv(path, jumps: JumpRecords | None = None) -> SamplePath:
    cols, rows = read_csv(path)
    if cols[:2] != ["t", "x"]:
        raise ValueError(f"{path}: expected header starting with t,x")
    data = np.array(rows, dtype=float)
    if data.shape[0] < 2:
        raise ValueError(f"{path}: need at least two observations")
    t = data[:, 0]
    steps = np.diff(t)
    delta = float(t[1] - t[0])
    if not np.allclose(steps, delta, rtol=1e-9, atol=1e-12 * max(1.0, abs(t[-1]))):
        raise ValueError(f"{path}: observation grid is not uniform")
    lam = data[:, 2:] if data.shape[1] > 2 else None
    return SamplePath(delta=delta, x=data[:, 1].copy(), x0=float(data[0, 1]), lam=lam, jumps=jumps)


def write_jumps_csv(path, jumps: JumpRecords, header=None) -> None:
    rows = ((int(c) + 1, float(t)) for c, t in zip(jumps.components, jumps.times))
    write_csv(path, ["component", "time"], rows, header)


def read_jumps_csv(path) -> JumpRecords:
    cols, rows = read_csv(path)
    if cols != ["component", "time"]:
        raise ValueError(f"{path}: expected header component,time")
    if not rows:
        return JumpRecords(np.empty(0), np.empty(0, dtype=np.int64))
    comp = np.array([int(r[0]) for r in rows], dtype=np.int64) - 1
    times = np.array([float(r[1]) for r in rows])
    if np.any(comp < 0):
        raise ValueError(f"{path}: components are 1-based")
    jr = JumpRecords(times, comp)
    jr.check_sorted()
    return jr
