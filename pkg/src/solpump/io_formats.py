"""On-disk formats: field snapshots, CSV tables, atomic writes, hashing.

Snapshots are a small JSON header next to a raw little-endian float64 binary
of interleaved (re, im) pairs; CSVs are written with a fixed %.12g float
format so reruns are byte identical.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np


def atomic_write_bytes(path: str, data: bytes):
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def atomic_write_text(path: str, text: str):
    atomic_write_bytes(path, text.encode("utf-8"))


def write_json(path: str, obj):
    atomic_write_text(path, json.dumps(obj, indent=1, sort_keys=True) + "\n")


def save_snapshot(field, basepath: str):
    """Write basepath.json (header) and basepath.bin (interleaved re, im)."""
    header = {
        "n_points": field.grid.n_points,
        "x_min": field.grid.x_min,
        "dx": field.grid.dx,
        "time": field.time,
        "norm": field.norm(),
    }
    write_json(basepath + ".json", header)
    buf = np.empty(2 * field.grid.n_points, dtype="<f8")
    buf[0::2] = field.values.real
    buf[1::2] = field.values.imag
    atomic_write_bytes(basepath + ".bin", buf.tobytes())
    return [basepath + ".json", basepath + ".bin"]


def load_snapshot(basepath: str):
    from .gpe_solver import ComplexField, Grid1D

    with open(basepath + ".json", "r", encoding="utf-8") as fh:
        header = json.load(fh)
    n = int(header["n_points"])
    raw = np.fromfile(basepath + ".bin", dtype="<f8")
    if raw.size != 2 * n:
        raise ValueError(f"snapshot payload size {raw.size} != 2*{n}")
    vals = raw[0::2] + 1j * raw[1::2]
    grid = Grid1D(
        x_min=header["x_min"],
        x_max=header["x_min"] + n * header["dx"],
        n_points=n,
    )
    return ComplexField(grid=grid, values=vals, time=header["time"])


def _fmt(cell) -> str:
    if isinstance(cell, (float, np.floating)):
        return "%.12g" % cell
    if isinstance(cell, (int, np.integer)):
        return str(int(cell))
    return str(cell)


def write_csv(path: str, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(c) for c in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def trajectory_csv(traj, path: str):
    write_csv(path, ["t", "com", "norm"], zip(traj.times, traj.com, traj.norm))


def density_csv(fields, path: str, max_x_points: int = 256, max_t_points: int = 200):
    """Long-format (t, x, density) table, downsampled for plotting."""
    rows = []
    if len(fields) > max_t_points:
        keep = np.linspace(0, len(fields) - 1, max_t_points).astype(int)
        fields = [fields[i] for i in keep]
    for f in fields:
        x = f.grid.x
        dens = f.density()
        stride = max(1, f.grid.n_points // max_x_points)
        for xi, di in zip(x[::stride], dens[::stride]):
            rows.append((f.time, xi, di))
    write_csv(path, ["t", "x", "density"], rows)


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()
