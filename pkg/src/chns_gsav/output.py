"""CSV tables and raw field snapshots."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

__all__ = [
    "DIAGNOSTIC_COLUMNS",
    "format_value",
    "write_csv",
    "read_csv",
    "write_snapshot",
    "read_snapshot",
    "snapshot_name",
]

DIAGNOSTIC_COLUMNS = (
    "step", "t", "R", "R_tilde", "xi", "eta", "E_original", "gap",
    "dissipation", "mass", "max_div_u",
)


def format_value(v):
    """Integers verbatim, floats in 17-significant-digit scientific notation."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v:.16e}"


def write_csv(path, columns, rows):
    """Write dict rows with a fixed column order; returns the path."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([format_value(row[c]) for c in columns])
    return path


def read_csv(path):
    """Read a CSV written by :func:`write_csv` into column-keyed float arrays."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = [[float(x) for x in row] for row in reader]
    arr = np.array(data, dtype=float).reshape(-1, len(header))
    return {name: arr[:, i] for i, name in enumerate(header)}


def snapshot_name(kind, step):
    return f"{kind}_{step:06d}.dat"


def write_snapshot(path, grid, t, arrays):
    """One text header line ``nx ny Lx Ly t`` then little-endian float64 arrays.

    Each array is written row-major with shape ``(ny, nx)``; vector fields
    store their components one after the other.
    """
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(f"{grid.nx} {grid.ny} {grid.Lx!r} {grid.Ly!r} {float(t)!r}\n".encode("ascii"))
        for a in arrays:
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes(order="C"))
    return path


def read_snapshot(path):
    """Return ``(header, arrays)`` from a snapshot file."""
    raw = Path(path).read_bytes()
    line, _, body = raw.partition(b"\n")
    nx, ny, Lx, Ly, t = line.decode("ascii").split()
    nx, ny = int(nx), int(ny)
    data = np.frombuffer(body, dtype="<f8")
    ncomp, rem = divmod(data.size, nx * ny)
    if rem or ncomp == 0:
        raise ValueError(f"{path}: payload size does not match a {nx}x{ny} grid")
    header = {"nx": nx, "ny": ny, "Lx": float(Lx), "Ly": float(Ly), "t": float(t)}
    return header, [data[i * nx * ny:(i + 1) * nx * ny].reshape(ny, nx) for i in range(ncomp)]
