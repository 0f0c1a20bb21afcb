"""CSV and legacy-VTK writers.  Floats are written with 17 significant digits."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if v is None:
        return ""
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_point_cloud(path, points, **fields) -> Path:
    """Columns x, y, z followed by one column per keyword array."""
    cols = [points[:, 0], points[:, 1], points[:, 2], *fields.values()]
    return write_csv(path, ["x", "y", "z", *fields], zip(*cols))


def write_vtk(path, points, **fields) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = len(points)
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\ncpband point cloud\nASCII\nDATASET POLYDATA\n")
        fh.write(f"POINTS {n} double\n")
        for p in points:
            fh.write(" ".join(_fmt(c) for c in p) + "\n")
        fh.write(f"VERTICES {n} {2 * n}\n")
        for i in range(n):
            fh.write(f"1 {i}\n")
        fh.write(f"POINT_DATA {n}\n")
        for name, vals in fields.items():
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for v in vals:
                fh.write(_fmt(v) + "\n")
    return path


def near_surface(distance, dx) -> np.ndarray:
    """Mask of band points within one grid spacing of the surface."""
    return np.asarray(distance) <= dx
