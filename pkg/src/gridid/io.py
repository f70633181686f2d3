"""Flat CSV and JSON manifest files produced and consumed by the command line tool.

Formats
-------
states / measurements : ``t,bus,v_mag_pu,theta_rad,p_pu,q_pu`` (``bus`` 1-based,
    ``theta_rad`` empty for phase-less readings)
matrix : ``h,k,g_pu,b_pu`` (1-based, upper triangle ``h <= k``; symmetric storage)
sweep : ``noise_level,method,rrmse_y`` (plus ``status`` for failed cells)
trace : ``iteration,objective``

Floats are written with ``repr`` so files round-trip exactly.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

STATE_HEADER = ("t", "bus", "v_mag_pu", "theta_rad", "p_pu", "q_pu")
MATRIX_HEADER = ("h", "k", "g_pu", "b_pu")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_rows(path, header, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([x if isinstance(x, str) else _fmt(x) for x in row])


def _read(path, header):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != tuple(header):
        raise ValueError(f"{path}: expected header {','.join(header)}")
    return rows[1:]


def write_states(path, v_mag, theta, p, q) -> None:
    """One row per (sample, bus); ``theta=None`` leaves the angle column empty."""
    big_n, n = np.shape(v_mag)

    def rows():
        for t in range(big_n):
            for h in range(n):
                th = None if theta is None else theta[t, h]
                yield (t, h + 1, v_mag[t, h], th, p[t, h], q[t, h])

    write_rows(path, STATE_HEADER, rows())


def read_states(path):
    """Inverse of :func:`write_states`; returns ``(v_mag, theta | None, p, q)``."""
    rows = _read(path, STATE_HEADER)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    big_n = max(int(r[0]) for r in rows) + 1
    n = max(int(r[1]) for r in rows)
    if len(rows) != big_n * n:
        raise ValueError(f"{path}: expected {big_n * n} rows, found {len(rows)}")
    out = np.full((4, big_n, n), np.nan)
    phaseless = rows[0][3] == ""
    for r in rows:
        t, h = int(r[0]), int(r[1]) - 1
        out[0, t, h] = float(r[2])
        out[1, t, h] = np.nan if r[3] == "" else float(r[3])
        out[2, t, h] = float(r[4])
        out[3, t, h] = float(r[5])
    return out[0], (None if phaseless else out[1]), out[2], out[3]


def write_matrix(path, y) -> None:
    """Upper triangle of a symmetric matrix; the lower triangle is implied."""
    y = np.asarray(y, dtype=complex)
    n = y.shape[0]
    write_rows(path, MATRIX_HEADER,
               ((h + 1, k + 1, y[h, k].real, y[h, k].imag) for h in range(n) for k in range(h, n)))


def read_matrix(path) -> np.ndarray:
    rows = _read(path, MATRIX_HEADER)
    n = int(round((np.sqrt(8 * len(rows) + 1) - 1) / 2))
    if n * (n + 1) // 2 != len(rows):
        raise ValueError(f"{path}: {len(rows)} entries do not form an upper triangle")
    y = np.zeros((n, n), dtype=complex)
    for r in rows:
        h, k = int(r[0]) - 1, int(r[1]) - 1
        y[h, k] = y[k, h] = complex(float(r[2]), float(r[3]))
    return y


def write_json(path, doc) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
