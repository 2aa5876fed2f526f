"""Visibility tensor V (T x J x P), ISL tensor W (T x J x J) and the
coverage timeline b = V x.

Tensors are plain boolean numpy arrays indexed ``[t, j, p]`` / ``[t, j, k]``
with 0-based indices.
"""
from __future__ import annotations

import csv
from dataclasses import replace
from typing import Sequence

import numpy as np

from . import geometry
from .geometry import IslGeometry, R_EARTH


class VisibilityError(ValueError):
    pass


def build_visibility(slots: Sequence, targets: Sequence, grid) -> np.ndarray:
    """Boolean V[t, j, p]: target p visible from slot j at step t.

    Static targets use the elevation mask (inclusive); dynamic targets need a
    line of sight clear of the Earth and range <= max_range (inclusive).
    """
    T = grid.T
    pos_eci = geometry.slot_positions(slots, grid)  # (T, J, 3)
    V = np.zeros((T, len(slots), len(targets)), dtype=bool)
    theta = geometry.sidereal_angles(grid)
    static = [p for p, tg in enumerate(targets) if tg.kind == "static"]
    if static:
        # rotate satellites into ECEF once for all static sites
        c, s = np.cos(theta)[:, None], np.sin(theta)[:, None]
        x, y, z = pos_eci[..., 0], pos_eci[..., 1], pos_eci[..., 2]
        pos_ecef = np.stack([c * x + s * y, -s * x + c * y, z], axis=-1)
        for p in static:
            tg = targets[p]
            site = geometry.site_ecef(tg.lat, tg.lon, tg.alt)
            V[:, :, p] = geometry.elevations_deg(pos_ecef, site) >= tg.min_elevation
    for p, tg in enumerate(targets):
        if tg.kind != "dynamic":
            continue
        eph = np.asarray(tg.ephemeris, dtype=float)
        if eph.shape != (T, 3):
            raise VisibilityError(f"target {tg.id}: ephemeris has {len(eph)} rows, grid has {T} steps")
        r_tgt = np.broadcast_to(eph[:, None, :], pos_eci.shape)
        vis = geometry.line_of_sight_clear(pos_eci, r_tgt, R_EARTH)
        if tg.max_range is not None:
            vis &= np.linalg.norm(pos_eci - r_tgt, axis=-1) <= tg.max_range
        V[:, :, p] = vis
    return V


def build_isl(slots: Sequence, grid, geo: IslGeometry) -> np.ndarray:
    """Boolean W[t, j, k]: link feasible between slots j and k at step t."""
    pos = geometry.slot_positions(slots, grid)
    W = np.zeros((grid.T, len(slots), len(slots)), dtype=bool)
    for t in range(grid.T):
        W[t] = geometry.isl_matrix(pos[t], geo)
    return W


def coverage_timeline(V: np.ndarray, x) -> np.ndarray:
    """b[t, p] = sum_j V[t, j, p] x[j]."""
    x = np.asarray(x)
    if V.ndim != 3 or x.shape != (V.shape[1],):
        raise VisibilityError(f"pattern vector of shape {x.shape} does not match V of shape {V.shape}")
    if not np.all((x == 0) | (x == 1)):
        raise VisibilityError("pattern vector entries must be 0 or 1")
    return np.einsum("tjp,j->tp", V.astype(np.int64), x.astype(np.int64))


def reference_profile(V: np.ndarray, seed: int = 0) -> np.ndarray:
    """Visibility column of the seed slot, shape (T, P)."""
    return V[:, seed, :].astype(np.int64)


def rgt_track_shift(slot, steps: int, dt: float):
    """Slot that flies the same ground track ``steps`` time steps ahead of ``slot``.

    Advancing along the track by tau seconds means argument of latitude +n*tau
    and RAAN -omega_E*tau, so its visibility column is the seed's column
    shifted by ``steps`` (circularly, when the horizon is one repeat period).
    """
    tau = steps * dt
    n_deg = np.degrees(np.sqrt(geometry.MU_EARTH / slot.semi_major_axis**3))
    return replace(
        slot,
        id=f"{slot.id}+{steps}",
        raan=float((slot.raan - np.degrees(geometry.EARTH_RATE) * tau) % 360.0),
        arg_latitude=float((slot.arg_latitude + n_deg * tau) % 360.0),
    )


# --------------------------------------------------------------------------
# sparse CSV exchange: one row "t,j,p,1" per nonzero, 1-based indices


def write_sparse_csv(path, tensor: np.ndarray, header=("t", "j", "p", "value")):
    idx = np.argwhere(tensor)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*header[:3], header[3]])
        w.writerow(["#shape", *tensor.shape])
        for a, b, c in idx:
            w.writerow([a + 1, b + 1, c + 1, 1])
    return len(idx)


def read_sparse_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2 or rows[1][0] != "#shape":
        raise VisibilityError(f"{path}: missing '#shape' line")
    shape = tuple(int(v) for v in rows[1][1:])
    out = np.zeros(shape, dtype=bool)
    for line, row in enumerate(rows[2:], start=3):
        try:
            a, b, c, v = (int(x) for x in row)
        except ValueError:
            raise VisibilityError(f"{path}:{line}: malformed row {row}") from None
        if v != 1:
            raise VisibilityError(f"{path}:{line}: only ones are stored, got {v}")
        out[a - 1, b - 1, c - 1] = True
    return out
