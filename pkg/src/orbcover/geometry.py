"""Two-body circular propagation, Earth-fixed frames, visibility tests and
deployment cost.

Conventions used throughout the package:

* spherical Earth of radius ``R_EARTH`` (km); geodetic latitude is taken as
  geocentric latitude;
* ECI -> ECEF is a single rotation about +Z by the Greenwich sidereal angle,
  ``r_ecef = R3(theta) @ r_eci`` with ``R3(90 deg)`` mapping +X to -Y;
* the sidereal angle grows linearly from its epoch value at ``EARTH_RATE``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import TYPE_CHECKING, Optional

import numpy as np

if TYPE_CHECKING:
    from .scenario import OrbitalSlot, TimeGrid

MU_EARTH = 398600.4418  # km^3/s^2
R_EARTH = 6378.14  # km
SIDEREAL_DAY = 86164.0905  # s
EARTH_RATE = 2.0 * math.pi / SIDEREAL_DAY  # rad/s
# |g| below this (km) is the tangent case, which does not count as a link
ISL_TANGENT_TOL = 1e-9


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class EciState:
    position: np.ndarray  # km
    velocity: np.ndarray  # km/s
    t: int  # 1-based step index


@dataclass(frozen=True)
class IslGeometry:
    """Shielding sphere bias and optional maximum link range for ISLs."""

    epsilon: float = 0.0
    max_range: Optional[float] = None

    def __post_init__(self):
        if self.epsilon < 0:
            raise GeometryError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.max_range is not None and self.max_range <= 0:
            raise GeometryError(f"max_range must be > 0, got {self.max_range}")


# --------------------------------------------------------------------------
# time and frames


def julian_date(when: datetime) -> float:
    if when.tzinfo is not None:
        when = when.astimezone(timezone.utc).replace(tzinfo=None)
    j2000 = datetime(2000, 1, 1, 12, 0, 0)
    return 2451545.0 + (when - j2000).total_seconds() / 86400.0


def gmst_deg(when: datetime) -> float:
    """Greenwich mean sidereal angle (IAU 1982 polynomial), degrees in [0, 360)."""
    d = julian_date(when) - 2451545.0
    tc = d / 36525.0
    theta = 280.46061837 + 360.98564736629 * d + 0.000387933 * tc**2 - tc**3 / 38710000.0
    return theta % 360.0


def rotation_z(theta_rad: float) -> np.ndarray:
    c, s = math.cos(theta_rad), math.sin(theta_rad)
    return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])


def sidereal_angles(grid: "TimeGrid") -> np.ndarray:
    """Sidereal angle (rad) at every step of ``grid``."""
    return math.radians(grid.gmst0_deg) + EARTH_RATE * grid.elapsed()


def eci_to_ecef(position, theta_rad: float) -> np.ndarray:
    """Rotate an ECI vector (or an (n, 3) stack) into ECEF at sidereal angle ``theta_rad``."""
    return np.asarray(position, dtype=float) @ rotation_z(theta_rad).T


def eci_to_ecef_state(state: EciState, grid: "TimeGrid") -> np.ndarray:
    return eci_to_ecef(state.position, sidereal_angles(grid)[state.t - 1])


def site_ecef(lat_deg: float, lon_deg: float, alt_m: float = 0.0) -> np.ndarray:
    r = R_EARTH + alt_m / 1000.0
    lat, lon = math.radians(lat_deg), math.radians(lon_deg)
    return r * np.array([math.cos(lat) * math.cos(lon), math.cos(lat) * math.sin(lon), math.sin(lat)])


# --------------------------------------------------------------------------
# propagation


def circular_speed(a: float) -> float:
    return math.sqrt(MU_EARTH / a)


def orbital_period(a: float) -> float:
    return 2.0 * math.pi * math.sqrt(a**3 / MU_EARTH)


def semi_major_axis_for_period(period: float) -> float:
    return (MU_EARTH * (period / (2.0 * math.pi)) ** 2) ** (1.0 / 3.0)


def circular_positions(a, inc_deg, raan_deg, u_deg) -> tuple[np.ndarray, np.ndarray]:
    """ECI position and velocity of circular orbits, broadcasting over inputs.

    ``u_deg`` is the argument of latitude. Returns arrays of shape (..., 3).
    """
    a = np.asarray(a, dtype=float)
    i = np.radians(inc_deg)
    om = np.radians(raan_deg)
    u = np.radians(u_deg)
    cu, su = np.cos(u), np.sin(u)
    co, so = np.cos(om), np.sin(om)
    ci, si = np.cos(i), np.sin(i)
    pos = np.stack([co * cu - so * su * ci, so * cu + co * su * ci, su * si + 0.0 * cu], axis=-1)
    vel = np.stack([-co * su - so * cu * ci, -so * su + co * cu * ci, cu * si + 0.0 * su], axis=-1)
    v = np.sqrt(MU_EARTH / a)
    return pos * a[..., None], vel * v[..., None]


def slot_positions(slots, grid: "TimeGrid") -> np.ndarray:
    """ECI positions of every slot at every step, shape (T, J, 3)."""
    a = np.array([s.semi_major_axis for s in slots])
    inc = np.array([s.inclination for s in slots])
    raan = np.array([s.raan for s in slots])
    u0 = np.array([s.arg_latitude for s in slots])
    n_deg = np.degrees(np.sqrt(MU_EARTH / a**3))
    u = u0[None, :] + n_deg[None, :] * grid.elapsed()[:, None]
    pos, _ = circular_positions(a[None, :], inc[None, :], raan[None, :], u)
    return pos


def propagate_circular(slot: "OrbitalSlot", grid: "TimeGrid") -> list[EciState]:
    """Keplerian circular motion of ``slot`` sampled on ``grid``."""
    a = slot.semi_major_axis
    n_deg = math.degrees(math.sqrt(MU_EARTH / a**3))
    u = slot.arg_latitude + n_deg * grid.elapsed()
    pos, vel = circular_positions(np.full(u.shape, a), slot.inclination, slot.raan, u)
    return [EciState(pos[k], vel[k], k + 1) for k in range(grid.num_steps)]


# --------------------------------------------------------------------------
# visibility primitives


def elevation_deg(sat_ecef, site) -> float:
    """Elevation of ``sat_ecef`` above the horizon plane at ``site`` (spherical Earth)."""
    sat = np.asarray(sat_ecef, dtype=float)
    site = np.asarray(site, dtype=float)
    los = sat - site
    rng = np.linalg.norm(los)
    if rng == 0.0:
        raise GeometryError("satellite coincides with site")
    up = site / np.linalg.norm(site)
    s = float(np.clip(np.dot(los, up) / rng, -1.0, 1.0))
    return math.degrees(math.asin(s))


def elevations_deg(sat_ecef: np.ndarray, site) -> np.ndarray:
    """Vectorized ``elevation_deg`` over a stack of satellite positions (..., 3)."""
    site = np.asarray(site, dtype=float)
    los = sat_ecef - site
    rng = np.linalg.norm(los, axis=-1)
    up = site / np.linalg.norm(site)
    return np.degrees(np.arcsin(np.clip((los @ up) / rng, -1.0, 1.0)))


def line_of_sight_clear(r1: np.ndarray, r2: np.ndarray, radius: float = R_EARTH) -> np.ndarray:
    """True where the segment r1-r2 stays outside the sphere of ``radius``.

    Works on stacks (..., 3). A segment touching the sphere tangentially counts
    as clear.
    """
    d = r2 - r1
    dd = np.einsum("...i,...i->...", d, d)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(dd > 0, -np.einsum("...i,...i->...", r1, d) / dd, 0.0)
    s = np.clip(s, 0.0, 1.0)
    closest = r1 + s[..., None] * d
    return np.linalg.norm(closest, axis=-1) >= radius


def isl_g(r_j, r_k, epsilon: float = 0.0) -> float:
    """Inter-satellite visibility function; positive means an unobstructed link."""
    shield = R_EARTH + epsilon
    nj2 = float(np.dot(r_j, r_j)) - shield**2
    nk2 = float(np.dot(r_k, r_k)) - shield**2
    if nj2 < 0 or nk2 < 0:
        raise GeometryError("satellite below the shielding radius")
    rho = float(np.linalg.norm(np.asarray(r_k, dtype=float) - np.asarray(r_j, dtype=float)))
    return math.sqrt(nj2) + math.sqrt(nk2) - rho


def isl_visibility(r_j, r_k, geo: IslGeometry) -> dict:
    r_j = np.asarray(r_j, dtype=float)
    r_k = np.asarray(r_k, dtype=float)
    g = isl_g(r_j, r_k, geo.epsilon)
    rho = float(np.linalg.norm(r_k - r_j))
    visible = g > ISL_TANGENT_TOL and (geo.max_range is None or rho <= geo.max_range)
    return {"g": g, "rho": rho, "visible": visible}


def isl_matrix(positions: np.ndarray, geo: IslGeometry) -> np.ndarray:
    """Boolean link matrix for one epoch; ``positions`` has shape (J, 3).

    Uses the symmetric form of g so W is exactly symmetric.
    """
    shield = R_EARTH + geo.epsilon
    r2 = np.einsum("ji,ji->j", positions, positions)
    if np.any(r2 < shield**2):
        raise GeometryError("satellite below the shielding radius")
    h = np.sqrt(r2 - shield**2)
    diff = positions[:, None, :] - positions[None, :, :]
    rho = np.sqrt(np.einsum("jki,jki->jk", diff, diff))
    rho = np.minimum(rho, rho.T)
    g = (h[:, None] + h[None, :]) - rho
    vis = g > ISL_TANGENT_TOL
    if geo.max_range is not None:
        vis &= rho <= geo.max_range
    np.fill_diagonal(vis, False)
    return vis


# --------------------------------------------------------------------------
# deployment cost


def hohmann_delta_v(r1: float, r2: float) -> float:
    """Two-impulse Hohmann transfer between coplanar circular orbits."""
    at = 0.5 * (r1 + r2)
    dv1 = abs(math.sqrt(MU_EARTH * (2.0 / r1 - 1.0 / at)) - math.sqrt(MU_EARTH / r1))
    dv2 = abs(math.sqrt(MU_EARTH / r2) - math.sqrt(MU_EARTH * (2.0 / r2 - 1.0 / at)))
    return dv1 + dv2


def plane_change_angle(inc1_deg: float, raan1_deg: float, inc2_deg: float, raan2_deg: float) -> float:
    """Angle (rad) between two orbit normals."""
    i1, i2 = math.radians(inc1_deg), math.radians(inc2_deg)
    dom = math.radians(raan2_deg - raan1_deg)
    c = math.cos(i1) * math.cos(i2) + math.sin(i1) * math.sin(i2) * math.cos(dom)
    return math.acos(max(-1.0, min(1.0, c)))


def plane_change_delta_v(v: float, angle_rad: float) -> float:
    return 2.0 * v * math.sin(angle_rad / 2.0)


def phasing_delta_v(a: float, phase_deg: float, revolutions: int = 5) -> float:
    """Two-impulse phasing on a circular orbit of radius ``a``.

    The spacecraft enters an ellipse tangent at ``a`` whose period differs from
    the circular one so that after ``revolutions`` laps it leads by
    ``phase_deg`` (wrapped to (-180, 180]); positive means catching up.
    """
    if revolutions < 1:
        raise GeometryError("phasing needs at least one revolution")
    phase = (phase_deg + 180.0) % 360.0 - 180.0
    if phase == -180.0:
        phase = 180.0
    if phase == 0.0:
        return 0.0
    period = orbital_period(a) * (1.0 - phase / (360.0 * revolutions))
    a_ph = semi_major_axis_for_period(period)
    if 2.0 * a_ph - a <= R_EARTH:
        raise GeometryError("phasing orbit intersects the Earth; allow more revolutions")
    v_c = math.sqrt(MU_EARTH / a)
    v_e = math.sqrt(MU_EARTH * (2.0 / a - 1.0 / a_ph))
    return 2.0 * abs(v_c - v_e)


@dataclass(frozen=True)
class ParkingOrbit:
    semi_major_axis: float
    inclination: float
    raan: float
    arg_latitude: float


def deployment_delta_v(slot: "OrbitalSlot", parking: ParkingOrbit, phasing_revs: int = 5) -> float:
    """Hohmann raise, then a combined inclination/RAAN plane change at the slot
    radius, then phasing to the slot's argument of latitude.

    The phase offset is measured from the parking orbit's argument of latitude.
    """
    a = slot.semi_major_axis
    dv = hohmann_delta_v(parking.semi_major_axis, a)
    angle = plane_change_angle(parking.inclination, parking.raan, slot.inclination, slot.raan)
    dv += plane_change_delta_v(circular_speed(a), angle)
    dv += phasing_delta_v(a, slot.arg_latitude - parking.arg_latitude, phasing_revs)
    return dv
