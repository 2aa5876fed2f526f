import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from orbcover import geometry as g
from orbcover.geometry import IslGeometry, ParkingOrbit
from orbcover.scenario import OrbitalSlot

R = g.R_EARTH


def test_constants():
    assert R == 6378.14
    assert g.MU_EARTH == 398600.4418


def test_period_of_12_to_1_axis():
    # 2*pi*sqrt(a^3/mu) at a = 8054.57 km, evaluated independently
    assert g.orbital_period(8054.57) == pytest.approx(7194.0677, abs=1e-3)


def test_first_state_matches_epoch_elements(grid_factory):
    slot = OrbitalSlot("s", 8054.57, 102.9, 40.0, 75.0)
    states = g.propagate_circular(slot, grid_factory(5))
    pos, vel = g.circular_positions(8054.57, 102.9, 40.0, 75.0)
    np.testing.assert_allclose(states[0].position, pos, atol=1e-9)
    np.testing.assert_allclose(states[0].velocity, vel, atol=1e-12)
    assert [s.t for s in states] == [1, 2, 3, 4, 5]


def test_circular_radius_speed_and_energy(grid_factory):
    slot = OrbitalSlot("s", 7000.0, 51.6, 10.0, 20.0)
    states = g.propagate_circular(slot, grid_factory(200, dt=137.0))
    r = np.array([np.linalg.norm(s.position) for s in states])
    v = np.array([np.linalg.norm(s.velocity) for s in states])
    assert np.all(np.abs(r - 7000.0) < 1e-6)
    np.testing.assert_allclose(v, math.sqrt(g.MU_EARTH / 7000.0), rtol=1e-12)
    energy = v**2 / 2 - g.MU_EARTH / r
    assert np.ptp(energy) / abs(energy[0]) < 1e-9


def test_propagation_matches_slot_positions(grid_factory):
    grid = grid_factory(7, dt=300.0)
    slots = [OrbitalSlot("a", 8000.0, 30, 10, 0), OrbitalSlot("b", 9000.0, 60, 200, 90)]
    stack = g.slot_positions(slots, grid)
    for j, s in enumerate(slots):
        np.testing.assert_allclose(stack[:, j], [st.position for st in g.propagate_circular(s, grid)], atol=1e-9)


def test_rotation_conventions():
    v = np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(g.eci_to_ecef(v, 0.0), v)
    np.testing.assert_allclose(g.eci_to_ecef([1.0, 0.0, 0.0], math.pi / 2), [0.0, -1.0, 0.0], atol=1e-15)


@given(st.floats(-10, 10), st.lists(st.floats(-1e4, 1e4), min_size=3, max_size=3))
def test_rotation_preserves_norm(theta, vec):
    v = np.array(vec)
    out = g.eci_to_ecef(v, theta)
    assert np.linalg.norm(out) == pytest.approx(np.linalg.norm(v), rel=1e-9, abs=1e-9)


def test_ecef_state_uses_grid_angle(grid_factory):
    grid = grid_factory(3, dt=g.SIDEREAL_DAY / 4, gmst0_deg=0.0)
    state = g.EciState(np.array([7000.0, 0, 0]), np.zeros(3), 2)
    np.testing.assert_allclose(g.eci_to_ecef_state(state, grid), [0.0, -7000.0, 0.0], atol=1e-6)


def test_elevation_cases():
    site = g.site_ecef(32.71, -117.16)
    assert g.elevation_deg(site * (8054.57 / R), site) == pytest.approx(90.0)
    east = np.cross([0, 0, 1.0], site)
    east /= np.linalg.norm(east)
    assert g.elevation_deg(site + 1000.0 * east, site) == pytest.approx(0.0, abs=1e-9)
    assert g.elevation_deg(-site * 1.3, site) < 0
    with pytest.raises(g.GeometryError):
        g.elevation_deg(site, site)


@given(st.floats(-89, 89), st.floats(-179, 180), st.floats(0, 2 * math.pi),
       st.lists(st.floats(-9000, 9000), min_size=3, max_size=3))
def test_elevation_rotation_invariant(lat, lon, theta, offset):
    site = g.site_ecef(lat, lon)
    sat = site + np.array(offset) + np.array([0.0, 0.0, 0.5])
    rot = g.rotation_z(theta)
    assert g.elevation_deg(rot @ sat, rot @ site) == pytest.approx(g.elevation_deg(sat, site), abs=1e-7)


def test_vectorized_elevation_agrees():
    site = g.site_ecef(10.0, 20.0)
    sats = np.random.default_rng(0).normal(size=(20, 3)) * 8000
    assert np.allclose(g.elevations_deg(sats, site), [g.elevation_deg(s, site) for s in sats])


def test_isl_tangent_pair_not_visible():
    a = 8054.57
    h = math.sqrt(a**2 - R**2)
    rj, rk = np.array([R, h, 0.0]), np.array([R, -h, 0.0])
    out = g.isl_visibility(rj, rk, IslGeometry())
    assert out["rho"] == pytest.approx(2 * h)
    assert out["g"] == pytest.approx(0.0, abs=1e-8)
    assert not g.isl_matrix(np.stack([rj, rk]), IslGeometry())[0, 1]


def test_isl_coincident_and_opposed():
    r = np.array([8054.57, 0.0, 0.0])
    same = g.isl_visibility(r, r, IslGeometry())
    assert same["rho"] == 0 and same["g"] > 0 and same["visible"]
    opp = g.isl_visibility(r, -r, IslGeometry())
    # rho = 2a = 16109.14 > 2 sqrt(a^2 - R^2) = 9837.77
    assert opp["rho"] == pytest.approx(16109.14)
    assert opp["g"] == pytest.approx(9837.7697 - 16109.14, abs=1e-3)
    assert not opp["visible"]


def test_isl_range_limit_inclusive():
    rj, rk = np.array([8000.0, 0, 0]), np.array([8000.0, 1500.0, 0])
    assert g.isl_visibility(rj, rk, IslGeometry(max_range=1500.0))["visible"]
    assert not g.isl_visibility(rj, rk, IslGeometry(max_range=1499.9))["visible"]


def test_isl_below_shield_raises():
    with pytest.raises(g.GeometryError):
        g.isl_g([6000.0, 0, 0], [8000.0, 0, 0])
    with pytest.raises(g.GeometryError):
        IslGeometry(epsilon=-1.0)


@given(st.lists(st.floats(-1.0, 1.0), min_size=6, max_size=6), st.floats(6600, 20000), st.floats(6600, 20000))
def test_isl_symmetric(dirs, a1, a2):
    u = np.array(dirs[:3]) + 1e-3
    w = np.array(dirs[3:]) - 1e-3
    rj = a1 * u / np.linalg.norm(u)
    rk = a2 * w / np.linalg.norm(w)
    assert g.isl_g(rj, rk, 10.0) == g.isl_g(rk, rj, 10.0)
    M = g.isl_matrix(np.stack([rj, rk]), IslGeometry(10.0))
    assert np.array_equal(M, M.T) and not M.diagonal().any()


def test_hohmann_500_to_2000():
    # vis-viva evaluation with R = 6378.14 km, mu = 398600.4418 km^3/s^2
    assert g.hohmann_delta_v(R + 500, R + 2000) == pytest.approx(0.7133196, abs=1e-6)
    assert g.hohmann_delta_v(R + 800, R + 800) == 0.0


@pytest.mark.parametrize("angle_deg", [1.0, 10.0, 45.0, 90.0])
def test_plane_change_identity(angle_deg):
    v = g.circular_speed(R + 2000)
    slot = OrbitalSlot("s", R + 2000, 28.5 + angle_deg, 0.0, 210.0)
    parking = ParkingOrbit(R + 2000, 28.5, 0.0, 210.0)
    expected = 2 * v * math.sin(math.radians(angle_deg) / 2)
    assert g.deployment_delta_v(slot, parking) == pytest.approx(expected, rel=1e-12)


def test_plane_change_angle_from_raan_only():
    # polar orbits 90 deg apart in RAAN have perpendicular normals
    assert g.plane_change_angle(90, 0, 90, 90) == pytest.approx(math.pi / 2)
    assert g.plane_change_angle(0, 0, 0, 123) == pytest.approx(0.0, abs=1e-7)


def test_zero_deployment_cost_for_identical_orbit():
    slot = OrbitalSlot("s", R + 2000, 30.0, 40.0, 50.0)
    assert g.deployment_delta_v(slot, ParkingOrbit(R + 2000, 30.0, 40.0, 50.0)) == 0.0


def test_phasing_cost_properties():
    a = R + 2000
    assert g.phasing_delta_v(a, 0.0) == 0.0
    assert g.phasing_delta_v(a, 360.0) == 0.0
    small, large = g.phasing_delta_v(a, 10.0), g.phasing_delta_v(a, 120.0)
    assert 0 < small < large
    assert g.phasing_delta_v(a, 90.0, revolutions=10) < g.phasing_delta_v(a, 90.0, revolutions=2)
    with pytest.raises(g.GeometryError):
        g.phasing_delta_v(R + 100, 180.0, revolutions=1)


def test_phasing_ellipse_closes_the_offset():
    a, phase, k = R + 2000, 72.0, 5
    dv = g.phasing_delta_v(a, phase, k)
    # rebuild the ellipse from the burn and check the accumulated lead
    v_e = math.sqrt(g.MU_EARTH / a) - dv / 2
    a_ph = 1.0 / (2.0 / a - v_e**2 / g.MU_EARTH)
    lead = 360.0 * k * (1 - g.orbital_period(a_ph) / g.orbital_period(a))
    assert lead == pytest.approx(phase, abs=1e-9)
