from datetime import datetime

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from orbcover.geometry import R_EARTH, SIDEREAL_DAY, IslGeometry
from orbcover.scenario import OrbitalSlot, Target, TimeGrid, rgt_semi_major_axis
from orbcover.visibility import (VisibilityError, build_isl, build_visibility, coverage_timeline,
                                 read_sparse_csv, reference_profile, rgt_track_shift, write_sparse_csv)


def site(lat=0.0, lon=0.0, min_el=5.0, T=1):
    return Target("site", "static", (1,) * T, lat=lat, lon=lon, min_elevation=min_el)


def equatorial(alt, aol, sid="s"):
    return OrbitalSlot(sid, R_EARTH + alt, 0.0, 0.0, aol)


def test_zenith_pass_visible(grid_factory):
    V = build_visibility([equatorial(1676.0, 0.0)], [site()], grid_factory(1))
    assert V.shape == (1, 1, 1) and V[0, 0, 0]


def test_antipodal_not_visible(grid_factory):
    V = build_visibility([equatorial(1676.0, 180.0)], [site()], grid_factory(1))
    assert not V[0, 0, 0]


def test_elevation_mask_is_inclusive_and_monotone(grid_factory):
    slots = [equatorial(1000.0, u, f"s{u}") for u in np.linspace(0, 40, 81)]
    low = build_visibility(slots, [site(min_el=0.0)], grid_factory(1))
    high = build_visibility(slots, [site(min_el=30.0)], grid_factory(1))
    assert np.all(high <= low)
    assert high.sum() < low.sum()


def dynamic_target(points, max_range):
    eph = np.asarray(points, dtype=float)
    return Target("air", "dynamic", (1,) * len(eph), ephemeris=eph, max_range=max_range)


def test_dynamic_range_boundary_inclusive(grid_factory):
    a = R_EARTH + 1000.0
    tgt = dynamic_target([[a + 1500.0, 0.0, 0.0]], 1500.0)
    V = build_visibility([equatorial(1000.0, 0.0)], [tgt], grid_factory(1))
    assert V[0, 0, 0]
    tgt = dynamic_target([[a + 1500.5, 0.0, 0.0]], 1500.0)
    assert not build_visibility([equatorial(1000.0, 0.0)], [tgt], grid_factory(1))[0, 0, 0]


def test_dynamic_target_blocked_by_earth(grid_factory):
    tgt = dynamic_target([[-(R_EARTH + 10.0), 0.0, 0.0]], None)
    assert not build_visibility([equatorial(1000.0, 0.0)], [tgt], grid_factory(1))[0, 0, 0]


def test_dynamic_ephemeris_mismatch(grid_factory):
    tgt = dynamic_target([[8000.0, 0, 0], [8000.0, 0, 0]], None)
    with pytest.raises(VisibilityError, match="ephemeris"):
        build_visibility([equatorial(1000.0, 0.0)], [tgt], grid_factory(3))


def test_isl_one_slot_is_empty(grid_factory):
    W = build_isl([equatorial(1000.0, 0.0)], grid_factory(4), IslGeometry())
    assert W.shape == (4, 1, 1) and not W.any()


def test_isl_coincident_slots_always_linked(grid_factory):
    a, b = equatorial(1000.0, 30.0, "a"), equatorial(1000.0, 30.0, "b")
    W = build_isl([a, b], grid_factory(6, dt=500.0), IslGeometry())
    assert W[:, 0, 1].all() and W[:, 1, 0].all()
    assert not W[:, 0, 0].any()


def test_isl_tangent_pair_unlinked(grid_factory):
    # two satellites at radius a whose chord just grazes the Earth: half-angle acos(R/a)
    alt = 1000.0
    half = np.degrees(np.arccos(R_EARTH / (R_EARTH + alt)))
    W = build_isl([equatorial(alt, 0.0, "a"), equatorial(alt, 2 * half, "b")], grid_factory(1), IslGeometry())
    assert not W[0, 0, 1]
    W = build_isl([equatorial(alt, 0.0, "a"), equatorial(alt, 2 * half - 0.01, "b")], grid_factory(1),
                  IslGeometry())
    assert W[0, 0, 1]


def test_isl_tensor_symmetric_zero_diagonal(grid_factory):
    rng = np.random.default_rng(3)
    slots = [OrbitalSlot(f"s{i}", R_EARTH + rng.uniform(500, 3000), rng.uniform(0, 180), rng.uniform(0, 360),
                         rng.uniform(0, 360)) for i in range(9)]
    W = build_isl(slots, grid_factory(8, dt=400.0), IslGeometry(epsilon=100.0, max_range=8000.0))
    assert np.array_equal(W, W.transpose(0, 2, 1))
    assert not np.any(np.diagonal(W, axis1=1, axis2=2))


def test_timeline_examples():
    V = np.array([[1, 0], [0, 1], [1, 0]], dtype=bool)[:, :, None]
    assert coverage_timeline(V, np.array([1, 1]))[:, 0].tolist() == [1, 1, 1]
    assert not coverage_timeline(V, np.zeros(2, dtype=int)).any()
    assert coverage_timeline(V, np.array([0, 1]))[:, 0].tolist() == [0, 1, 0]
    np.testing.assert_array_equal(reference_profile(V, 0), [[1], [0], [1]])


def test_timeline_rejects_bad_pattern():
    V = np.ones((2, 3, 1), dtype=bool)
    with pytest.raises(VisibilityError):
        coverage_timeline(V, np.array([1, 0]))
    with pytest.raises(VisibilityError):
        coverage_timeline(V, np.array([1, 2, 0]))


tensors = arrays(bool, st.tuples(st.integers(1, 8), st.integers(1, 6), st.integers(1, 3)))


@given(tensors, st.data())
def test_linearity_on_disjoint_patterns(V, data):
    J = V.shape[1]
    mask = np.array(data.draw(st.lists(st.integers(0, 2), min_size=J, max_size=J)))
    x1, x2 = (mask == 1).astype(int), (mask == 2).astype(int)
    np.testing.assert_array_equal(coverage_timeline(V, x1) + coverage_timeline(V, x2),
                                  coverage_timeline(V, x1 | x2))


@given(tensors, st.data())
def test_monotone_in_pattern(V, data):
    J = V.shape[1]
    x = np.array(data.draw(st.lists(st.integers(0, 1), min_size=J, max_size=J)))
    extra = np.array(data.draw(st.lists(st.integers(0, 1), min_size=J, max_size=J)))
    b, b2 = coverage_timeline(V, x), coverage_timeline(V, x | extra)
    assert np.all(b <= b2) and np.all(b2 <= J) and np.all(b >= 0)


@pytest.mark.parametrize("lat, lon", [(32.71, -117.16), (-34.61, -58.37)])
def test_track_shifted_slots_shift_visibility_circularly(lat, lon):
    T = 287
    grid = TimeGrid(datetime(2025, 1, 1, 12), SIDEREAL_DAY / T, T, True, 15.0)
    seed = OrbitalSlot("seed", rgt_semi_major_axis(12), 102.9, 40.0, 10.0)
    shifts = [1, 5, 50, 143]
    slots = [seed] + [rgt_track_shift(seed, k, grid.dt) for k in shifts]
    V = build_visibility(slots, [site(lat, lon, 5.0, T)], grid)
    assert V[:, 0, 0].any()
    for col, k in enumerate(shifts, start=1):
        np.testing.assert_array_equal(V[:, col, 0], np.roll(V[:, 0, 0], -k))


def test_sparse_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    V = rng.random((7, 5, 2)) < 0.3
    path = tmp_path / "V.csv"
    nnz = write_sparse_csv(path, V)
    assert nnz == V.sum()
    np.testing.assert_array_equal(read_sparse_csv(path), V)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,j,p,value" and lines[1] == "#shape,7,5,2"


def test_sparse_csv_rejects_malformed(tmp_path):
    path = tmp_path / "V.csv"
    path.write_text("t,j,p,value\n1,1,1,1\n")
    with pytest.raises(VisibilityError, match="#shape"):
        read_sparse_csv(path)
    path.write_text("t,j,p,value\n#shape,2,2,1\n1,x,1,1\n")
    with pytest.raises(VisibilityError, match=":3:"):
        read_sparse_csv(path)
