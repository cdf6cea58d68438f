import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oamtopo.homology import (
    FiltrationParams,
    PersistenceDiagram,
    PersistencePoint,
    PointCloud3,
    compute_diagram,
    cubical_persistence,
    explicit_cubical_filtration,
    explicit_rips_filtration,
    image_to_cloud,
    oracle_persistence,
    rips_persistence,
)
from oamtopo.optics import GridSpec, Image, intensity, lg_field


# ---------------------------------------------------------------------------
# diagram containers


def test_point_invariants():
    with pytest.raises(ValueError):
        PersistencePoint(0, 1.0, 1.0)  # zero lifetime
    with pytest.raises(ValueError):
        PersistencePoint(3, 0.0, 1.0)
    p = PersistencePoint(1, 0.25, 0.75)
    assert p.lifetime == pytest.approx(0.5)


def test_diagram_invariants():
    with pytest.raises(ValueError):
        PersistenceDiagram((PersistencePoint(1, 0.0, math.inf),), 2.0, "rips")
    with pytest.raises(ValueError):
        PersistenceDiagram((PersistencePoint(0, 0.0, 3.0),), 2.0, "rips")
    with pytest.raises(ValueError):
        PersistenceDiagram((PersistencePoint(0, -0.5, 1.0),), 2.0, "rips")
    # cubical diagrams may carry negative births
    PersistenceDiagram((PersistencePoint(0, -5.0, -1.0),), 0.0, "cubical")


# ---------------------------------------------------------------------------
# cloud lifting


def test_empty_image_empty_cloud(grid64):
    cloud = image_to_cloud(Image(grid64, np.zeros((64, 64))), FiltrationParams())
    assert len(cloud) == 0
    d = rips_persistence(cloud, 2, 1.5)
    assert len(d) == 0


def test_single_bright_pixel(grid64):
    vals = np.zeros((64, 64))
    vals[10, 20] = 7.0
    cloud = image_to_cloud(Image(grid64, vals), FiltrationParams(tau=0.1, alpha=0.5))
    assert len(cloud) == 1
    x, y, h = cloud.points[0]
    assert (x, y) == (20 / 64, 10 / 64)
    assert h == pytest.approx(0.5)


def test_ring_cloud_diameter():
    # LG_1 intensity ring has radius sqrt(1/2) in w0 units
    g = GridSpec(64, 3.0)
    img = intensity(lg_field(1, g))
    cloud = image_to_cloud(img, FiltrationParams(tau=0.3, max_points=128))
    xy = cloud.points[:, :2]
    dmax = max(
        np.linalg.norm(a - b) for a in xy for b in xy
    )
    # ring diameter 2*sqrt(0.5) in w0 units is 2*sqrt(0.5)/6 of the window
    expect = 2 * np.sqrt(0.5) / (2 * g.extent)
    assert dmax == pytest.approx(expect, rel=0.25)


def test_fps_subsampling_deterministic(grid64, rng):
    vals = rng.random((64, 64))
    params = FiltrationParams(tau=0.1, max_points=50)
    c1 = image_to_cloud(Image(grid64, vals), params)
    c2 = image_to_cloud(Image(grid64, vals), params)
    assert len(c1) == 50
    assert np.array_equal(c1.points, c2.points)


def test_filtration_params_validation():
    with pytest.raises(ValueError):
        FiltrationParams(mode="cubical", max_dim=2)
    with pytest.raises(ValueError):
        FiltrationParams(mode="rips", max_points=1000)
    with pytest.raises(ValueError):
        FiltrationParams(tau=1.0)
    with pytest.raises(ValueError):
        FiltrationParams(max_radius=0.0)


# ---------------------------------------------------------------------------
# rips engine on known complexes


def test_single_point():
    d = rips_persistence(PointCloud3(np.array([[0.1, 0.2, 0.0]])), 2, 1.5)
    assert d.multiset() == ((0, 0.0, math.inf),)


def test_two_points():
    d = rips_persistence(PointCloud3(np.array([[0, 0, 0], [0.5, 0, 0]], float)), 2, 1.5)
    assert d.multiset() == ((0, 0.0, 0.5), (0, 0.0, math.inf))


def test_unit_square_h1():
    sq = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], float)
    d = rips_persistence(PointCloud3(sq), 1, 2.0)
    assert d.multiset(6) == (
        (0, 0.0, 1.0),
        (0, 0.0, 1.0),
        (0, 0.0, 1.0),
        (0, 0.0, math.inf),
        (1, 1.0, round(math.sqrt(2), 6)),
    )


def test_max_dim_rejected():
    with pytest.raises(ValueError):
        rips_persistence(PointCloud3(np.zeros((1, 3))), 3, 1.0)


def test_h0_essentials_match_component_count(rng):
    # two far clusters under a small radius: two essential classes
    pts = np.vstack([rng.random((5, 3)) * 0.1, rng.random((4, 3)) * 0.1 + 5.0])
    d = rips_persistence(PointCloud3(pts), 0, 1.0)
    essentials = [p for p in d.points if math.isinf(p.death)]
    assert len(essentials) == 2


# ---------------------------------------------------------------------------
# oracle


def _triangle_cells(with_face: bool):
    cells = [
        (0.0, (0,)),
        (0.0, (1,)),
        (0.0, (2,)),
        (1.0, (0, 1)),
        (1.0, (0, 2)),
        (1.0, (1, 2)),
    ]
    if with_face:
        cells.append((1.0, (0, 1, 2)))
    return cells


def test_oracle_filled_triangle():
    d = oracle_persistence(_triangle_cells(True), "simplicial")
    assert d.points_of_dim(1) == ()  # the loop fills at birth


def test_oracle_hollow_triangle_truncation():
    d = oracle_persistence(_triangle_cells(False), "simplicial", max_filtration=2.0)
    assert [(p.birth, p.death) for p in d.points_of_dim(1)] == [(1.0, 2.0)]


def test_oracle_rejects_unsorted():
    cells = list(reversed(_triangle_cells(False)))
    with pytest.raises(ValueError):
        oracle_persistence(cells, "simplicial")


def test_oracle_rejects_open_complex():
    with pytest.raises(ValueError):
        oracle_persistence([(0.0, (0,)), (1.0, (0, 1))], "simplicial")


# ---------------------------------------------------------------------------
# cubical engine


def test_cubical_constant_image(grid64):
    d = cubical_persistence(Image(grid64, np.full((64, 64), 2.5)), 1)
    assert d.multiset() == ((0, -2.5, math.inf),)


def test_cubical_two_blobs_saddle_death():
    vals = np.zeros((8, 8))
    vals[3, 1] = 5.0
    vals[3, 2] = 1.0  # saddle on the ridge between the blobs
    vals[3, 3] = 5.0
    d = cubical_persistence(Image(GridSpec(8, 3.0), vals), 1)
    h0 = sorted(d.points_of_dim(0), key=lambda p: p.death)
    assert len(h0) == 2
    assert h0[0].birth == -5.0 and h0[0].death == -1.0
    assert math.isinf(h0[1].death)


def test_cubical_rotation_flip_invariance(rng):
    vals = rng.integers(0, 9, size=(8, 8)).astype(float)
    base = cubical_persistence(Image(GridSpec(8, 3.0), vals), 1).multiset()
    for xf in (np.rot90(vals), np.rot90(vals, 2), np.flipud(vals), np.fliplr(vals)):
        d = cubical_persistence(Image(GridSpec(8, 3.0), np.ascontiguousarray(xf)), 1)
        assert d.multiset() == base


def test_cubical_max_dim_guard(grid64):
    with pytest.raises(ValueError):
        cubical_persistence(Image(grid64, np.zeros((64, 64))), 2)


# ---------------------------------------------------------------------------
# differential tests and invariances


def test_rips_matches_oracle_random(rng):
    for trial in range(50):
        n = int(rng.integers(1, 13))
        pts = rng.random((n, 3))
        pts[:, 2] *= 0.5
        radius = float(rng.uniform(0.3, 1.8))
        max_dim = int(rng.integers(0, 3))
        d = rips_persistence(PointCloud3(pts), max_dim, radius)
        o = oracle_persistence(
            explicit_rips_filtration(pts, max_dim, radius),
            "simplicial",
            max_filtration=radius,
            max_dim=max_dim,
        )
        assert d.multiset(7) == o.multiset(7)


def test_cubical_matches_oracle_random(rng):
    for trial in range(30):
        vals = rng.integers(0, 6, size=(8, 8)).astype(float)
        d = cubical_persistence(Image(GridSpec(8, 3.0), vals), 1)
        o = oracle_persistence(
            explicit_cubical_filtration(-vals), "cubical", max_dim=1
        )
        assert d.multiset(7) == o.multiset(7)


def test_oracle_vs_engine_tiny_filtrations(rng):
    # the spec's 30-random-filtrations cross-check, on <= 8 vertices
    for trial in range(30):
        n = int(rng.integers(2, 9))
        pts = rng.random((n, 3))
        radius = float(rng.uniform(0.5, 2.0))
        d = rips_persistence(PointCloud3(pts), 1, radius)
        o = oracle_persistence(
            explicit_rips_filtration(pts, 1, radius),
            "simplicial",
            max_filtration=radius,
            max_dim=1,
        )
        assert d.multiset(7) == o.multiset(7)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=15)
def test_isometry_invariance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 10))
    pts = rng.random((n, 3))
    base = rips_persistence(PointCloud3(pts), 2, 1.2).multiset(8)
    # random rotation (QR of a Gaussian matrix) + translation
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q *= np.sign(np.diag(r))
    moved = pts @ q.T + rng.standard_normal(3)
    assert rips_persistence(PointCloud3(moved), 2, 1.2).multiset(8) == base


@given(st.floats(0.3, 3.0), st.integers(0, 2**32 - 1))
@settings(max_examples=15)
def test_scale_equivariance(k, seed):
    rng = np.random.default_rng(seed)
    pts = rng.random((6, 3))
    d1 = rips_persistence(PointCloud3(pts), 2, 2.0)
    d2 = rips_persistence(PointCloud3(pts * k), 2, 2.0 * k)
    m1 = [(p.dim, p.birth * k, p.death * k) for p in d1.points]
    m2 = [(p.dim, p.birth, p.death) for p in d2.points]
    for (da, ba, va), (db, bb, vb) in zip(sorted(m1), sorted(m2)):
        assert da == db
        assert ba == pytest.approx(bb, abs=1e-9 * max(1.0, k))
        if math.isinf(va) or math.isinf(vb):
            assert math.isinf(va) and math.isinf(vb)
        else:
            assert va == pytest.approx(vb, abs=1e-9 * max(1.0, k))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=15)
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    pts = rng.random((8, 3))
    base = rips_persistence(PointCloud3(pts), 2, 1.5).multiset(8)
    shuffled = pts[rng.permutation(8)]
    assert rips_persistence(PointCloud3(shuffled), 2, 1.5).multiset(8) == base


def test_compute_diagram_routes(grid64):
    img = intensity(lg_field(1, grid64))
    d_rips = compute_diagram(img, FiltrationParams(mode="rips", max_points=24))
    assert d_rips.source_mode == "rips"
    d_cub = compute_diagram(img, FiltrationParams(mode="cubical", max_dim=1))
    assert d_cub.source_mode == "cubical"
    assert any(p.dim == 1 for p in d_rips.points)  # the ring is a loop
