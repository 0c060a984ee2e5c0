"""Region-of-interest geometry, mask fusion, denoising, clustering, boxes."""

import numpy as np
import pytest

from polarbg.cli import default_sensor_config
from polarbg.errors import InvalidPolygon, ShapeMismatch
from polarbg.model import train_background_model
from polarbg.pipeline import (FusionMode, PipelineConfig, apply_roi,
                              bounding_box, build_roi_mask, cluster, denoise,
                              detect_frame, fuse_masks, point_in_polygon)
from polarbg.sim import GroundPlane, Scene, Vehicle, raycast, simulate

UNIT_SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]


class TestRoi:
    def test_unit_square_raster(self):
        mask = build_roi_mask([UNIT_SQUARE], cell_size=0.5)
        assert mask.grid[:2, :2].all()

    def test_outside_is_false(self):
        mask = build_roi_mask([UNIT_SQUARE], cell_size=0.5)
        assert not mask.contains(np.array([5.0]), np.array([5.0]))[0]

    def test_matches_point_in_polygon(self, rng):
        poly = np.array([(0.0, 0.0), (4.0, 0.0), (4.0, 1.0), (1.0, 1.0),
                         (1.0, 3.0), (0.0, 3.0)])
        mask = build_roi_mask([poly], cell_size=0.01)
        xs = rng.uniform(-1.0, 5.0, 500)
        ys = rng.uniform(-1.0, 4.0, 500)
        oracle = point_in_polygon(xs, ys, poly)
        got = mask.contains(xs, ys)
        # rasterization can only disagree within one cell of an edge
        assert (got == oracle).mean() > 0.97

    def test_self_intersecting_rejected(self):
        bowtie = [(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)]
        with pytest.raises(InvalidPolygon):
            build_roi_mask([bowtie], cell_size=0.5)

    def test_too_few_vertices(self):
        with pytest.raises(InvalidPolygon):
            build_roi_mask([[(0.0, 0.0), (1.0, 0.0)]], cell_size=0.5)

    def test_apply_roi(self):
        mask = build_roi_mask([UNIT_SQUARE], cell_size=0.25)
        assert apply_roi(np.zeros((0, 3)), mask).size == 0
        pts = np.array([[0.5, 0.5, 0.0], [3.0, 3.0, 0.0]])
        assert apply_roi(pts, mask).tolist() == [0]


class TestFusion:
    def test_disjoint_union_and_intersection(self):
        a = np.zeros((3, 4), dtype=bool)
        b = np.zeros((3, 4), dtype=bool)
        a[0, 0] = True
        b[1, 1] = True
        union = fuse_masks(a, b, FusionMode.UNION)
        assert union[0, 0] and union[1, 1]
        assert not fuse_masks(a, b, FusionMode.INTERSECTION).any()

    def test_single_channel_modes(self):
        a = np.zeros((2, 2), dtype=bool)
        b = np.ones((2, 2), dtype=bool)
        assert not fuse_masks(a, b, FusionMode.INTENSITY_ONLY).any()
        assert fuse_masks(a, b, FusionMode.RANGE_ONLY).all()

    def test_lattice_property(self, rng):
        for _ in range(20):
            a = rng.random((5, 7)) < 0.3
            b = rng.random((5, 7)) < 0.3
            u = fuse_masks(a, b, FusionMode.UNION).sum()
            i = fuse_masks(a, b, FusionMode.INTERSECTION).sum()
            assert u >= max(a.sum(), b.sum()) >= i

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            fuse_masks(np.zeros((2, 2), bool), np.zeros((3, 3), bool),
                       FusionMode.UNION)


class TestDenoise:
    def test_isolated_point_removed(self, rng):
        blob = rng.uniform(0.0, 1.0, (20, 3))
        pts = np.vstack([blob, [[50.0, 50.0, 0.0]]])
        kept = denoise(pts, k=4, d_max=1.0)
        assert 20 not in kept
        assert len(kept) == 20

    def test_dense_cluster_kept(self):
        g = np.arange(5) * 0.2
        pts = np.array([(x, y, 0.0) for x in g for y in g])
        assert len(denoise(pts, k=4, d_max=1.0)) == len(pts)

    def test_small_input_unchanged(self):
        pts = np.array([[0.0, 0.0, 0.0], [90.0, 90.0, 0.0]])
        assert denoise(pts, k=4, d_max=1.0).tolist() == [0, 1]


def brute_force_clusters(points, eps, min_pts):
    n = len(points)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if np.linalg.norm(points[i] - points[j]) <= eps:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    out = [sorted(g) for g in groups.values() if len(g) >= min_pts]
    out.sort(key=lambda g: g[0])
    return out


class TestCluster:
    def test_two_groups(self, rng):
        a = rng.uniform(0.0, 1.0, (15, 3))
        b = rng.uniform(10.0, 11.0, (15, 3))
        clusters = cluster(np.vstack([a, b]), eps=1.2, min_pts=10)
        assert len(clusters) == 2

    def test_chain_is_one_cluster(self):
        pts = np.column_stack([np.arange(30) * 0.6, np.zeros(30), np.zeros(30)])
        clusters = cluster(pts, eps=1.2, min_pts=10)
        assert len(clusters) == 1 and len(clusters[0]) == 30

    def test_matches_union_find_oracle(self, rng):
        for _ in range(10):
            pts = rng.uniform(0.0, 10.0, (int(rng.integers(5, 60)), 3))
            got = [c.tolist() for c in cluster(pts, eps=1.5, min_pts=3)]
            want = brute_force_clusters(pts, 1.5, 3)
            assert sorted(map(sorted, got)) == sorted(want)

    def test_empty(self):
        assert cluster(np.zeros((0, 3)), eps=1.0, min_pts=1) == []


class TestBoundingBox:
    def _rect(self, length, width, step=0.1):
        xs = np.arange(-length / 2, length / 2 + 1e-9, step)
        ys = np.arange(-width / 2, width / 2 + 1e-9, step)
        return np.array([(x, y, 0.5) for x in xs for y in ys])

    def test_axis_aligned_rectangle(self):
        det = bounding_box(self._rect(4.0, 2.0), frame_id=0)
        assert det.yaw == pytest.approx(0.0, abs=1e-6) or \
            det.yaw == pytest.approx(np.pi, abs=1e-6)
        assert det.length == pytest.approx(4.0, rel=0.05)
        assert det.width == pytest.approx(2.0, rel=0.05)

    def test_rotated_rectangle(self):
        pts = self._rect(4.0, 2.0)
        a = np.radians(30.0)
        rot = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
        pts[:, :2] = pts[:, :2] @ rot.T
        det = bounding_box(pts, frame_id=0)
        assert det.yaw == pytest.approx(a, abs=1e-6)

    def test_centroid_is_mean(self, rng):
        pts = rng.uniform(0.0, 5.0, (40, 3))
        det = bounding_box(pts, frame_id=3)
        assert np.allclose(det.centroid, pts.mean(axis=0), atol=1e-12)
        assert det.frame_id == 3


@pytest.fixture(scope="module")
def setup():
    cfg = default_sensor_config()
    static = Scene(ground=GroundPlane(), seed=3)
    frames, _ = simulate(static, 30, cfg)
    model = train_background_model(frames, cfg)
    return cfg, static, model


class TestDetectFrame:
    def test_background_only(self, setup):
        cfg, static, model = setup
        frame, _ = raycast(static, 0.0, cfg,
                           rng=np.random.default_rng(99))
        frame.frame_id = 40
        result = detect_frame(frame, model, None, cfg)
        assert result.detections == []

    def test_single_vehicle_centroid(self, setup):
        cfg, static, model = setup
        veh = Vehicle(length=1.0, width=0.6, height=1.5,
                      waypoints=[(0.0, 0.0, 10.0, 0.0), (1.0, 1.0, 10.0, 0.0)])
        scene = Scene(ground=GroundPlane(), vehicles=[veh], seed=3)
        frame, _ = raycast(scene, 0.0, cfg, rng=np.random.default_rng(5))
        frame.frame_id = 41
        result = detect_frame(frame, model, None, cfg)
        assert len(result.detections) == 1
        cx, cy, _ = result.detections[0].centroid
        assert np.hypot(cx - 0.0, cy - 10.0) < 0.5

    def test_two_vehicles(self, setup):
        cfg, static, model = setup
        vehicles = [
            Vehicle(length=4.5, width=1.8, height=1.5,
                    waypoints=[(0.0, x0, y0, 0.0), (1.0, x0, y0, 0.0)])
            for x0, y0 in [(-12.0, 10.0), (12.0, 10.0)]
        ]
        scene = Scene(ground=GroundPlane(), vehicles=vehicles, seed=3)
        frame, _ = raycast(scene, 0.0, cfg, rng=np.random.default_rng(6))
        frame.frame_id = 42
        result = detect_frame(frame, model, None, cfg)
        assert len(result.detections) == 2

    def test_timings_populated(self, setup):
        cfg, static, model = setup
        frame, _ = raycast(static, 0.0, cfg, rng=np.random.default_rng(7))
        frame.frame_id = 43
        timings = {}
        detect_frame(frame, model, None, cfg, timings=timings)
        assert set(timings) == {"mask", "fuse", "cluster"}


def test_pipeline_config_validation():
    with pytest.raises(ValueError):
        PipelineConfig(denoise_k=0)
    with pytest.raises(ValueError):
        PipelineConfig(cluster_eps=-1.0)
