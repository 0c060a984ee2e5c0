"""Per-frame detection: mask fusion, ROI geofence, denoising, clustering, boxes."""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import InvalidPolygon, ShapeMismatch
from .frames import PolarFrame, SensorConfig, spherical_to_cartesian
from .model import BackgroundModel


class FusionMode(str, Enum):
    UNION = "union"
    INTERSECTION = "intersection"
    RANGE_ONLY = "range"
    INTENSITY_ONLY = "intensity"


@dataclass
class PipelineConfig:
    fusion_mode: FusionMode = FusionMode.UNION
    denoise_k: int = 4
    denoise_dmax: float = 1.0
    cluster_eps: float = 1.2
    min_cluster_points: int = 10

    def __post_init__(self):
        self.fusion_mode = FusionMode(self.fusion_mode)
        if self.denoise_k < 1 or self.denoise_dmax <= 0:
            raise ValueError("denoise parameters must be positive")
        if self.cluster_eps <= 0 or self.min_cluster_points < 1:
            raise ValueError("cluster parameters must be positive")


@dataclass
class RoiMask:
    """Rasterized drivable-area mask on a uniform x-y grid."""

    cell_size: float
    origin: tuple[float, float]
    grid: np.ndarray
    source_polygons: list[np.ndarray]

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        ix = np.floor((np.asarray(x) - self.origin[0]) / self.cell_size).astype(int)
        iy = np.floor((np.asarray(y) - self.origin[1]) / self.cell_size).astype(int)
        ok = (ix >= 0) & (iy >= 0) & (ix < self.grid.shape[1]) & (iy < self.grid.shape[0])
        out = np.zeros_like(ok)
        out[ok] = self.grid[iy[ok], ix[ok]]
        return out


@dataclass
class ForegroundPoint:
    x: float
    y: float
    z: float
    beam: int
    bin: int
    intensity: float
    flagged_by: frozenset


@dataclass
class Detection:
    frame_id: int
    centroid: tuple[float, float, float]
    center: tuple[float, float]
    length: float
    width: float
    yaw: float
    z_range: tuple[float, float]
    point_count: int


@dataclass
class FrameResult:
    frame_id: int
    detections: list[Detection]
    points: list[ForegroundPoint]
    fused_mask: np.ndarray


def point_in_polygon(x, y, polygon: np.ndarray) -> np.ndarray:
    """Even-odd (crossing number) test, vectorized over query points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    inside = np.zeros(x.shape, dtype=bool)
    px, py = polygon[:, 0], polygon[:, 1]
    n = len(polygon)
    for i in range(n):
        x1, y1 = px[i], py[i]
        x2, y2 = px[(i + 1) % n], py[(i + 1) % n]
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < x_cross)
    return inside


def _segments_intersect(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        return np.sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

    o1, o2 = orient(p1, p2, p3), orient(p1, p2, p4)
    o3, o4 = orient(p3, p4, p1), orient(p3, p4, p2)
    return o1 != o2 and o3 != o4


def _check_simple(polygon: np.ndarray):
    n = len(polygon)
    if n < 3:
        raise InvalidPolygon("polygon needs at least 3 vertices")
    edges = [(polygon[i], polygon[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue  # adjacent edges share a vertex
            if _segments_intersect(*edges[i], *edges[j]):
                raise InvalidPolygon("polygon is self-intersecting")


def build_roi_mask(polygons, cell_size: float) -> RoiMask:
    """Rasterize drivable-area polygons: a cell is true iff its center is inside."""
    polys = [np.asarray(p, dtype=float) for p in polygons]
    if not polys:
        raise InvalidPolygon("need at least one polygon")
    for p in polys:
        _check_simple(p)
    allpts = np.vstack(polys)
    x0 = np.floor(allpts[:, 0].min() / cell_size) * cell_size
    y0 = np.floor(allpts[:, 1].min() / cell_size) * cell_size
    nx = int(np.ceil((allpts[:, 0].max() - x0) / cell_size)) + 1
    ny = int(np.ceil((allpts[:, 1].max() - y0) / cell_size)) + 1
    cx = x0 + (np.arange(nx) + 0.5) * cell_size
    cy = y0 + (np.arange(ny) + 0.5) * cell_size
    gx, gy = np.meshgrid(cx, cy)
    grid = np.zeros((ny, nx), dtype=bool)
    for p in polys:
        grid |= point_in_polygon(gx, gy, p)
    return RoiMask(cell_size=cell_size, origin=(x0, y0), grid=grid,
                   source_polygons=polys)


def apply_roi(points: np.ndarray, mask: RoiMask) -> np.ndarray:
    """Indices of points whose (x, y) cell is drivable."""
    if len(points) == 0:
        return np.zeros(0, dtype=int)
    keep = mask.contains(points[:, 0], points[:, 1])
    return np.flatnonzero(keep)


def fuse_masks(intensity_mask: np.ndarray, range_mask: np.ndarray,
               mode: FusionMode) -> np.ndarray:
    if intensity_mask.shape != range_mask.shape:
        raise ShapeMismatch("masks differ in shape")
    mode = FusionMode(mode)
    if mode == FusionMode.UNION:
        return intensity_mask | range_mask
    if mode == FusionMode.INTERSECTION:
        return intensity_mask & range_mask
    if mode == FusionMode.RANGE_ONLY:
        return range_mask.copy()
    return intensity_mask.copy()


def denoise(points: np.ndarray, k: int, d_max: float) -> np.ndarray:
    """Indices of points whose k-th nearest neighbor is within d_max.

    With k or fewer points the k-distance is undefined and all are kept.
    """
    n = len(points)
    if n <= k:
        return np.arange(n)
    tree = cKDTree(points)
    dist, _ = tree.query(points, k=k + 1)
    return np.flatnonzero(dist[:, -1] <= d_max)


def cluster(points: np.ndarray, eps: float, min_pts: int) -> list[np.ndarray]:
    """Connected components of the eps-neighborhood graph, smallest-index order.

    Components with fewer than min_pts members are discarded.
    """
    n = len(points)
    if n == 0:
        return []
    tree = cKDTree(points)
    pairs = tree.query_pairs(eps, output_type="ndarray")
    if len(pairs):
        graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])),
                           shape=(n, n))
    else:
        graph = coo_matrix((n, n))
    _, labels = connected_components(graph, directed=False)
    clusters = []
    for lab in np.unique(labels):
        idx = np.flatnonzero(labels == lab)
        if len(idx) >= min_pts:
            clusters.append(idx)
    clusters.sort(key=lambda idx: idx[0])
    return clusters


def bounding_box(points: np.ndarray, frame_id: int) -> Detection:
    """PCA-oriented box around a cluster; width floored at 0.1 m."""
    xy = points[:, :2]
    centroid = points.mean(axis=0)
    centered = xy - xy.mean(axis=0)
    cov = np.cov(centered.T) if len(points) > 1 else np.eye(2)
    evals, evecs = np.linalg.eigh(np.atleast_2d(cov))
    major = evecs[:, np.argmax(evals)]
    yaw = float(np.arctan2(major[1], major[0])) % np.pi
    c, s = np.cos(-yaw), np.sin(-yaw)
    rx = c * centered[:, 0] - s * centered[:, 1]
    ry = s * centered[:, 0] + c * centered[:, 1]
    length = float(rx.max() - rx.min())
    width = float(ry.max() - ry.min())
    if width > length:
        length, width = width, length
        yaw = (yaw + np.pi / 2.0) % np.pi
    width = max(width, 0.1)
    length = max(length, 0.1)
    mid = np.array([(rx.max() + rx.min()) / 2.0, (ry.max() + ry.min()) / 2.0])
    c2, s2 = np.cos(yaw), np.sin(yaw)
    center = (float(xy[:, 0].mean() + c2 * mid[0] - s2 * mid[1]),
              float(xy[:, 1].mean() + s2 * mid[0] + c2 * mid[1]))
    return Detection(frame_id=frame_id,
                     centroid=tuple(float(v) for v in centroid),
                     center=center, length=length, width=width, yaw=yaw,
                     z_range=(float(points[:, 2].min()), float(points[:, 2].max())),
                     point_count=len(points))


FLAG_INTENSITY = "Intensity"
FLAG_RANGE = "Range"


def detect_frame(frame: PolarFrame, model: BackgroundModel, roi: RoiMask | None,
                 cfg: SensorConfig, pcfg: PipelineConfig | None = None,
                 timings: dict | None = None) -> FrameResult:
    """Full per-frame detection chain; pure function of its inputs."""
    pcfg = pcfg or PipelineConfig()
    model.check_sensor(cfg)

    def tick():
        return time.perf_counter()

    t0 = tick()
    imask = model.intensity_mask(frame)
    rmask = model.range_mask(frame)
    t1 = tick()
    fused = fuse_masks(imask, rmask, pcfg.fusion_mode)
    beams, bins = np.nonzero(fused)
    ranges = frame.ranges[beams, bins]
    intens = frame.intensities[beams, bins]
    omega = np.asarray(cfg.elevations)[beams]
    alpha = cfg.bin_center_azimuth(bins)
    x, y, z = spherical_to_cartesian(ranges, omega, alpha)
    pts = np.column_stack([x, y, z])
    t2 = tick()

    if roi is not None and len(pts):
        keep = apply_roi(pts, roi)
    else:
        keep = np.arange(len(pts))
    pts_roi = pts[keep]
    keep2 = keep[denoise(pts_roi, pcfg.denoise_k, pcfg.denoise_dmax)]
    pts_clean = pts[keep2]
    clusters = cluster(pts_clean, pcfg.cluster_eps, pcfg.min_cluster_points)
    detections = [bounding_box(pts_clean[idx], frame.frame_id) for idx in clusters]
    t3 = tick()

    points = []
    for j in keep2:
        flags = set()
        if imask[beams[j], bins[j]]:
            flags.add(FLAG_INTENSITY)
        if rmask[beams[j], bins[j]]:
            flags.add(FLAG_RANGE)
        points.append(ForegroundPoint(
            x=float(pts[j, 0]), y=float(pts[j, 1]), z=float(pts[j, 2]),
            beam=int(beams[j]), bin=int(bins[j]),
            intensity=float(intens[j]), flagged_by=frozenset(flags)))

    if timings is not None:
        timings.setdefault("mask", []).append(t1 - t0)
        timings.setdefault("fuse", []).append(t2 - t1)
        timings.setdefault("cluster", []).append(t3 - t2)

    return FrameResult(frame_id=frame.frame_id, detections=detections,
                       points=points, fused_mask=fused)
