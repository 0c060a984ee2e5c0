"""Coordinate transforms, azimuth hashing and spatial-temporal matrix assembly.

A LiDAR sweep is stored as a polar grid: one row per beam (fixed elevation),
one column per azimuth bin.  Each cell holds (range, intensity); non-returns
are the (0, 0) sentinel.  Per-beam spatial-temporal matrices stack one beam's
azimuth vector over consecutive frames.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInput, InvalidPoint, ShapeMismatch

RANGE = "range"
INTENSITY = "intensity"

CHANNELS = (RANGE, INTENSITY)


@dataclass(frozen=True)
class SensorConfig:
    """Static description of the scanning sensor.

    elevations are per-beam pitch angles in degrees, strictly ascending.
    azimuth_bins * azimuth_resolution must equal 360 degrees exactly.
    """

    beam_count: int
    elevations: tuple[float, ...]
    azimuth_bins: int = 1800
    azimuth_resolution: float = 0.2
    max_range: float = 200.0
    frame_rate: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "elevations", tuple(float(e) for e in self.elevations))
        if self.beam_count <= 0:
            raise DegenerateInput("beam_count must be positive")
        if len(self.elevations) != self.beam_count:
            raise DegenerateInput("elevations length must equal beam_count")
        if any(b >= a for a, b in zip(self.elevations[1:], self.elevations)):
            raise DegenerateInput("elevations must be strictly ascending")
        if self.azimuth_bins <= 0:
            raise DegenerateInput("azimuth_bins must be positive")
        if abs(self.azimuth_bins * self.azimuth_resolution - 360.0) > 1e-9:
            raise DegenerateInput("azimuth_bins * azimuth_resolution must be 360")
        if self.max_range <= 0:
            raise DegenerateInput("max_range must be positive")
        if self.frame_rate <= 0:
            raise DegenerateInput("frame_rate must be positive")

    def to_dict(self) -> dict:
        return {
            "beam_count": self.beam_count,
            "elevations": list(self.elevations),
            "azimuth_bins": self.azimuth_bins,
            "azimuth_resolution": self.azimuth_resolution,
            "max_range": self.max_range,
            "frame_rate": self.frame_rate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SensorConfig":
        return cls(
            beam_count=int(d["beam_count"]),
            elevations=tuple(d["elevations"]),
            azimuth_bins=int(d.get("azimuth_bins", 1800)),
            azimuth_resolution=float(d.get("azimuth_resolution", 0.2)),
            max_range=float(d.get("max_range", 200.0)),
            frame_rate=float(d.get("frame_rate", 10.0)),
        )

    def config_hash(self) -> str:
        """Stable hash used to bind trained models to one sensor."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def bin_center_azimuth(self, bin_index: int | np.ndarray):
        """Center azimuth in [0, 360) of a bin under the +1 hashing offset.

        Bin b collects azimuths in [(b-1)*res, b*res); bin 0 wraps to the
        [360-res, 360) sector.
        """
        lo = (np.asarray(bin_index) - 1.0) * self.azimuth_resolution
        return np.mod(lo + 0.5 * self.azimuth_resolution, 360.0)


@dataclass(frozen=True)
class PointRecord:
    """One laser return."""

    beam: int
    azimuth: float
    range: float
    intensity: float


@dataclass
class PolarFrame:
    """One full sweep on the beam x azimuth-bin grid."""

    frame_id: int
    ranges: np.ndarray
    intensities: np.ndarray

    def __post_init__(self):
        if self.ranges.shape != self.intensities.shape:
            raise ShapeMismatch("range and intensity grids differ in shape")

    @property
    def shape(self) -> tuple[int, int]:
        return self.ranges.shape

    def timestamp(self, cfg: SensorConfig) -> float:
        return self.frame_id / cfg.frame_rate

    @classmethod
    def empty(cls, frame_id: int, cfg: SensorConfig) -> "PolarFrame":
        shape = (cfg.beam_count, cfg.azimuth_bins)
        return cls(frame_id, np.zeros(shape), np.zeros(shape))


@dataclass
class STMatrix:
    """Per-beam spatial-temporal matrix: azimuth bins x frames, one channel."""

    beam: int
    channel: str
    data: np.ndarray
    frame_ids: list[int] = field(default_factory=list)


def spherical_to_cartesian(r, omega, alpha):
    """Range + pitch + yaw (degrees) to Cartesian (x, y, z)."""
    om = np.radians(omega)
    al = np.radians(alpha)
    cos_om = np.cos(om)
    return r * cos_om * np.cos(al), r * cos_om * np.sin(al), r * np.sin(om)


def cartesian_to_spherical(x, y, z):
    """Inverse transform; alpha normalized to [0, 360), omega in [-90, 90].

    At the poles (x = y = 0) alpha is unconstrained and reported as 0.
    """
    r = float(np.sqrt(x * x + y * y + z * z))
    if r == 0.0:
        raise DegenerateInput("cannot convert the zero vector to spherical")
    omega = float(np.degrees(np.arcsin(np.clip(z / r, -1.0, 1.0))))
    if x == 0.0 and y == 0.0:
        alpha = 0.0
    else:
        alpha = float(np.degrees(np.arctan2(y, x))) % 360.0
    return r, omega, alpha


def normalize_azimuth(alpha):
    """Map any azimuth (typically [-180, 180)) into [0, 360)."""
    return np.mod(alpha, 360.0)


def azimuth_bin(alpha, cfg: SensorConfig):
    """Hash an azimuth in [0, 360) to its grid index.

    index = mod(floor(alpha / resolution) + 1, azimuth_bins); the +1 offset
    means bin 0 holds the last resolution sector before 360 degrees.
    """
    idx = np.floor(np.asarray(alpha) / cfg.azimuth_resolution).astype(np.int64) + 1
    out = np.mod(idx, cfg.azimuth_bins)
    if np.isscalar(alpha):
        return int(out)
    return out


def assemble_frame(points, frame_id: int, cfg: SensorConfig) -> PolarFrame:
    """Place returns on the polar grid; colliding cells keep the smaller range.

    Equal-range collisions fall back to smaller azimuth then higher
    intensity, which makes assembly independent of input order.
    """
    frame = PolarFrame.empty(frame_id, cfg)
    if not points:
        return frame

    beams = np.array([p.beam for p in points])
    azimuths = np.array([p.azimuth for p in points], dtype=float)
    ranges = np.array([p.range for p in points], dtype=float)
    intens = np.array([p.intensity for p in points], dtype=float)

    for i in np.flatnonzero((beams < 0) | (beams >= cfg.beam_count)):
        raise InvalidPoint(int(i), f"beam {beams[i]} outside [0, {cfg.beam_count})")
    for i in np.flatnonzero((azimuths < 0.0) | (azimuths >= 360.0)):
        raise InvalidPoint(int(i), f"azimuth {azimuths[i]} outside [0, 360)")
    for i in np.flatnonzero((ranges < 0.0) | (ranges > cfg.max_range)):
        raise InvalidPoint(int(i), f"range {ranges[i]} outside [0, {cfg.max_range}]")
    for i in np.flatnonzero((intens < 0.0) | (intens > 255.0)):
        raise InvalidPoint(int(i), f"intensity {intens[i]} outside [0, 255]")

    returned = ranges > 0.0
    beams, ranges, intens = beams[returned], ranges[returned], intens[returned]
    azimuths = azimuths[returned]
    bins = azimuth_bin(azimuths, cfg)

    # Sort by (beam, bin, range asc, azimuth, intensity desc) and keep the
    # first occurrence per cell: the smallest-range point wins every
    # collision and the remaining keys make ties order-independent.
    order = np.lexsort((-intens, azimuths, ranges, bins, beams))
    beams, bins = beams[order], bins[order]
    ranges, intens = ranges[order], intens[order]
    keep = np.ones(len(beams), dtype=bool)
    keep[1:] = (beams[1:] != beams[:-1]) | (bins[1:] != bins[:-1])

    frame.ranges[beams[keep], bins[keep]] = ranges[keep]
    frame.intensities[beams[keep], bins[keep]] = intens[keep]
    return frame


def build_st_matrices(frames, beam: int, channel: str) -> STMatrix:
    """Stack one beam's azimuth vectors into an azimuth x time matrix.

    Columns are ordered by increasing frame id regardless of input order.
    """
    if not frames:
        raise ShapeMismatch("need at least one frame")
    if channel not in CHANNELS:
        raise ShapeMismatch(f"unknown channel {channel!r}")
    shape = frames[0].shape
    for f in frames:
        if f.shape != shape:
            raise ShapeMismatch("frames differ in grid shape")
    ordered = sorted(frames, key=lambda f: f.frame_id)
    attr = "ranges" if channel == RANGE else "intensities"
    data = np.column_stack([getattr(f, attr)[beam] for f in ordered])
    return STMatrix(beam=beam, channel=channel, data=data,
                    frame_ids=[f.frame_id for f in ordered])
