"""Coarse-fine triangle thresholding of per-unit range samples.

Each elevation-azimuth unit accumulates its observed ranges over many
frames.  A coarse histogram prunes far outliers, a fine histogram re-bins
the survivors, and the triangle rule picks the bin that sits furthest from
the line joining the empty near-range end to the dominant background peak.
Ranges below the learned threshold are foreground.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyHistogram, EmptySamples, ShapeMismatch
from .frames import PolarFrame, SensorConfig

COARSE_BINS = 200
FINE_BINS = 100
MIN_SAMPLES = 30

TRIANGLE = "T"
NON_RETURN_MAJORITY = "N"
INSUFFICIENT = "I"


@dataclass
class RangeHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        if len(self.bin_edges) != len(self.counts) + 1:
            raise ShapeMismatch("edges must be one longer than counts")

    @property
    def bin_size(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])


@dataclass
class ThresholdTable:
    """Per-unit range thresholds plus how each one was obtained."""

    thresholds: np.ndarray
    provenance: np.ndarray  # single-letter codes, same shape


def collect_unit_ranges(frames, beam: int, bin_index: int):
    """Positive ranges seen at one unit across frames, plus the non-return count."""
    values = np.array([f.ranges[beam, bin_index] for f in frames], dtype=float)
    samples = values[values > 0.0]
    return samples, int(values.size - samples.size)


def coarse_step(samples: np.ndarray, max_range: float = 200.0) -> np.ndarray:
    """Drop samples beyond the background peak plus two peak-bin deviations.

    The coarse histogram is 200 uniform bins over [0, max_range]; sigma is
    the standard deviation of the samples inside the peak bin.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise EmptySamples("coarse step needs samples")
    counts, edges = np.histogram(samples, bins=COARSE_BINS, range=(0.0, max_range))
    peak = int(np.argmax(counts))
    lo, hi = edges[peak], edges[peak + 1]
    in_peak = samples[(samples >= lo) & ((samples < hi) | (peak == COARSE_BINS - 1))]
    sigma = float(in_peak.std()) if in_peak.size else 0.0
    return samples[samples <= hi + 2.0 * sigma]


def fine_histogram(samples: np.ndarray) -> RangeHistogram:
    """100 uniform bins over [0, max(samples)]; the max falls in the last bin."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise EmptySamples("fine histogram needs samples")
    r_max = float(samples.max())
    counts, edges = np.histogram(samples, bins=FINE_BINS, range=(0.0, r_max))
    return RangeHistogram(bin_edges=edges, counts=counts)


def triangle_threshold(hist: RangeHistogram) -> float:
    """Bin lower edge maximizing distance to the (0,0)-(peak,peak count) line.

    Only bins up to the peak are considered; ties break toward the larger
    index (the background side).
    """
    counts = np.asarray(hist.counts, dtype=float)
    if not np.any(counts):
        raise EmptyHistogram("histogram has no counts")
    peak = int(np.argmax(counts))
    h = counts[peak]
    idx = np.arange(peak + 1)
    # Perpendicular distance of (i, c_i) to the anchor line, up to a common
    # positive factor.
    d = np.abs(h * idx - peak * counts[: peak + 1])
    best = peak - int(np.argmax(d[::-1]))
    return float(hist.bin_edges[best])


def cfta_unit(samples, non_return_count: int, cfg: SensorConfig):
    """Threshold one unit; returns (threshold_m, provenance code)."""
    samples = np.asarray(samples, dtype=float)
    if non_return_count > samples.size:
        return cfg.max_range, NON_RETURN_MAJORITY
    if samples.size < MIN_SAMPLES:
        return cfg.max_range, INSUFFICIENT
    filtered = coarse_step(samples, cfg.max_range)
    hist = fine_histogram(filtered)
    return triangle_threshold(hist), TRIANGLE


def build_threshold_table(frames, cfg: SensorConfig) -> ThresholdTable:
    """Run the per-unit threshold learner over the whole beam x bin grid."""
    stack = np.stack([f.ranges for f in frames])  # m x beams x bins
    beams, bins = stack.shape[1], stack.shape[2]
    thresholds = np.empty((beams, bins))
    provenance = np.empty((beams, bins), dtype="U1")
    for b in range(beams):
        plane = stack[:, b, :]
        for a in range(bins):
            col = plane[:, a]
            samples = col[col > 0.0]
            t, p = cfta_unit(samples, col.size - samples.size, cfg)
            thresholds[b, a] = t
            provenance[b, a] = p
    return ThresholdTable(thresholds=thresholds, provenance=provenance)


def range_foreground_mask(frame: PolarFrame, table: ThresholdTable) -> np.ndarray:
    """Cells with a return strictly nearer than the unit threshold."""
    if frame.ranges.shape != table.thresholds.shape:
        raise ShapeMismatch("frame and threshold table differ in shape")
    return (frame.ranges > 0.0) & (frame.ranges < table.thresholds)
