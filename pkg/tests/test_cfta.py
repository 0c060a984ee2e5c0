"""Coarse-fine triangle thresholding of range samples."""

import numpy as np
import pytest

from polarbg.cfta import (FINE_BINS, INSUFFICIENT, NON_RETURN_MAJORITY,
                          TRIANGLE, RangeHistogram, build_threshold_table,
                          cfta_unit, coarse_step, collect_unit_ranges,
                          fine_histogram, range_foreground_mask,
                          triangle_threshold)
from polarbg.errors import EmptyHistogram, EmptySamples, ShapeMismatch
from polarbg.frames import PolarFrame


class TestCollect:
    def test_all_sentinels(self, small_sensor):
        frames = [PolarFrame.empty(k, small_sensor) for k in range(5)]
        samples, nrc = collect_unit_ranges(frames, 0, 0)
        assert samples.size == 0 and nrc == 5

    def test_counts_partition(self, small_sensor):
        frames = [PolarFrame.empty(k, small_sensor) for k in range(6)]
        for f in frames[:4]:
            f.ranges[1, 2] = 15.0
        samples, nrc = collect_unit_ranges(frames, 1, 2)
        assert samples.size + nrc == 6
        assert samples.size == 4


class TestCoarseStep:
    def test_single_bin_all_retained(self, rng):
        samples = rng.uniform(19.0, 19.5, 50)
        assert coarse_step(samples).size == samples.size

    def test_glitches_removed(self, rng):
        samples = np.concatenate([rng.normal(19.0, 0.05, 500),
                                  np.full(3, 80.0)])
        kept = coarse_step(samples)
        assert kept.max() < 30.0
        assert kept.size == 500

    def test_single_sample(self):
        assert coarse_step(np.array([42.0])).tolist() == [42.0]

    def test_empty_raises(self):
        with pytest.raises(EmptySamples):
            coarse_step(np.array([]))


class TestFineHistogram:
    def test_single_sample(self):
        hist = fine_histogram(np.array([10.0]))
        assert len(hist.counts) == FINE_BINS
        assert hist.bin_edges[0] == 0.0 and hist.bin_edges[-1] == 10.0
        assert hist.counts[-1] == 1 and hist.counts.sum() == 1

    def test_count_conservation(self, rng):
        for _ in range(20):
            samples = rng.uniform(0.5, 100.0, int(rng.integers(1, 500)))
            assert fine_histogram(samples).counts.sum() == samples.size


def brute_force_triangle(hist):
    """Exhaustive point-to-line distance argmax, largest index on ties.

    The perpendicular distance of (i, c_i) to the line through (0, 0) and
    (peak, h) is |h*i - peak*c_i| / hypot(h, peak); the denominator is
    constant so the numerator alone decides the argmax.
    """
    counts = hist.counts.astype(float)
    peak = int(np.argmax(counts))
    h = counts[peak]
    best, best_d = 0, -1.0
    for i in range(peak + 1):
        d = abs(h * i - peak * counts[i])
        if d >= best_d:
            best, best_d = i, d
    return float(hist.bin_edges[best])


class TestTriangleThreshold:
    def test_reference_histogram(self):
        counts = np.array([0, 0, 0, 0, 0, 100, 0, 0, 0, 700])
        edges = np.arange(11) * 2.0
        assert triangle_threshold(RangeHistogram(edges, counts)) == 16.0

    def test_unimodal_thresholds_below_the_peak(self):
        # with a single spike the most distant point is the empty bin right
        # before the peak, so everything nearer than the spike is foreground
        counts = np.zeros(10)
        counts[6] = 50
        edges = np.arange(11) * 1.0
        assert triangle_threshold(RangeHistogram(edges, counts)) == 5.0

    def test_spike_at_bin_zero(self):
        counts = np.zeros(10)
        counts[0] = 50
        edges = np.arange(11) * 1.0
        assert triangle_threshold(RangeHistogram(edges, counts)) == 0.0

    def test_empty_raises(self):
        with pytest.raises(EmptyHistogram):
            triangle_threshold(RangeHistogram(np.arange(6.0), np.zeros(5)))

    def test_matches_exhaustive_search(self, rng):
        for _ in range(300):
            n = int(rng.integers(3, 60))
            counts = rng.integers(0, 100, n)
            if not counts.any():
                counts[rng.integers(0, n)] = 5
            edges = np.linspace(0.0, float(rng.uniform(5.0, 100.0)), n + 1)
            hist = RangeHistogram(edges, counts)
            assert triangle_threshold(hist) == brute_force_triangle(hist)


class TestUnitRules:
    def test_insufficient_samples(self, small_sensor, rng):
        t, p = cfta_unit(rng.uniform(10.0, 12.0, 10), 0, small_sensor)
        assert (t, p) == (small_sensor.max_range, INSUFFICIENT)

    def test_non_return_majority(self, small_sensor, rng):
        t, p = cfta_unit(rng.uniform(10.0, 12.0, 40), 41, small_sensor)
        assert (t, p) == (small_sensor.max_range, NON_RETURN_MAJORITY)

    def test_triangle_path(self, small_sensor, rng):
        samples = np.concatenate([rng.normal(19.0, 0.05, 700),
                                  rng.normal(15.0, 0.3, 100)])
        t, p = cfta_unit(samples, 0, small_sensor)
        assert p == TRIANGLE
        assert 15.0 < t < 19.0


class TestForegroundMask:
    def _table(self, small_sensor, threshold):
        from polarbg.cfta import ThresholdTable
        shape = (small_sensor.beam_count, small_sensor.azimuth_bins)
        return ThresholdTable(thresholds=np.full(shape, threshold),
                              provenance=np.full(shape, TRIANGLE, dtype="U1"))

    def test_boundary_is_background(self, small_sensor):
        frame = PolarFrame.empty(0, small_sensor)
        frame.ranges[0, 0] = 16.0
        mask = range_foreground_mask(frame, self._table(small_sensor, 16.0))
        assert not mask[0, 0]

    def test_nearer_return_is_foreground(self, small_sensor):
        frame = PolarFrame.empty(0, small_sensor)
        frame.ranges[0, 0] = 15.0
        mask = range_foreground_mask(frame, self._table(small_sensor, 16.0))
        assert mask[0, 0]
        assert mask.sum() == 1

    def test_sentinel_is_background(self, small_sensor):
        frame = PolarFrame.empty(0, small_sensor)
        mask = range_foreground_mask(frame, self._table(small_sensor, 16.0))
        assert not mask.any()

    def test_shape_mismatch(self, small_sensor):
        from polarbg.cfta import ThresholdTable
        frame = PolarFrame.empty(0, small_sensor)
        table = ThresholdTable(thresholds=np.ones((2, 2)),
                               provenance=np.full((2, 2), "T", dtype="U1"))
        with pytest.raises(ShapeMismatch):
            range_foreground_mask(frame, table)


def test_threshold_table_over_grid(small_sensor, rng):
    frames = [PolarFrame.empty(k, small_sensor) for k in range(40)]
    for f in frames:
        f.ranges[0, :] = rng.normal(19.0, 0.05, small_sensor.azimuth_bins)
        f.ranges[1, :5] = 12.0  # returned in every frame but nowhere else
    table = build_threshold_table(frames, small_sensor)
    assert table.thresholds.shape == (small_sensor.beam_count,
                                      small_sensor.azimuth_bins)
    assert set(np.unique(table.provenance)) <= {"T", "N", "I"}
    # beam 0 always returns: triangle everywhere
    assert np.all(table.provenance[0] == TRIANGLE)
    # beam 2 never returns: non-return majority
    assert np.all(table.provenance[2] == NON_RETURN_MAJORITY)
