"""Point-level classification metrics, movement-count metrics, timing."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, ShapeMismatch
from .pipeline import PipelineConfig, detect_frame
from .sim import LABEL_BACKGROUND
from .tracking import Tracker

DEFAULT_BANDS = ((0.0, 30.0), (30.0, 100.0))


@dataclass
class BandMetrics:
    band: tuple[float, float]
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self):
        n = self.tp + self.fp
        return self.tp / n if n else None

    @property
    def recall(self):
        n = self.tp + self.fn
        return self.tp / n if n else None

    @property
    def f1(self):
        p, r = self.precision, self.recall
        if p is None or r is None or p + r == 0:
            return None
        return 2.0 * p * r / (p + r)

    def to_dict(self):
        return {"band": list(self.band), "tp": self.tp, "fp": self.fp,
                "fn": self.fn, "precision": self.precision,
                "recall": self.recall, "f1": self.f1}


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall."""
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def point_metrics(predicted_masks, label_grids, range_grids,
                  bands=DEFAULT_BANDS) -> list[BandMetrics]:
    """Cell-level TP/FP/FN against vehicle labels, split by range band.

    predicted_masks / label_grids / range_grids are parallel sequences of
    aligned per-frame grids.  A cell counts as TP when predicted and
    vehicle-labeled, FP when predicted but background, FN when missed
    vehicle; banding uses the cell's measured range.
    """
    out = [BandMetrics(band=tuple(b)) for b in bands]
    for pred, labels, ranges in zip(predicted_masks, label_grids, range_grids):
        pred = np.asarray(pred, dtype=bool)
        if pred.shape != labels.shape or pred.shape != ranges.shape:
            raise ShapeMismatch("prediction, label and range grids must align")
        vehicle = labels > LABEL_BACKGROUND
        background = labels == LABEL_BACKGROUND
        for bm in out:
            lo, hi = bm.band
            in_band = (ranges >= lo) & (ranges < hi)
            bm.tp += int(np.count_nonzero(pred & vehicle & in_band))
            bm.fp += int(np.count_nonzero(pred & background & in_band))
            bm.fn += int(np.count_nonzero(~pred & vehicle & in_band))
    return out


@dataclass
class MovementMetrics:
    predicted: int
    truth: int

    @property
    def error_rate(self):
        if self.truth == 0:
            return None
        return abs(self.predicted - self.truth) / self.truth

    @property
    def accuracy(self):
        e = self.error_rate
        return None if e is None else 1.0 - e


def count_metrics(predicted: dict, truth: dict) -> dict:
    """Per-movement and total counting error rate / accuracy.

    Movements with zero truth count report undefined (None) metrics rather
    than a misleading zero.
    """
    keys = sorted(set(predicted) | set(truth), key=str)
    per_movement = {k: MovementMetrics(predicted=int(predicted.get(k, 0)),
                                       truth=int(truth.get(k, 0)))
                    for k in keys}
    total = MovementMetrics(predicted=sum(m.predicted for m in per_movement.values()),
                            truth=sum(m.truth for m in per_movement.values()))
    return {"per_movement": per_movement, "total": total}


def _pct(value):
    return "undefined" if value is None else f"{100.0 * value:.2f}%"


def format_point_table(bands: list[BandMetrics]) -> str:
    """Aligned text table of the banded precision/recall/F1 results."""
    header = ["Metric"] + [f"[{int(b.band[0])}, {int(b.band[1])}) m" for b in bands]
    rows = [
        ["Precision"] + [_pct(b.precision) for b in bands],
        ["Recall"] + [_pct(b.recall) for b in bands],
        ["F1 Score"] + [_pct(b.f1) for b in bands],
        ["TP / FP / FN"] + [f"{b.tp} / {b.fp} / {b.fn}" for b in bands],
    ]
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths))
             for r in [header] + rows]
    return "\n".join(lines) + "\n"


def format_count_table(metrics: dict) -> str:
    """Aligned text table of per-movement and total counting accuracy."""
    def key_name(k):
        return "->".join(k) if isinstance(k, tuple) else str(k)

    names = ["Total"] + [key_name(k) for k in metrics["per_movement"]]
    entries = [metrics["total"]] + list(metrics["per_movement"].values())
    rows = [
        ["Predicted"] + [str(m.predicted) for m in entries],
        ["Truth"] + [str(m.truth) for m in entries],
        ["Error Rate"] + [_pct(m.error_rate) for m in entries],
        ["Accuracy"] + [_pct(m.accuracy) for m in entries],
    ]
    header = ["Movement"] + names
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths))
             for r in [header] + rows]
    return "\n".join(lines) + "\n"


def timing_report(frames, model, roi, cfg, pcfg: PipelineConfig | None = None,
                  tracker: Tracker | None = None) -> dict:
    """Wall-clock per-stage statistics over at least 10 frames."""
    if len(frames) < 10:
        raise DegenerateInput("timing needs at least 10 frames")
    pcfg = pcfg or PipelineConfig()
    tracker = tracker or Tracker()
    timings: dict[str, list[float]] = {}
    total = []
    for frame in frames:
        t0 = time.perf_counter()
        result = detect_frame(frame, model, roi, cfg, pcfg, timings=timings)
        t1 = time.perf_counter()
        tracker.step(result.detections, frame.frame_id)
        t2 = time.perf_counter()
        timings.setdefault("track", []).append(t2 - t1)
        total.append(t2 - t0)

    def stats(values):
        arr = np.asarray(values) * 1000.0
        return {"mean_ms": float(arr.mean()), "max_ms": float(arr.max())}

    report = {"frames": len(frames),
              "stages": {name: stats(vals) for name, vals in timings.items()},
              "end_to_end": stats(total)}
    return report
