"""Combined background model: DMD intensity vectors plus CFTA range thresholds."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cfta import ThresholdTable, build_threshold_table, range_foreground_mask
from .dmd import DMDConfig, intensity_foreground_mask, train_intensity_model
from .errors import ModelMismatch, TooFewFrames
from .frames import PolarFrame, SensorConfig

THREADS_ENV = "POLARBG_THREADS"


def worker_count() -> int:
    """Thread cap from POLARBG_THREADS (0 or unset = automatic)."""
    raw = os.environ.get(THREADS_ENV, "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return max(1, n)


@dataclass
class BackgroundModel:
    """Everything needed to classify a new frame as background/foreground."""

    sensor: SensorConfig
    sensor_hash: str
    background_vectors: np.ndarray          # beams x bins, intensity units
    eigenvalues: list[np.ndarray]           # per beam, complex
    thresholds: ThresholdTable
    frame_span: tuple[int, int]
    dmd_config: DMDConfig

    def check_sensor(self, cfg: SensorConfig):
        if cfg.config_hash() != self.sensor_hash:
            raise ModelMismatch("model was trained under a different sensor config")

    def intensity_mask(self, frame: PolarFrame) -> np.ndarray:
        return intensity_foreground_mask(
            frame.intensities, frame.ranges, self.background_vectors,
            self.dmd_config.intensity_threshold)

    def range_mask(self, frame: PolarFrame) -> np.ndarray:
        return range_foreground_mask(frame, self.thresholds)

    def to_dict(self) -> dict:
        return {
            "sensor": self.sensor.to_dict(),
            "sensor_hash": self.sensor_hash,
            "frame_span": list(self.frame_span),
            "dmd": {
                "svd_energy": self.dmd_config.svd_energy,
                "eigen_tol": self.dmd_config.eigen_tol,
                "intensity_threshold": self.dmd_config.intensity_threshold,
            },
            "background_vectors": [
                [round(float(v), 6) for v in row] for row in self.background_vectors
            ],
            "eigenvalues": [
                [[round(float(l.real), 9), round(float(l.imag), 9)] for l in lams]
                for lams in self.eigenvalues
            ],
            "thresholds": [
                [round(float(t), 6) for t in row] for row in self.thresholds.thresholds
            ],
            "provenance": ["".join(row) for row in self.thresholds.provenance],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BackgroundModel":
        sensor = SensorConfig.from_dict(d["sensor"])
        table = ThresholdTable(
            thresholds=np.array(d["thresholds"], dtype=float),
            provenance=np.array([list(row) for row in d["provenance"]], dtype="U1"),
        )
        eig = [np.array([complex(re, im) for re, im in lams]) for lams in d["eigenvalues"]]
        dmd_cfg = DMDConfig(**d["dmd"])
        return cls(
            sensor=sensor,
            sensor_hash=d["sensor_hash"],
            background_vectors=np.array(d["background_vectors"], dtype=float),
            eigenvalues=eig,
            thresholds=table,
            frame_span=tuple(d["frame_span"]),
            dmd_config=dmd_cfg,
        )


def train_background_model(frames, cfg: SensorConfig,
                           dmd_cfg: DMDConfig | None = None) -> BackgroundModel:
    """Train per-beam intensity backgrounds and per-unit range thresholds."""
    if len(frames) < 2:
        raise TooFewFrames("training needs at least two frames")
    dmd_cfg = dmd_cfg or DMDConfig()

    def fit(beam):
        return train_intensity_model(frames, beam, dmd_cfg)

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        models = list(pool.map(fit, range(cfg.beam_count)))

    vectors = np.vstack([m.background_vector for m in models])
    eigenvalues = [m.eigenvalues for m in models]
    table = build_threshold_table(frames, cfg)
    ids = [f.frame_id for f in frames]
    return BackgroundModel(
        sensor=cfg,
        sensor_hash=cfg.config_hash(),
        background_vectors=vectors,
        eigenvalues=eigenvalues,
        thresholds=table,
        frame_span=(min(ids), max(ids)),
        dmd_config=dmd_cfg,
    )
