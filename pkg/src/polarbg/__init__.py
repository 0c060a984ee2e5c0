"""Roadside LiDAR background subtraction, vehicle detection and tracking.

Range and intensity sweeps are stored on a fixed beam x azimuth-bin grid.
Dynamic mode decomposition extracts each beam's static intensity
background; coarse-fine triangle thresholding learns per-unit range
thresholds.  Foreground cells are fused, clustered into oriented boxes and
tracked with a constant-velocity Kalman filter.
"""

from .cfta import (RangeHistogram, ThresholdTable, build_threshold_table,
                   cfta_unit, range_foreground_mask, triangle_threshold)
from .dmd import (DMDConfig, DMDModel, intensity_foreground_mask,
                  train_intensity_model)
from .errors import PolarBGError
from .frames import (PointRecord, PolarFrame, SensorConfig, STMatrix,
                     assemble_frame, azimuth_bin, build_st_matrices,
                     cartesian_to_spherical, normalize_azimuth,
                     spherical_to_cartesian)
from .model import BackgroundModel, train_background_model
from .pipeline import (Detection, FusionMode, PipelineConfig, RoiMask,
                       build_roi_mask, cluster, denoise, detect_frame)
from .sim import GroundTruth, Scene, Vehicle, raycast, simulate
from .tracking import (Tracker, TrackerConfig, Trajectory, count_movements,
                       extract_trajectories)

__version__ = "0.1.0"

__all__ = [
    "BackgroundModel", "DMDConfig", "DMDModel", "Detection", "FusionMode",
    "GroundTruth", "PipelineConfig", "PointRecord", "PolarBGError",
    "PolarFrame", "RangeHistogram", "RoiMask", "STMatrix", "Scene",
    "SensorConfig", "ThresholdTable", "Tracker", "TrackerConfig",
    "Trajectory", "Vehicle", "assemble_frame", "azimuth_bin",
    "build_roi_mask", "build_st_matrices", "build_threshold_table",
    "cartesian_to_spherical", "cfta_unit", "cluster", "count_movements",
    "denoise", "detect_frame", "extract_trajectories",
    "intensity_foreground_mask", "normalize_azimuth", "range_foreground_mask",
    "raycast", "simulate", "spherical_to_cartesian", "train_background_model",
    "train_intensity_model", "triangle_threshold",
]
