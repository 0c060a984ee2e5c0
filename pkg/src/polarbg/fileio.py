"""Documented on-disk formats: frame/label/track/detection CSVs and JSON configs.

All writers are atomic (temp file + rename) and byte-deterministic for
identical inputs; no timestamps are embedded.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .errors import ValidationError
from .frames import PolarFrame, SensorConfig, azimuth_bin
from .model import BackgroundModel
from .pipeline import Detection, ForegroundPoint, FLAG_INTENSITY, FLAG_RANGE
from .sim import LABEL_NON_RETURN
from .tracking import Trajectory, TrackStatus

FRAMES_HEADER = "frame,beam,azimuth_deg,range_m,intensity"
LABELS_HEADER = "frame,beam,bin,label,vehicle_id"
TRACKS_HEADER = "track_id,frame,x,y,vx,vy,status"
DETECTIONS_HEADER = "frame,det_id,cx,cy,cz,len,wid,yaw_rad,zmin,zmax,points"
FOREGROUND_HEADER = "frame,beam,bin,x,y,z,intensity,flags"


def atomic_write_text(path: str, text: str):
    """Write text via a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-polarbg-")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str, obj):
    atomic_write_text(path, json.dumps(obj, indent=1, sort_keys=True) + "\n")


def read_json(path: str):
    with open(path) as fh:
        return json.load(fh)


# --- sensor / run configuration -------------------------------------------

def write_sensor_config(cfg: SensorConfig, path: str):
    write_json(path, cfg.to_dict())


def read_sensor_config(path: str) -> SensorConfig:
    return SensorConfig.from_dict(read_json(path))


# --- frames ----------------------------------------------------------------

def write_frames_csv(frames, cfg: SensorConfig, path: str):
    """One row per return, sorted by (frame, beam, azimuth); non-returns omitted."""
    lines = [FRAMES_HEADER]
    for frame in sorted(frames, key=lambda f: f.frame_id):
        beams, bins = np.nonzero(frame.ranges > 0.0)
        az = cfg.bin_center_azimuth(bins)
        order = np.lexsort((az, beams))
        for b, a, r, i in zip(beams[order], az[order],
                              frame.ranges[beams[order], bins[order]],
                              frame.intensities[beams[order], bins[order]]):
            lines.append(f"{frame.frame_id},{b},{a:.4f},{r:.6f},{i:.4f}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_frames_csv(path: str, cfg: SensorConfig) -> list[PolarFrame]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    frames: dict[int, PolarFrame] = {}
    if data.size == 0:
        return []
    fids = data[:, 0].astype(int)
    beams = data[:, 1].astype(int)
    bins = azimuth_bin(data[:, 2], cfg)
    if np.any((beams < 0) | (beams >= cfg.beam_count)):
        raise ValidationError(f"beam index outside sensor config in {path}")
    for fid in np.unique(fids):
        sel = fids == fid
        frame = PolarFrame.empty(int(fid), cfg)
        frame.ranges[beams[sel], bins[sel]] = data[sel, 3]
        frame.intensities[beams[sel], bins[sel]] = data[sel, 4]
        frames[int(fid)] = frame
    return [frames[k] for k in sorted(frames)]


# --- ground-truth labels ---------------------------------------------------

def write_labels_csv(labels, path: str):
    """Vehicle-labeled cells only; background/non-return are implied by frames."""
    lines = [LABELS_HEADER]
    for fid, grid in enumerate(labels):
        beams, bins = np.nonzero(grid > 0)
        for b, a in zip(beams, bins):
            lines.append(f"{fid},{b},{a},vehicle,{grid[b, a]}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_labels_csv(path: str, frames) -> list[np.ndarray]:
    """Reconstruct full label grids from vehicle rows plus the frame grids."""
    grids = []
    by_id = {}
    for frame in frames:
        grid = np.where(frame.ranges > 0.0, 0, LABEL_NON_RETURN)
        by_id[frame.frame_id] = grid
        grids.append(grid)
    with open(path) as fh:
        header = fh.readline()
        if header.strip() != LABELS_HEADER:
            raise ValidationError(f"unexpected labels header in {path}")
        for line in fh:
            fid, beam, bin_, label, vid = line.strip().split(",")
            if label == "vehicle":
                by_id[int(fid)][int(beam), int(bin_)] = int(vid)
    return grids


# --- tracks ----------------------------------------------------------------

def write_tracks_csv(trajectories, path: str, velocities=None, status=None):
    """Track rows; velocities default to 0 when the source has none (truth)."""
    lines = [TRACKS_HEADER]
    for traj in trajectories:
        st = status or (traj.status.value if hasattr(traj.status, "value")
                        else str(traj.status))
        for k, (fid, x, y) in enumerate(traj.points):
            vx = vy = 0.0
            if velocities is not None and traj.track_id in velocities:
                vx, vy = velocities[traj.track_id][k]
            lines.append(f"{traj.track_id},{fid},{x:.4f},{y:.4f},"
                         f"{vx:.4f},{vy:.4f},{st}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_tracks_csv(path: str) -> list[Trajectory]:
    trajs: dict[int, list[tuple[int, float, float]]] = {}
    stats: dict[int, str] = {}
    with open(path) as fh:
        header = fh.readline()
        if header.strip() != TRACKS_HEADER:
            raise ValidationError(f"unexpected tracks header in {path}")
        for line in fh:
            tid, fid, x, y, _vx, _vy, st = line.strip().split(",")
            trajs.setdefault(int(tid), []).append((int(fid), float(x), float(y)))
            stats[int(tid)] = st
    out = []
    for tid in sorted(trajs):
        status = stats[tid]
        try:
            status = TrackStatus(status)
        except ValueError:
            pass
        out.append(Trajectory(track_id=tid, points=sorted(trajs[tid]),
                              status=status))
    return out


def truth_trajectories(ground_truth) -> list[Trajectory]:
    """Adapt simulator vehicle paths to the trajectory/tracks schema."""
    out = []
    for vid in sorted(ground_truth.trajectories):
        pts = ground_truth.trajectories[vid]
        if pts:
            out.append(Trajectory(track_id=vid, points=list(pts), status="truth"))
    return out


# --- detections and foreground points -------------------------------------

def write_detections_csv(detections_per_frame, path: str):
    lines = [DETECTIONS_HEADER]
    for dets in detections_per_frame:
        for k, d in enumerate(dets):
            lines.append(
                f"{d.frame_id},{k},{d.centroid[0]:.4f},{d.centroid[1]:.4f},"
                f"{d.centroid[2]:.4f},{d.length:.4f},{d.width:.4f},"
                f"{d.yaw:.6f},{d.z_range[0]:.4f},{d.z_range[1]:.4f},"
                f"{d.point_count}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_detections_csv(path: str) -> dict[int, list[Detection]]:
    out: dict[int, list[Detection]] = {}
    with open(path) as fh:
        header = fh.readline()
        if header.strip() != DETECTIONS_HEADER:
            raise ValidationError(f"unexpected detections header in {path}")
        for line in fh:
            f = line.strip().split(",")
            det = Detection(frame_id=int(f[0]),
                            centroid=(float(f[2]), float(f[3]), float(f[4])),
                            center=(float(f[2]), float(f[3])),
                            length=float(f[5]), width=float(f[6]),
                            yaw=float(f[7]),
                            z_range=(float(f[8]), float(f[9])),
                            point_count=int(f[10]))
            out.setdefault(det.frame_id, []).append(det)
    return out


def _flag_code(flags: frozenset) -> str:
    code = ""
    if FLAG_INTENSITY in flags:
        code += "I"
    if FLAG_RANGE in flags:
        code += "R"
    return code


def write_foreground_csv(points_per_frame, path: str):
    lines = [FOREGROUND_HEADER]
    for fid, points in points_per_frame:
        for p in points:
            lines.append(f"{fid},{p.beam},{p.bin},{p.x:.4f},{p.y:.4f},"
                         f"{p.z:.4f},{p.intensity:.4f},{_flag_code(p.flagged_by)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_foreground_csv(path: str) -> dict[int, list[ForegroundPoint]]:
    out: dict[int, list[ForegroundPoint]] = {}
    with open(path) as fh:
        header = fh.readline()
        if header.strip() != FOREGROUND_HEADER:
            raise ValidationError(f"unexpected foreground header in {path}")
        for line in fh:
            f = line.strip().split(",")
            flags = set()
            if "I" in f[7]:
                flags.add(FLAG_INTENSITY)
            if "R" in f[7]:
                flags.add(FLAG_RANGE)
            p = ForegroundPoint(x=float(f[3]), y=float(f[4]), z=float(f[5]),
                                beam=int(f[1]), bin=int(f[2]),
                                intensity=float(f[6]),
                                flagged_by=frozenset(flags))
            out.setdefault(int(f[0]), []).append(p)
    return out


# --- counts / zones / model -----------------------------------------------

def write_counts_json(counts: dict, unclassified: int, path: str):
    movements = [{"entry": entry, "exit": exit_, "count": n}
                 for (entry, exit_), n in sorted(counts.items())]
    write_json(path, {"movements": movements, "unclassified": unclassified})


def read_counts_json(path: str):
    d = read_json(path)
    counts = {(m["entry"], m["exit"]): int(m["count"]) for m in d["movements"]}
    return counts, int(d.get("unclassified", 0))


def read_zones_json(path: str) -> dict:
    d = read_json(path)
    return {name: [tuple(p) for p in ring] for name, ring in d.items()}


def write_zones_json(zones: dict, path: str):
    write_json(path, {name: [list(p) for p in ring] for name, ring in zones.items()})


def read_roi_json(path: str) -> list:
    return [np.asarray(ring, dtype=float) for ring in read_json(path)]


def write_roi_json(polygons, path: str):
    write_json(path, [[list(map(float, p)) for p in ring] for ring in polygons])


def write_model_json(model: BackgroundModel, path: str):
    write_json(path, model.to_dict())


def read_model_json(path: str) -> BackgroundModel:
    return BackgroundModel.from_dict(read_json(path))
