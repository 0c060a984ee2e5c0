"""Constant-velocity Kalman tracking with gated global-nearest-neighbor assignment.

Tracks are born tentative from unmatched detections, confirmed by an
M-of-N rule and deleted after a run of misses.  Confirmed trajectories are
classified into entry/exit movement zones for turning-movement counts.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import FrameOrderError, NumericalFailure
from .pipeline import Detection, point_in_polygon


class TrackStatus(str, Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    DELETED = "deleted"


@dataclass
class TrackerConfig:
    process_noise_accel: float = 2.0
    meas_noise_pos: float = 0.3
    gate: float = 3.0
    confirm_m: int = 3
    confirm_n: int = 5
    delete_after_misses: int = 5
    dt: float = 0.1
    init_speed_std: float = 20.0

    def __post_init__(self):
        for name in ("process_noise_accel", "meas_noise_pos", "gate", "dt",
                     "init_speed_std"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not (1 <= self.confirm_m <= self.confirm_n):
            raise ValueError("need 1 <= confirm_m <= confirm_n")
        if self.delete_after_misses < 1:
            raise ValueError("delete_after_misses must be positive")


_H = np.array([[1.0, 0.0, 0.0, 0.0],
               [0.0, 1.0, 0.0, 0.0]])


@dataclass
class Track:
    track_id: int
    state: np.ndarray                 # (x, y, vx, vy)
    covariance: np.ndarray            # 4x4
    status: TrackStatus = TrackStatus.TENTATIVE
    hits: int = 1
    misses: int = 0
    history: list[tuple[int, float, float]] = field(default_factory=list)
    recent: deque = field(default_factory=lambda: deque(maxlen=5))
    ever_confirmed: bool = False


@dataclass
class Trajectory:
    track_id: int
    points: list[tuple[int, float, float]]
    status: TrackStatus


def _transition(dt: float):
    f = np.eye(4)
    f[0, 2] = f[1, 3] = dt
    q = np.zeros((4, 4))
    a = dt**4 / 4.0
    b = dt**3 / 2.0
    c = dt**2
    for i in (0, 1):
        q[i, i] = a
        q[i, i + 2] = q[i + 2, i] = b
        q[i + 2, i + 2] = c
    return f, q


def predict(track: Track, dt: float, cfg: TrackerConfig) -> Track:
    """Constant-velocity time update with white-acceleration process noise."""
    f, q = _transition(dt)
    track.state = f @ track.state
    track.covariance = f @ track.covariance @ f.T + cfg.process_noise_accel**2 * q
    track.covariance = 0.5 * (track.covariance + track.covariance.T)
    return track


def innovation(track: Track, measurement: np.ndarray, cfg: TrackerConfig):
    """Residual, innovation covariance and its inverse for one pairing."""
    r = cfg.meas_noise_pos**2 * np.eye(2)
    s = _H @ track.covariance @ _H.T + r
    try:
        s_inv = np.linalg.inv(s)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure("innovation covariance is singular") from exc
    resid = measurement - _H @ track.state
    return resid, s, s_inv


def mahalanobis(track: Track, measurement: np.ndarray, cfg: TrackerConfig) -> float:
    resid, _, s_inv = innovation(track, measurement, cfg)
    return float(np.sqrt(resid @ s_inv @ resid))


def associate(tracks, detections, cfg: TrackerConfig):
    """Gated minimum-total-cost one-to-one matching.

    Returns (matches, unmatched_track_indices, unmatched_detection_indices)
    where matches are (track_index, detection_index) pairs.
    """
    if not tracks or not detections:
        return [], list(range(len(tracks))), list(range(len(detections)))

    cost = np.full((len(tracks), len(detections)), np.inf)
    for i, trk in enumerate(tracks):
        for j, det in enumerate(detections):
            meas = np.array(det.centroid[:2])
            d = mahalanobis(trk, meas, cfg)
            if d <= cfg.gate:
                cost[i, j] = d

    big = 1e6
    rows, cols = linear_sum_assignment(np.where(np.isinf(cost), big, cost))
    matches = []
    matched_t, matched_d = set(), set()
    for i, j in zip(rows, cols):
        if np.isfinite(cost[i, j]):
            matches.append((int(i), int(j)))
            matched_t.add(int(i))
            matched_d.add(int(j))
    unmatched_t = [i for i in range(len(tracks)) if i not in matched_t]
    unmatched_d = [j for j in range(len(detections)) if j not in matched_d]
    return matches, unmatched_t, unmatched_d


def update(track: Track, detection: Detection, cfg: TrackerConfig) -> Track:
    """Kalman measurement update with the detection centroid (x, y)."""
    meas = np.array(detection.centroid[:2])
    resid, s, s_inv = innovation(track, meas, cfg)
    gain = track.covariance @ _H.T @ s_inv
    track.state = track.state + gain @ resid
    joseph = np.eye(4) - gain @ _H
    r = cfg.meas_noise_pos**2 * np.eye(2)
    track.covariance = joseph @ track.covariance @ joseph.T + gain @ r @ gain.T
    track.covariance = 0.5 * (track.covariance + track.covariance.T)
    return track


class Tracker:
    """Sequential multi-object tracker over per-frame detection lists."""

    def __init__(self, cfg: TrackerConfig | None = None):
        self.cfg = cfg or TrackerConfig()
        self.tracks: list[Track] = []
        self.finished: list[Track] = []
        self.last_frame: int | None = None
        self._next_id = 1

    def _new_track(self, detection: Detection, frame_id: int) -> Track:
        cfg = self.cfg
        state = np.array([detection.centroid[0], detection.centroid[1], 0.0, 0.0])
        cov = np.diag([cfg.meas_noise_pos**2, cfg.meas_noise_pos**2,
                       cfg.init_speed_std**2, cfg.init_speed_std**2])
        trk = Track(track_id=self._next_id, state=state, covariance=cov)
        trk.recent = deque(maxlen=cfg.confirm_n)
        trk.recent.append(True)
        trk.history.append((frame_id, float(state[0]), float(state[1])))
        self._next_id += 1
        return trk

    def step(self, detections, frame_id: int):
        """Advance one frame: predict, associate, update, manage lifecycles."""
        cfg = self.cfg
        if self.last_frame is not None:
            if frame_id <= self.last_frame:
                raise FrameOrderError(
                    f"frame {frame_id} after frame {self.last_frame}")
            dt = cfg.dt * (frame_id - self.last_frame)
        else:
            dt = cfg.dt
        self.last_frame = frame_id

        for trk in self.tracks:
            predict(trk, dt, cfg)

        matches, unmatched_t, unmatched_d = associate(self.tracks, detections, cfg)

        for i, j in matches:
            trk = self.tracks[i]
            update(trk, detections[j], cfg)
            trk.hits += 1
            trk.misses = 0
            trk.recent.append(True)
            trk.history.append((frame_id, float(trk.state[0]), float(trk.state[1])))
            if trk.status == TrackStatus.TENTATIVE and sum(trk.recent) >= cfg.confirm_m:
                trk.status = TrackStatus.CONFIRMED
                trk.ever_confirmed = True

        matched = {i for i, _ in matches}
        survivors = []
        for i, trk in enumerate(self.tracks):
            if i in matched:
                survivors.append(trk)
                continue
            trk.misses += 1
            trk.recent.append(False)
            if trk.misses >= cfg.delete_after_misses:
                trk.status = TrackStatus.DELETED
                self.finished.append(trk)
            else:
                survivors.append(trk)
        self.tracks = survivors

        for j in unmatched_d:
            self.tracks.append(self._new_track(detections[j], frame_id))

    def all_tracks(self):
        return self.tracks + self.finished


def extract_trajectories(tracker: Tracker) -> list[Trajectory]:
    """Time-ordered trajectories of every track that was ever confirmed."""
    out = []
    for trk in tracker.all_tracks():
        if trk.ever_confirmed:
            pts = sorted(trk.history)
            out.append(Trajectory(track_id=trk.track_id, points=pts,
                                  status=trk.status))
    out.sort(key=lambda t: t.track_id)
    return out


ZONE_PROBE_POINTS = 3


def _zone_of(points, zones):
    for frame_id, x, y in points:
        for name, poly in zones.items():
            if bool(point_in_polygon(np.array(x), np.array(y), np.asarray(poly, dtype=float))):
                return name
    return None


def count_movements(trajectories, zones):
    """Tally trajectories by (entry zone, exit zone).

    Entry comes from the first zone hit among the first three points; exit
    from the last zone hit among the last three.  Trajectories touching no
    zone at either end are reported as unclassified.
    """
    counts: dict[tuple[str, str], int] = {}
    unclassified = 0
    for traj in trajectories:
        head = traj.points[:ZONE_PROBE_POINTS]
        tail = traj.points[-ZONE_PROBE_POINTS:][::-1]
        entry = _zone_of(head, zones)
        exit_ = _zone_of(tail, zones)
        if entry is None or exit_ is None:
            unclassified += 1
            continue
        counts[(entry, exit_)] = counts.get((entry, exit_), 0) + 1
    return counts, unclassified
