"""End-to-end command-line runs: pipeline, exit codes, determinism."""

import json
import os

import numpy as np
import pytest

from polarbg import fileio
from polarbg.cli import main
from polarbg.frames import SensorConfig
from polarbg.sim import GroundPlane, Scene, Vehicle


@pytest.fixture(scope="module")
def workdir(tmp_path_factory, small_sensor):
    """Scene/sensor/zones inputs plus one full pipeline run."""
    root = tmp_path_factory.mktemp("cli")

    veh = Vehicle(length=4.5, width=1.8, height=1.5, intensity=95.0,
                  waypoints=[(0.0, -30.0, 12.0, 0.0), (6.0, 30.0, 12.0, 0.0)])
    scene = Scene(ground=GroundPlane(), vehicles=[veh], seed=17)
    scene_path = root / "scene.json"
    scene_path.write_text(json.dumps(scene.to_dict()))

    sensor_path = root / "sensor.json"
    fileio.write_sensor_config(small_sensor, str(sensor_path))

    zones = {"west": [(-35.0, 5.0), (-20.0, 5.0), (-20.0, 19.0), (-35.0, 19.0)],
             "east": [(20.0, 5.0), (35.0, 5.0), (35.0, 19.0), (20.0, 19.0)]}
    zones_path = root / "zones.json"
    fileio.write_zones_json(zones, str(zones_path))

    sim = root / "sim"
    assert main(["simulate", str(scene_path), "70", str(sim),
                 "--sensor", str(sensor_path)]) == 0

    model = root / "model.json"
    assert main(["train", str(sim / "frames.csv"), str(sensor_path),
                 str(model)]) == 0

    det = root / "det"
    assert main(["detect", str(sim / "frames.csv"), str(model), "-",
                 str(det)]) == 0

    trk = root / "trk"
    assert main(["track", str(det / "detections.csv"), str(zones_path),
                 str(trk)]) == 0
    return root


class TestPipelineOutputs:
    def test_simulate_outputs_exist(self, workdir):
        for name in ("frames.csv", "gt_labels.csv", "gt_tracks.csv",
                     "sensor.json"):
            assert (workdir / "sim" / name).exists()

    def test_counts_match_ground_truth(self, workdir):
        counts, _ = fileio.read_counts_json(str(workdir / "trk" / "counts.json"))
        assert counts == {("west", "east"): 1}

    def test_eval_counts(self, workdir):
        out = workdir / "eval_counts"
        assert main(["eval", str(workdir / "trk" / "counts.json"),
                     str(workdir / "sim" / "gt_tracks.csv"), str(out),
                     "--mode", "counts",
                     "--zones", str(workdir / "zones.json")]) == 0
        metrics = fileio.read_json(str(out / "metrics.json"))
        assert metrics["total"]["accuracy"] == 1.0
        assert "Accuracy" in (out / "metrics.txt").read_text()

    def test_eval_points(self, workdir):
        out = workdir / "eval_points"
        assert main(["eval", str(workdir / "det" / "foreground.csv"),
                     str(workdir / "sim" / "gt_labels.csv"), str(out),
                     "--mode", "points",
                     "--frames", str(workdir / "sim" / "frames.csv"),
                     "--sensor", str(workdir / "sim" / "sensor.json")]) == 0
        metrics = fileio.read_json(str(out / "metrics.json"))
        near = metrics["points"][0]
        assert near["recall"] is None or near["recall"] > 0.8

    def test_plot_stmap(self, workdir):
        prefix = str(workdir / "stmap")
        assert main(["plot", "--kind", "stmap",
                     str(workdir / "sim" / "frames.csv"), prefix,
                     "--model", str(workdir / "model.json"),
                     "--beam", "4"]) == 0
        for suffix in ("original", "background", "foreground"):
            text = (workdir / f"stmap_{suffix}.pgm").read_text()
            assert text.startswith("P2\n")

    def test_plot_trajectories(self, workdir):
        out = workdir / "traj.svg"
        assert main(["plot", "--kind", "trajectories",
                     str(workdir / "trk" / "tracks.csv"), str(out),
                     "--zones", str(workdir / "zones.json")]) == 0
        assert "<svg" in out.read_text()

    def test_plot_histogram(self, workdir):
        out = workdir / "hist.svg"
        assert main(["plot", "--kind", "histogram",
                     str(workdir / "sim" / "frames.csv"), str(out),
                     "--sensor", str(workdir / "sim" / "sensor.json"),
                     "--beam", "4", "--bin", "91"]) == 0
        assert "<svg" in out.read_text()


class TestExitCodes:
    def test_missing_file(self, tmp_path):
        assert main(["train", str(tmp_path / "nope.csv"),
                     str(tmp_path / "nope.json"), str(tmp_path / "m.json")]) == 2

    def test_eval_counts_needs_zones(self, workdir, tmp_path):
        assert main(["eval", str(workdir / "trk" / "counts.json"),
                     str(workdir / "sim" / "gt_tracks.csv"),
                     str(tmp_path / "o"), "--mode", "counts"]) == 2

    def test_detect_sensor_mismatch(self, workdir, tmp_path):
        other = SensorConfig(beam_count=2, elevations=(-1.0, 0.0),
                             azimuth_bins=360, azimuth_resolution=1.0)
        model = fileio.read_model_json(str(workdir / "model.json"))
        model.sensor = other  # hash no longer matches the stored sensor
        bad = tmp_path / "bad_model.json"
        fileio.write_model_json(model, str(bad))
        assert main(["detect", str(workdir / "sim" / "frames.csv"),
                     str(bad), "-", str(tmp_path / "out")]) == 2

    def test_two_frame_training_minimum(self, workdir, tmp_path, small_sensor):
        frames = fileio.read_frames_csv(str(workdir / "sim" / "frames.csv"),
                                        small_sensor)
        two = tmp_path / "two.csv"
        fileio.write_frames_csv(frames[:2], small_sensor, str(two))
        assert main(["train", str(two), str(workdir / "sensor.json"),
                     str(tmp_path / "m.json")]) == 0


class TestDeterminism:
    def test_rerun_byte_identical(self, workdir, tmp_path):
        sim2 = tmp_path / "sim2"
        assert main(["simulate", str(workdir / "scene.json"), "70", str(sim2),
                     "--sensor", str(workdir / "sensor.json")]) == 0
        for name in ("frames.csv", "gt_labels.csv", "gt_tracks.csv"):
            assert (sim2 / name).read_bytes() == \
                (workdir / "sim" / name).read_bytes()

        model2 = tmp_path / "model2.json"
        assert main(["train", str(sim2 / "frames.csv"),
                     str(workdir / "sensor.json"), str(model2)]) == 0
        assert model2.read_bytes() == (workdir / "model.json").read_bytes()

        det2 = tmp_path / "det2"
        assert main(["detect", str(sim2 / "frames.csv"), str(model2), "-",
                     str(det2)]) == 0
        for name in ("detections.csv", "foreground.csv"):
            assert (det2 / name).read_bytes() == \
                (workdir / "det" / name).read_bytes()
