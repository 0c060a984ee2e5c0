"""Shared fixtures: sensor configs and cached scene renders/models.

Scene simulation and model training are the slow parts of the suite, so
everything derived from the bundled scenes is session-scoped.
"""

import numpy as np
import pytest

from polarbg.cli import default_sensor_config
from polarbg.frames import SensorConfig
from polarbg.model import train_background_model
from polarbg.sim import corridor_scene, crossing_scene, intersection_scene, simulate


@pytest.fixture(scope="session")
def sensor16():
    return default_sensor_config()


@pytest.fixture(scope="session")
def small_sensor():
    """Coarse 8-beam sensor for cheap unit tests (1 degree bins)."""
    return SensorConfig(beam_count=8,
                        elevations=(-12.0, -9.0, -6.0, -4.0, -2.5, -1.5, -0.7, 0.0),
                        azimuth_bins=360, azimuth_resolution=1.0)


@pytest.fixture(scope="session")
def corridor(sensor16):
    frames, truth = simulate(corridor_scene(), 200, sensor16)
    model = train_background_model(frames, sensor16)
    return frames, truth, model


@pytest.fixture(scope="session")
def intersection(sensor16):
    frames, truth = simulate(intersection_scene(), 200, sensor16)
    model = train_background_model(frames, sensor16)
    return frames, truth, model


@pytest.fixture(scope="session")
def crossing(sensor16):
    frames, truth = simulate(crossing_scene(), 100, sensor16)
    model = train_background_model(frames, sensor16)
    return frames, truth, model


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
