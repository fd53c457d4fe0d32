import numpy as np
import pytest

from app import create_app
from app.extensions import executor
from app.models import FrequencyGrid, SampleSet, Spectrum
from app.services.experiment_service import grid_20_2d, two_point_1d
from config import TestingConfig


@pytest.fixture
def app():
    app = create_app(TestingConfig)
    yield app
    executor.configure(threads=1, chunk_size=TestingConfig.CHUNK_SIZE)


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def two_points():
    return two_point_1d()


@pytest.fixture
def twenty_points():
    return grid_20_2d()


@pytest.fixture
def random_hermitian(rng):
    def make(grid: FrequencyGrid) -> Spectrum:
        raw = rng.normal(size=grid.size) + 1j * rng.normal(size=grid.size)
        return Spectrum(grid, 0.5 * (raw + np.conj(raw[::-1])), hermitian=True)
    return make


def random_samples(rng, n, dim, low=-1.0, high=1.0):
    points = rng.uniform(low, high, size=(n, dim))
    return SampleSet(points=points, labels=rng.normal(size=n))
