import numpy as np
import pytest

from addnet import example_path, load_example


@pytest.fixture(scope="session")
def riot():
    return load_example("riot.abn")


@pytest.fixture(scope="session")
def alarmx():
    return load_example("alarmx.abn")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def data_dir():
    return example_path("")
