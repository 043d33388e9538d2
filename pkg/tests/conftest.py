from pathlib import Path

import pytest
import yaml

from src.data.analytic import GaussianBumpInLogOmega
from src.data.grid import FrequencyGrid
from src.data.params import ModelParams
from src.models.resonance import build_quadrature


@pytest.fixture(autouse=True)
def sequential_workers(monkeypatch):
    # Keep joblib in-process; results do not depend on the worker count.
    monkeypatch.setenv('THREADS', '1')


@pytest.fixture
def params():
    return ModelParams(0.0)


@pytest.fixture
def quad(params):
    return build_quadrature(params)


@pytest.fixture
def bump():
    return GaussianBumpInLogOmega(center=1.0, width=0.5)


@pytest.fixture
def grid():
    return FrequencyGrid(0.1, 10.0, 64)


@pytest.fixture
def write_config(tmp_path):
    """Write a mapping as YAML below tmp_path and return its path."""
    def write(mapping: dict, name: str = 'config.yaml') -> Path:
        path = tmp_path / name
        with open(path, 'w') as file:
            yaml.safe_dump(mapping, file)
        return path
    return write
