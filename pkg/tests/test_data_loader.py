import numpy as np
import pandas as pd
import pytest

from src.data.data_loader import (
    SnapshotLoader, grid_from_nodes, read_spectrum, snapshot_name,
    write_spectrum
)
from src.data.grid import FrequencyGrid
from src.data.params import ModelParams
from src.data.spectrum import Form, SpectrumField
from src.data.var_names import spectrum_file


def test_written_spectrum_reads_back_exactly(tmp_path, grid, bump):
    params = ModelParams(-0.25)
    field = bump.to_field(grid, Form.WAVE_ACTION)
    path = tmp_path / 'initial.csv'
    write_spectrum(field, params, path)

    df = pd.read_csv(path)
    assert list(df.columns) == spectrum_file.features
    assert set(df['form']) == {'n'}

    loaded, beta = read_spectrum(path)
    assert beta == -0.25
    assert loaded.form is Form.WAVE_ACTION
    assert loaded.grid == grid
    np.testing.assert_array_equal(loaded.values, field.values)


def test_read_rejects_missing_columns(tmp_path):
    path = tmp_path / 'broken.csv'
    pd.DataFrame({'omega': [1.0, 2.0], 'value': [1.0, 1.0]}).to_csv(
        path, index=False)
    with pytest.raises(ValueError, match='missing columns'):
        read_spectrum(path)


def test_grid_from_nodes_requires_log_uniform_nodes():
    grid = FrequencyGrid(0.5, 8.0, 16)
    assert grid_from_nodes(np.array(grid.nodes)) == grid
    with pytest.raises(ValueError):
        grid_from_nodes(np.linspace(0.5, 8.0, 16))
    with pytest.raises(ValueError):
        grid_from_nodes(np.array(grid.nodes)[::-1])


def test_snapshot_loader_orders_by_time(tmp_path, grid):
    params = ModelParams(0.0)
    for t in (0.5, 0.0, 0.1):
        field = SpectrumField(grid, np.full(grid.node_count, 1.0 + t))
        write_spectrum(field, params, tmp_path / snapshot_name(t))
    (tmp_path / 'diagnostics.csv').write_text('t\n0\n')

    loader = SnapshotLoader(tmp_path)
    assert len(loader) == 3
    times = []
    for t, field in loader:
        times.append(t)
        assert field.form is Form.RESCALED
        assert field.values[0] == pytest.approx(1.0 + t)
    assert times == [0.0, 0.1, 0.5]
