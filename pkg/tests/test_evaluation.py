import json

import pandas as pd
import pytest

from src.data.params import ModelParams
from src.data.spectrum import Form
from src.models.collision import Evaluator, collide_grid
from src.models.evaluation import ResultManager, config_hash, write_json


def test_config_hash_ignores_key_order():
    first = {'params': {'beta': 0.0, 'p0': 1}, 'seed': 0}
    second = {'seed': 0, 'params': {'p0': 1, 'beta': 0.0}}
    assert config_hash(first) == config_hash(second)
    assert config_hash(first) != config_hash({'seed': 1})


def test_write_json_is_sorted(tmp_path):
    path = tmp_path / 'out.json'
    write_json({'b': 1, 'a': 2}, path)
    text = path.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {'a': 2, 'b': 1}


def test_result_manager_replaces_previous_run(tmp_path):
    stale = tmp_path / 'run' / 'stale.csv'
    stale.parent.mkdir()
    stale.write_text('x\n')
    manager = ResultManager(tmp_path, 'run')
    assert not stale.exists()
    assert manager.writer is None

    digest = manager.save_run_metadata({'seed': 0}, note='test')
    metadata = json.loads(manager.path('run.json').read_text())
    assert metadata['config_hash'] == digest
    assert metadata['note'] == 'test'
    assert {'code_version', 'wall_clock'} <= set(metadata)
    manager.finish()


def test_save_table_keeps_column_order(tmp_path):
    manager = ResultManager(tmp_path, 'run')
    manager.save_table('table.csv', [{'b': 1.0, 'a': 0.1}], ['a', 'b'])
    df = pd.read_csv(manager.path('table.csv'))
    assert list(df.columns) == ['a', 'b']
    assert df['a'].iloc[0] == 0.1


def test_collision_csv_with_sidecar(tmp_path, grid, bump, quad):
    params = ModelParams(0.0)
    result = collide_grid(bump.to_field(grid, Form.WAVE_ACTION), quad,
                          Evaluator.SUM)
    manager = ResultManager(tmp_path, 'run')
    manager.save_collision(result, params, 'collision.csv')

    df = pd.read_csv(manager.path('collision.csv'))
    assert set(df['form']) == {'C(n)'}
    assert df['value'].tolist() == pytest.approx(result.values.tolist(),
                                                 rel=0, abs=0)
    sidecar = json.loads(manager.path('collision.json').read_text())
    assert sidecar['evaluator'] == 'sum'
    assert sidecar['quadrature']['nodes'] == quad.size
    assert 0.0 <= sidecar['extrapolated_fraction'] <= 1.0
