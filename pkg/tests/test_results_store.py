"""
Tests for the results store
"""

import numpy as np
import pandas as pd
import pytest

from storage.results_store import ResultsStore, SWEEP_COLUMNS
from services.exceptions import OutputExistsError


@pytest.fixture
def traces():
    times = np.linspace(0.0, 1e-3, 11)
    return pd.DataFrame({'v1': 5.0 * np.ones(11), 'r_mem': np.linspace(1000.0, 1500.0, 11)}, index=times)


def test_creates_nested_output_directory(tmp_path):
    store = ResultsStore(tmp_path / 'a' / 'b')
    assert store.output_dir.is_dir()


def test_traces_are_written_with_a_time_index(tmp_path, traces):
    store = ResultsStore(tmp_path)
    path = store.save_traces(traces, 'run')
    assert path == tmp_path / 'run.csv'
    assert path.read_text().splitlines()[0] == 'time,v1,r_mem'
    loaded = store.load_traces('run.csv')
    assert loaded.index.name == 'time'
    np.testing.assert_allclose(loaded['r_mem'].to_numpy(), traces['r_mem'].to_numpy(), rtol=1e-9)
    np.testing.assert_allclose(loaded.index.to_numpy(), traces.index.to_numpy(), rtol=1e-9)


def test_refuses_to_overwrite_without_force(tmp_path, traces):
    ResultsStore(tmp_path).save_traces(traces, 'run')
    with pytest.raises(OutputExistsError, match='--force'):
        ResultsStore(tmp_path).save_traces(traces, 'run')
    with pytest.raises(OutputExistsError):
        ResultsStore(tmp_path).check_available('run', '.csv')
    assert ResultsStore(tmp_path).check_available('run', '.json') == tmp_path / 'run.json'
    # force overwrites
    ResultsStore(tmp_path, force=True).save_traces(traces.iloc[:3], 'run')
    assert len(ResultsStore(tmp_path).load_traces(tmp_path / 'run.csv')) == 3


def test_metrics_round_trip(tmp_path):
    store = ResultsStore(tmp_path)
    path = store.save_metrics({'final_r': 1999.5, 'converged': True, 'settling_time_5pct': None}, 'run_metrics')
    text = path.read_text()
    assert text.index('converged') < text.index('final_r') < text.index('settling_time_5pct')
    assert store.load_metrics('run_metrics.json') == {
        'final_r': 1999.5, 'converged': True, 'settling_time_5pct': None,
    }


def test_load_metrics_tolerates_missing_or_corrupt_files(tmp_path):
    store = ResultsStore(tmp_path)
    assert store.load_metrics(tmp_path / 'missing.json') is None
    (tmp_path / 'bad.json').write_text('{not json')
    assert store.load_metrics(tmp_path / 'bad.json') is None


def test_sweep_summary_has_fixed_columns(tmp_path):
    store = ResultsStore(tmp_path)
    summary = pd.DataFrame([
        {'status': 'ok', 'value': 2000.0, 'final_r': 1998.0, 'converged': True,
         'settling_time_5pct': 4.1e-3, 'settling_time_2pct': 4.3e-3},
        {'status': 'failed: diverged', 'value': 3000.0},
    ])
    path = store.save_sweep_summary(summary, 'increase_sweep_rref')
    loaded = pd.read_csv(path)
    assert list(loaded.columns) == SWEEP_COLUMNS
    assert loaded['status'].tolist() == ['ok', 'failed: diverged']
    assert np.isnan(loaded['final_r'].iloc[1])


def test_save_table(tmp_path):
    store = ResultsStore(tmp_path)
    path = store.save_table(pd.DataFrame({'dt': [1e-6, 1e-7], 'final_r': [2001.0, 2000.0]}), 'refine')
    assert pd.read_csv(path).columns.tolist() == ["dt", "final_r"]
