"""
Tests for the command-line front end and its exit codes
"""

import logging

import pandas as pd
import pytest

import app
from config.settings import FIXTURES_DIR, EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_SOLVE
from models.experiment import ExperimentMetrics
from services.exceptions import NewtonConvergenceError
from services.experiment_service import ExperimentService
from services.mna_engine import MnaEngine

NATIVE_BENCH = FIXTURES_DIR / 'native_current_bench.sp'


@pytest.fixture(autouse=True)
def restore_logging():
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


def run_cli(*argv):
    return app.main([str(arg) for arg in argv])


def test_run_writes_probed_signals(tmp_path, capsys):
    code = run_cli('run', NATIVE_BENCH, '--probe', 'v(1),r(xmem)', '--tstop', '200u', '--out', tmp_path)
    assert code == EXIT_OK
    frame = pd.read_csv(tmp_path / 'native_current_bench.csv', index_col='time')
    assert list(frame.columns) == ['v(1)', 'r(xmem)']
    assert frame.index[-1] == pytest.approx(2e-4)
    assert frame['r(xmem)'].iloc[0] == pytest.approx(1000.0)
    assert 'time points written to' in capsys.readouterr().out


def test_existing_output_needs_force(tmp_path):
    args = ('run', NATIVE_BENCH, '--tstop', '20u', '--out', tmp_path)
    assert run_cli(*args) == EXIT_OK
    assert run_cli(*args) == EXIT_USAGE
    assert run_cli(*args, '--force') == EXIT_OK


def test_unknown_probe_is_a_usage_error(tmp_path, capsys):
    code = run_cli('run', NATIVE_BENCH, '--probe', 'v(99)', '--tstop', '20u', '--out', tmp_path)
    assert code == EXIT_USAGE
    assert "unknown signal 'v(99)'" in capsys.readouterr().err
    assert not (tmp_path / 'native_current_bench.csv').exists()


def test_netlist_problems_exit_with_parse_code(tmp_path):
    empty = tmp_path / 'empty.sp'
    empty.write_text('* nothing here\n')
    assert run_cli('run', empty, '--out', tmp_path) == EXIT_PARSE
    broken = tmp_path / 'broken.sp'
    broken.write_text('Q1 1 2 3 npn\n.tran 1u 1m\n')
    assert run_cli('run', broken, '--out', tmp_path) == EXIT_PARSE


def test_usage_errors(tmp_path):
    assert run_cli() == EXIT_USAGE
    assert run_cli('run', tmp_path / 'missing.sp') == EXIT_USAGE
    assert run_cli('experiment', 'sideways') == EXIT_USAGE
    assert run_cli('experiment', 'increase', '--rref', 'abc') == EXIT_USAGE
    assert run_cli('--verbose', '--quiet', 'run', NATIVE_BENCH) == EXIT_USAGE
    no_tran = tmp_path / 'no_tran.sp'
    no_tran.write_text('V1 1 0 1\nR1 1 0 1k\n')
    assert run_cli('run', no_tran, '--out', tmp_path) == EXIT_USAGE


def test_configuration_errors(tmp_path):
    assert run_cli('experiment', 'increase', '--rref', '500', '--out', tmp_path) == EXIT_USAGE
    assert run_cli('sweep', 'increase', '--axis', 'rref', '--values', '3k', '--out', tmp_path) == EXIT_USAGE
    assert run_cli('experiment', 'increase', '--dt', '0', '--out', tmp_path) == EXIT_USAGE
    assert list(tmp_path.iterdir()) == []


def test_simulation_failure_exit_code(tmp_path, monkeypatch):
    def diverge(self, initial=None, bias_hints=None):
        raise NewtonConvergenceError('Newton did not converge at t=1e-06', 50)

    monkeypatch.setattr(MnaEngine, 'transient', diverge)
    assert run_cli('run', NATIVE_BENCH, '--out', tmp_path) == EXIT_SOLVE
    assert run_cli('experiment', 'increase', '--out', tmp_path) == EXIT_SOLVE


def test_experiment_writes_traces_and_metrics(tmp_path, capsys):
    code = run_cli('experiment', 'decrease', '--tstop', '1m', '--out', tmp_path)
    assert code == EXIT_OK
    assert (tmp_path / 'decrease_rref500_supply5.csv').exists()
    assert (tmp_path / 'decrease_rref500_supply5_metrics.json').exists()
    out = capsys.readouterr().out
    assert 'final_r' in out
    assert 'converged       False' in out


def test_transient_flags_override_netlist():
    args = app.build_parser().parse_args(
        ['run', str(NATIVE_BENCH), '--dt', '2u', '--integrator', 'be', '--adaptive']
    )
    config = app.transient_config(args, app.TransientConfig(t_stop=1e-3, dt=1e-6))
    assert config.dt == pytest.approx(2e-6)
    assert config.integrator == 'be'
    assert config.adaptive
    assert config.t_stop == 1e-3


def test_sweep_writes_summary(tmp_path, monkeypatch, capsys):
    def settled(self, spec, save=True):
        metrics = ExperimentMetrics(
            name=spec.label, kind=spec.kind, r_ref=spec.r_ref, final_r=spec.r_ref,
            settling_time_2pct=spec.supply * 1e-3, settling_time_5pct=spec.supply * 5e-4,
            converged=True, steady_slope=spec.r_ref, voltage_match_time=1e-3, steady_v1_mean=0.0,
        )
        return None, metrics

    monkeypatch.setattr(ExperimentService, 'run_experiment', settled)
    code = run_cli('sweep', 'increase', '--axis', 'supply', '--values', '5,4,3',
                   '--workers', '1', '--out', tmp_path)
    assert code == EXIT_OK
    summary = pd.read_csv(tmp_path / 'increase_sweep_supply.csv')
    assert summary['value'].tolist() == [5.0, 4.0, 3.0]
    assert (summary['status'] == 'ok').all()
    assert 'settling_time_5pct' in capsys.readouterr().out
    assert run_cli('sweep', 'increase', '--axis', 'supply', '--values', '5,4',
                   '--workers', '1', '--out', tmp_path) == EXIT_USAGE
