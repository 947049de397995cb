"""
Tests for the plotly chart components and the figure script
"""

import json

import numpy as np
import pandas as pd
import pytest

import plot_figures
from components.chart_components import TraceChartComponent
from config.settings import EXIT_OK, EXIT_USAGE


@pytest.fixture
def frame():
    times = np.linspace(0.0, 5e-3, 51)
    r_mem = 2000.0 - 1000.0 * np.exp(-times / 1e-3)
    v1 = np.where(times < 3e-3, 5.0, 0.0)
    i_mem = v1 / (r_mem + 2000.0)
    data = pd.DataFrame({
        'v1': v1,
        'v2': v1 * 2000.0 / (r_mem + 2000.0),
        'v3': v1 / 2.0,
        'i_mem': i_mem,
        'v_mem': i_mem * r_mem,
        'x': (16000.0 - r_mem) / 15900.0,
        'r_mem': r_mem,
    }, index=pd.Index(times, name='time'))
    return data


def test_resistance_chart(frame):
    fig = TraceChartComponent().create_resistance_chart(frame, r_ref=2000.0, title='run')
    assert len(fig.data) == 1
    assert fig.data[0].x[-1] == pytest.approx(5.0)
    assert len(fig.layout.shapes) == 1
    assert fig.layout.shapes[0].y0 == 2000.0
    assert fig.layout.xaxis.title.text == 'Time (ms)'
    assert fig.layout.title.text == 'run'


def test_resistance_chart_without_reference(frame):
    fig = TraceChartComponent().create_resistance_chart(frame)
    assert len(fig.layout.shapes) == 0


def test_voltage_chart_skips_missing_signals(frame):
    charts = TraceChartComponent()
    assert [trace.name for trace in charts.create_voltage_chart(frame).data] == ['v1', 'v2', 'v3']
    fig = charts.create_voltage_chart(frame.drop(columns=['v3']))
    assert [trace.name for trace in fig.data] == ['v1', 'v2']


def test_vi_chart_slope_line(frame):
    fig = TraceChartComponent().create_vi_chart(frame, slope=2000.0)
    assert len(fig.data) == 2
    line = fig.data[1]
    assert line.x[0] == 0.0
    # current in mA, so the slope line rises slope*1e-3 volts per mA
    assert line.y[1] == pytest.approx(line.x[1] * 2.0)
    assert fig.layout.hovermode == 'closest'


def test_light_theme(frame):
    fig = TraceChartComponent(dark_theme=False).create_voltage_chart(frame)
    assert fig.layout.paper_bgcolor == '#ffffff'


def test_render_experiment_reads_sidecar(tmp_path, frame):
    csv_path = tmp_path / 'increase_rref2000_supply5.csv'
    frame.to_csv(csv_path)
    (tmp_path / 'increase_rref2000_supply5_metrics.json').write_text(
        json.dumps({'r_ref': 2000.0, 'steady_slope': 1990.0})
    )
    written = plot_figures.render_experiment(csv_path, tmp_path / 'figures')
    assert [path.name for path in written] == [
        'increase_rref2000_supply5_resistance.html',
        'increase_rref2000_supply5_voltages.html',
        'increase_rref2000_supply5_vi.html',
    ]
    assert all(path.exists() for path in written)


def test_figure_script_exit_codes(tmp_path, frame):
    assert plot_figures.main([str(tmp_path / 'missing.csv')]) == EXIT_USAGE
    not_traces = tmp_path / 'table.csv'
    pd.DataFrame({'time': [0.0, 1.0], 'dt': [1e-6, 1e-7]}).to_csv(not_traces, index=False)
    assert plot_figures.main([str(not_traces)]) == EXIT_USAGE
    good = tmp_path / 'run.csv'
    frame.to_csv(good)
    assert plot_figures.main([str(good), '--light']) == EXIT_OK
    assert (tmp_path / 'run_vi.html').exists()
