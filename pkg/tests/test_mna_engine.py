"""
Tests for MNA assembly, Newton, the DC operating point and transient integration
"""

import logging

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from config.settings import FIXTURES_DIR
from models.analysis import TransientConfig, StampContext, DeviceHistory
from models.devices import MemristorParams
from models.experiment import ExperimentSpec
from services.device_models import initial_state, state_derivative
from services.exceptions import AssemblyError, UnknownSignalError
from services.experiment_service import ExperimentService
from services.mna_engine import MnaEngine, stamp, dc_operating_point, transient, probe
from services.netlist_parser import parse_netlist, read_netlist, flatten

HP = MemristorParams()
RC_NETLIST = 'V1 1 0 1\nR1 1 2 1k\nC1 2 0 1u ic=0\n'


def circuit_of(text):
    return flatten(parse_netlist(text))


def bench(name):
    circuit = flatten(read_netlist(FIXTURES_DIR / name))
    dt, t_stop = circuit.tran
    return circuit, TransientConfig(t_stop=t_stop, dt=dt)


def rc_final_error(dt, integrator):
    config = TransientConfig(t_stop=1e-3, dt=dt, integrator=integrator)
    traces = transient(circuit_of(RC_NETLIST), config)
    return abs(traces.signal('v(2)').iloc[-1] - (1.0 - np.exp(-1.0)))


@pytest.fixture(scope='module')
def current_oracle():
    """r(t) of the HP memristor driven by a constant 1 mA"""
    sol = solve_ivp(
        lambda t, y: [state_derivative(y[0], 1e-3, HP)],
        (0.0, 1e-3), [initial_state(HP)],
        method='DOP853', rtol=1e-11, atol=1e-13, dense_output=True,
    )

    def resistance(t):
        x = sol.sol(t)[0]
        return HP.r_off - HP.delta_r * x
    return resistance


@pytest.fixture(scope='module')
def native_bench_traces():
    circuit, config = bench('native_current_bench.sp')
    return transient(circuit, config)


@pytest.fixture(scope='module')
def subckt_bench_traces():
    circuit, config = bench('constant_current_bench.sp')
    return transient(circuit, config)


def test_resistive_divider():
    solution = dc_operating_point(circuit_of('V1 1 0 5\nR1 1 2 1k\nR2 2 0 1k\n'))
    assert solution.voltage('2') == pytest.approx(2.5, abs=1e-9)
    assert solution.voltage('1') == pytest.approx(5.0, abs=1e-9)
    # the source current flows out of its plus terminal into the load
    assert solution.current('v1') == pytest.approx(-2.5e-3, abs=1e-12)
    assert solution.current('r1') == pytest.approx(2.5e-3, abs=1e-12)
    assert solution.iterations == 1


def test_ohms_law_and_series_resistors():
    solution = dc_operating_point(circuit_of('V1 1 0 5\nR1 1 0 1k\n'))
    assert abs(solution.current('v1')) == pytest.approx(5e-3, rel=1e-9)
    solution = dc_operating_point(circuit_of('V1 1 0 5\nR1 1 2 1k\nR2 2 0 2k\n'))
    assert solution.voltage('2') == pytest.approx(10.0 / 3.0, rel=1e-9)
    assert solution.kcl_residual <= 1e-9


def test_linear_circuit_matches_direct_solve():
    circuit = circuit_of('V1 1 0 5\nR1 1 2 1k\nR2 2 0 2k\nR3 2 3 500\nR4 3 0 1.5k\nE1 4 0 3 0 2\nR5 4 0 10k\n')
    engine = MnaEngine(circuit)
    system = stamp(circuit, np.zeros(engine.layout.size), DeviceHistory(), StampContext())
    expected = np.linalg.solve(system.jacobian, -system.residual)
    solution = engine.dc_operating_point()
    assert solution.iterations == 1
    np.testing.assert_allclose(solution.u, expected, rtol=1e-9, atol=1e-12)
    assert solution.voltage('4') == pytest.approx(2.0 * solution.voltage('3'), rel=1e-9)


def test_layout_orders_nodes_then_branches():
    engine = MnaEngine(circuit_of('V1 1 0 5\nR1 1 2 1k\nC1 2 0 1u\nXm 2 0 hpmem\n'))
    layout = engine.layout
    assert layout.kinds == ('v', 'v', 'i', 'i', 'x')
    assert layout.labels[-1] == 'x(xm)'
    assert set(layout.branch_index) == {'v1', 'c1'}


def test_parallel_voltage_sources_are_rejected():
    with pytest.raises(AssemblyError, match='v2'):
        MnaEngine(circuit_of('V1 1 0 5\nV2 1 0 3\nR1 1 0 1k\n'))


def test_floating_circuit_keeps_gmin_solution(caplog):
    with caplog.at_level(logging.WARNING):
        solution = dc_operating_point(circuit_of('R1 1 2 1k\nR2 2 1 2k\n'))
    assert solution.voltage('1') == pytest.approx(0.0, abs=1e-9)
    assert 'singular' in caplog.text


def test_rc_charging():
    config = TransientConfig(t_stop=1e-3, dt=1e-6, integrator='trap')
    traces = transient(circuit_of(RC_NETLIST), config)
    assert traces.time[0] == 0.0
    assert traces.time[-1] == pytest.approx(1e-3, rel=1e-12)
    assert np.all(np.diff(traces.time) > 0)
    assert traces.signal('v(2)').iloc[0] == pytest.approx(0.0, abs=1e-9)
    assert traces.signal('v(2)').iloc[-1] == pytest.approx(1.0 - np.exp(-1.0), rel=1e-3)


def test_trapezoidal_is_second_order():
    errors = [rc_final_error(dt, 'trap') for dt in (4e-6, 2e-6, 1e-6)]
    assert errors[0] / errors[1] > 3.0
    assert errors[1] / errors[2] > 3.0


def test_backward_euler_is_first_order():
    errors = [rc_final_error(dt, 'be') for dt in (4e-6, 2e-6)]
    assert 1.7 < errors[0] / errors[1] < 2.3


def test_adaptive_stepping_takes_fewer_steps():
    config = TransientConfig(t_stop=1e-3, dt=1e-6, integrator='trap', adaptive=True)
    traces = transient(circuit_of(RC_NETLIST), config)
    assert len(traces) < 1000
    assert np.all(np.diff(traces.time) > 0)
    assert traces.signal('v(2)').iloc[-1] == pytest.approx(1.0 - np.exp(-1.0), rel=2e-3)


def test_native_memristor_matches_ode_oracle(native_bench_traces, current_oracle):
    r = probe(native_bench_traces, 'r(xmem)')
    assert r.iloc[0] == pytest.approx(1000.0, rel=1e-9)
    for t in (2.5e-4, 5e-4, 1e-3):
        index = int(np.argmin(np.abs(r.index.to_numpy() - t)))
        assert r.iloc[index] == pytest.approx(current_oracle(r.index[index]), rel=1e-4)
    # 1 mA into the plus terminal lowers the resistance
    assert r.iloc[-1] < r.iloc[0]


def test_subcircuit_memristor_matches_ode_oracle(subckt_bench_traces, current_oracle):
    r = probe(subckt_bench_traces, 'r(xmem)')
    assert r.iloc[0] == pytest.approx(1000.0, rel=1e-6)
    assert r.iloc[-1] == pytest.approx(current_oracle(1e-3), rel=1e-4)
    current = probe(subckt_bench_traces, 'i(xmem)')
    np.testing.assert_allclose(current.to_numpy(), probe(subckt_bench_traces, 'i(xmem.emem)').to_numpy())
    assert current.iloc[-1] == pytest.approx(1e-3, rel=1e-5)


def test_native_and_subcircuit_agree(native_bench_traces, subckt_bench_traces):
    native = probe(native_bench_traces, 'r(xmem)').to_numpy()
    subckt = probe(subckt_bench_traces, 'r(xmem)').to_numpy()
    assert native.shape == subckt.shape
    np.testing.assert_allclose(native, subckt, rtol=1e-2)
    v_native = probe(native_bench_traces, 'v(1)').iloc[-1]
    v_subckt = probe(subckt_bench_traces, 'v(1)').iloc[-1]
    assert v_native == pytest.approx(v_subckt, rel=1e-2)


def test_bench_invariants(native_bench_traces, subckt_bench_traces):
    for traces in (native_bench_traces, subckt_bench_traces):
        assert np.max(traces.kcl_residuals) <= 1e-9
        r = probe(traces, 'r(xmem)').to_numpy()
        assert np.all((r >= HP.r_on) & (r <= HP.r_off))
        x = probe(traces, 'x(xmem)').to_numpy()
        assert np.all((x >= 0.0) & (x <= 1.0 + 1e-9))
        assert np.all(traces.newton_iterations >= 1)


def test_probe_selectors(native_bench_traces):
    assert probe(native_bench_traces, 'V( 1 )').equals(probe(native_bench_traces, 'v(1)'))
    assert 'r(xmem)' in native_bench_traces.signal_names
    frame = native_bench_traces.select(['v(1)', 'r(xmem)'])
    assert list(frame.columns) == ['v(1)', 'r(xmem)']
    assert frame.index.name == 'time'
    for selector in ('v(nowhere)', 'i(r9)', 'r(gdrive)', 'q(1)'):
        with pytest.raises(UnknownSignalError):
            probe(native_bench_traces, selector)


def test_halving_dt_changes_little():
    circuit, config = bench('native_current_bench.sp')
    coarse = probe(transient(circuit, config), 'r(xmem)').iloc[-1]
    fine = probe(transient(circuit, config.with_overrides(dt=config.dt / 2)), 'r(xmem)').iloc[-1]
    assert abs(fine - coarse) / fine <= 5e-3


@pytest.mark.parametrize('hint', [5.0, -5.0])
def test_bias_hints_select_the_rail(hint):
    spec = ExperimentSpec.for_kind('increase')
    circuit = ExperimentService().build_increase_circuit(spec)
    solution = dc_operating_point(circuit, {'xop': hint})
    assert solution.voltage('v1') == pytest.approx(hint, rel=1e-4)
    assert solution.voltage('v2') == pytest.approx(hint * 2.0 / 3.0, rel=1e-4)
    assert solution.voltage('v3') == pytest.approx(hint / 2.0, rel=1e-4)
    assert solution.memristor_states['xmem'] == pytest.approx(initial_state(HP))


def test_hints_may_name_the_output_node():
    spec = ExperimentSpec.for_kind('increase')
    circuit = ExperimentService().build_increase_circuit(spec)
    by_node = dc_operating_point(circuit, {'v1': -5.0})
    assert by_node.voltage('v1') == pytest.approx(-5.0, rel=1e-4)
