"""
Closed-loop resistance-copy experiments: circuit builders, runs, metrics and sweeps
"""

import math
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from config.settings import (
    HP_MEMRISTOR_NETLIST, HP_MEMRISTOR_SUBCKT, MEMRISTOR_SUBCKT, OPAMP_SUBCKT, SWEEP_AXES,
    SETTLING_BANDS, CONVERGENCE_TOLERANCE, STEADY_WINDOW_FRACTION, QUIESCENCE_WINDOW_FRACTION,
    VOLTAGE_MATCH_FRACTION, VI_CURRENT_FLOOR, EXPERIMENT_COLUMNS, max_sweep_workers,
)
from models.analysis import TraceSet
from models.circuit import Circuit
from models.experiment import ExperimentSpec, ExperimentMetrics, ViCurve, SweepRow
from services.exceptions import ConfigurationError, ExperimentError, MemsimError, UnknownSignalError
from services.mna_engine import MnaEngine
from services.netlist_parser import parse_netlist, flatten

logger = logging.getLogger(__name__)

MEMRISTOR_INSTANCE = 'xmem'
OPAMP_INSTANCE = 'xop'


def _time_after_last(outside: np.ndarray, times: np.ndarray) -> Optional[float]:
    """First time after the last flagged sample; None if the final sample is flagged"""
    if len(times) == 0:
        return None
    flagged = np.flatnonzero(outside)
    if flagged.size == 0:
        return float(times[0])
    last = flagged[-1]
    if last == len(times) - 1:
        return None
    return float(times[last + 1])


def settling_time(trace: pd.Series, target: float, band: float) -> Optional[float]:
    """
    Earliest time after which the trace stays within band*target of target

    Returns None when the trace is still outside the band at its last sample.
    """
    if band <= 0:
        raise ValueError(f"band must be positive (got {band})")
    values = trace.to_numpy(dtype=float)
    outside = np.abs(values - target) > band * abs(target)
    return _time_after_last(outside, trace.index.to_numpy(dtype=float))


def _column(traces: Union[TraceSet, pd.DataFrame], selector: str) -> pd.Series:
    if isinstance(traces, TraceSet):
        return traces.signal(selector)
    if selector not in traces.columns:
        raise UnknownSignalError(selector, traces.columns)
    return traces[selector]


def steady_slope(current: np.ndarray, voltage: np.ndarray,
                 window_fraction: float = STEADY_WINDOW_FRACTION) -> Optional[float]:
    """
    Least-squares slope through the origin over the final samples

    Samples below VI_CURRENT_FLOOR of the peak current are ignored; if fewer
    than two remain in the window, the last two samples above the floor are used.
    """
    current = np.asarray(current, dtype=float)
    voltage = np.asarray(voltage, dtype=float)
    if current.size == 0:
        return None
    peak = float(np.max(np.abs(current)))
    if peak == 0.0:
        return None
    window = max(2, int(math.ceil(current.size * window_fraction)))
    start = max(0, current.size - window)
    above = np.abs(current) > VI_CURRENT_FLOOR * peak
    selected = start + np.flatnonzero(above[start:])
    if selected.size < 2:
        selected = np.flatnonzero(above)[-2:]
    if selected.size == 0:
        return None
    i_scaled = current[selected] / peak
    v = voltage[selected]
    return float(np.sum(v * i_scaled) / np.sum(i_scaled ** 2) / peak)


def extract_vi_curve(traces: Union[TraceSet, pd.DataFrame],
                     current: str = 'i_mem', voltage: str = 'v_mem') -> ViCurve:
    """Time-ordered memristor (i, v) samples plus the steady-state slope"""
    i_series = _column(traces, current)
    v_series = _column(traces, voltage)
    i_values = i_series.to_numpy(dtype=float)
    v_values = v_series.to_numpy(dtype=float)
    return ViCurve(
        time=i_series.index.to_numpy(dtype=float),
        current=i_values,
        voltage=v_values,
        steady_slope=steady_slope(i_values, v_values),
    )


def _sweep_member(spec: ExperimentSpec, value: float) -> Tuple[SweepRow, Optional[dict]]:
    try:
        _, metrics = ExperimentService().run_experiment(spec, save=False)
    except MemsimError as e:
        logger.error(f"Sweep member {spec.label} failed: {e}")
        return SweepRow(value=value, status=f"failed: {e}"), None
    return SweepRow.from_metrics(value, metrics), metrics.to_dict()


class ExperimentService:
    """Builds, runs and summarizes the increase/decrease resistance-copy circuits"""

    def __init__(self, store=None):
        self.store = store

    def netlist_text(self, spec: ExperimentSpec) -> str:
        """
        Netlist for an experiment

        The op-amp output is v1, its inputs are v2 (+) and v3 (-). R1/R2 divide
        v1 onto v3. Increase: memristor v1-v2 with its plus terminal at v2, R_ref
        v2-ground. Decrease: R_ref v1-v2, memristor v2-ground, plus at v2.
        """
        params = spec.memristor_params
        device_params = (
            f"ron={params.r_on!r} roff={params.r_off!r} rinit={params.r_init!r} "
            f"d={params.d!r} uv={params.mu_v!r} p={params.p}"
        )
        lines = [f"* {spec.kind} circuit: r_ref={spec.r_ref:g} r_init={spec.r_init:g}"]
        if spec.realization == 'subcircuit':
            if params.window_exponent_factor != 2:
                logger.warning("The subcircuit realization always uses window exponent 2p")
            lines.append(HP_MEMRISTOR_NETLIST.read_text(encoding='utf-8'))
            device = f"{HP_MEMRISTOR_SUBCKT} {device_params}"
        else:
            device = f"{MEMRISTOR_SUBCKT} {device_params} wexp={params.window_exponent_factor}"

        lines.append(
            f"{OPAMP_INSTANCE} v1 v2 v3 {OPAMP_SUBCKT} gain={spec.opamp_gain!r} "
            f"vsat={spec.supply!r} fp={spec.opamp_pole!r}"
        )
        lines.append(f"r1 v1 v3 {spec.r1!r}")
        lines.append(f"r2 v3 0 {spec.r2!r}")
        if spec.kind == 'increase':
            lines.append(f"{MEMRISTOR_INSTANCE} v2 v1 {device}")
            lines.append(f"rref v2 0 {spec.r_ref!r}")
        else:
            lines.append(f"rref v1 v2 {spec.r_ref!r}")
            lines.append(f"{MEMRISTOR_INSTANCE} v2 0 {device}")
        lines.append(f".tran {spec.transient.dt!r} {spec.transient.t_stop!r}")
        lines.append('.end')
        return '\n'.join(lines) + '\n'

    def _build(self, spec: ExperimentSpec, kind: str) -> Circuit:
        if spec.kind != kind:
            raise ConfigurationError(f"spec kind '{spec.kind}' cannot build the {kind} circuit")
        spec.validate()
        if spec.r1 != spec.r2:
            logger.warning(
                f"R1 ({spec.r1:g}) != R2 ({spec.r2:g}): v3 = v1*{spec.r2 / (spec.r1 + spec.r2):.4g}, "
                f"so the equilibrium no longer sits at R_mem = R_ref"
            )
        return flatten(parse_netlist(self.netlist_text(spec)))

    def build_increase_circuit(self, spec: ExperimentSpec) -> Circuit:
        return self._build(spec, 'increase')

    def build_decrease_circuit(self, spec: ExperimentSpec) -> Circuit:
        return self._build(spec, 'decrease')

    def build_circuit(self, spec: ExperimentSpec) -> Circuit:
        if spec.kind == 'increase':
            return self.build_increase_circuit(spec)
        return self.build_decrease_circuit(spec)

    @staticmethod
    def bias_hint(spec: ExperimentSpec) -> float:
        """Op-amp output rail: sign of (R_ref - R_init) mapped through the circuit orientation"""
        direction = 1.0 if spec.r_ref > spec.r_init else -1.0
        orientation = 1.0 if spec.kind == 'increase' else -1.0
        return direction * orientation * spec.supply

    def experiment_frame(self, traces: TraceSet, spec: ExperimentSpec) -> pd.DataFrame:
        """
        Experiment columns v1, v2, v3, i_mem, v_mem, x, r_mem

        i_mem and v_mem are measured from the op-amp side of the memristor.
        """
        v1 = traces.signal('v(v1)').to_numpy()
        v2 = traces.signal('v(v2)').to_numpy()
        device_current = traces.signal(f"i({MEMRISTOR_INSTANCE})").to_numpy()
        if spec.kind == 'increase':
            i_mem, v_mem = -device_current, v1 - v2
        else:
            i_mem, v_mem = device_current, v2
        frame = pd.DataFrame({
            'v1': v1,
            'v2': v2,
            'v3': traces.signal('v(v3)').to_numpy(),
            'i_mem': i_mem,
            'v_mem': v_mem,
            'x': traces.signal(f"x({MEMRISTOR_INSTANCE})").to_numpy(),
            'r_mem': traces.signal(f"r({MEMRISTOR_INSTANCE})").to_numpy(),
        }, index=traces.frame.index)
        frame.index.name = 'time'
        return frame[EXPERIMENT_COLUMNS]

    def compute_metrics(self, frame: pd.DataFrame, spec: ExperimentSpec) -> ExperimentMetrics:
        times = frame.index.to_numpy(dtype=float)
        r_mem = frame['r_mem']
        final_r = float(r_mem.iloc[-1])
        settling = {band: settling_time(r_mem, spec.r_ref, band) for band in SETTLING_BANDS}
        vi_curve = extract_vi_curve(frame)

        mismatch = np.abs(frame['v2'].to_numpy() - frame['v3'].to_numpy())
        match_time = _time_after_last(mismatch > VOLTAGE_MATCH_FRACTION * spec.supply, times)
        tail = max(1, int(math.ceil(len(frame) * QUIESCENCE_WINDOW_FRACTION)))
        v1_mean = float(np.mean(np.abs(frame['v1'].to_numpy()[-tail:])))

        metrics = ExperimentMetrics(
            name=spec.label,
            kind=spec.kind,
            r_ref=spec.r_ref,
            final_r=final_r,
            settling_time_2pct=settling[0.02],
            settling_time_5pct=settling[0.05],
            converged=abs(final_r - spec.r_ref) / spec.r_ref <= CONVERGENCE_TOLERANCE,
            steady_slope=vi_curve.steady_slope,
            voltage_match_time=match_time,
            steady_v1_mean=v1_mean,
            vi_curve=vi_curve,
        )
        if metrics.settling_time_5pct is None:
            logger.warning(f"{spec.label}: R_mem never settled within 5% of {spec.r_ref:g}")
        return metrics

    def run_experiment(self, spec: ExperimentSpec, save: bool = True
                       ) -> Tuple[TraceSet, ExperimentMetrics]:
        """
        Build the circuit, latch the op-amp per the bias rule and integrate

        Args:
            spec: Experiment settings
            save: Write '<label>.csv' and '<label>_metrics.json' when a store is attached

        Returns:
            Engine traces and the computed metrics
        """
        spec.validate()
        logger.info(f"Running experiment {spec.label} ({spec.realization} memristor)")
        try:
            circuit = self.build_circuit(spec)
            engine = MnaEngine(circuit, spec.transient)
            traces = engine.transient(bias_hints={OPAMP_INSTANCE: self.bias_hint(spec)})
        except ConfigurationError:
            raise
        except MemsimError as e:
            logger.error(f"Experiment {spec.label} failed: {e}")
            raise ExperimentError(f"{spec.label}: {e}") from e

        frame = self.experiment_frame(traces, spec)
        metrics = self.compute_metrics(frame, spec)
        logger.info(
            f"{spec.label}: final_r={metrics.final_r:.6g} ohm, "
            f"settling(5%)={metrics.settling_time_5pct}, converged={metrics.converged}"
        )
        if save and self.store is not None:
            self.store.save_traces(frame, spec.label)
            self.store.save_metrics(metrics, f"{spec.label}_metrics")
        return traces, metrics

    def sweep_specs(self, spec: ExperimentSpec, axis: str, values: Sequence[float]) -> List[ExperimentSpec]:
        if axis not in SWEEP_AXES:
            raise ConfigurationError(f"unknown sweep axis '{axis}' (choose from {', '.join(SWEEP_AXES)})")
        if len(values) < 2:
            raise ConfigurationError("a sweep needs at least two values")
        field_name = SWEEP_AXES[axis]
        specs = [
            spec.with_overrides(**{field_name: float(value)},
                                name=f"{spec.kind}_{axis}{float(value):g}")
            for value in values
        ]
        for member in specs:
            member.validate()
        return specs

    def run_sweep(self, spec: ExperimentSpec, axis: str, values: Sequence[float],
                  workers: Optional[int] = None) -> pd.DataFrame:
        """
        Run one experiment per value in parallel processes

        Failed members are reported in the status column; the others still run.
        """
        specs = self.sweep_specs(spec, axis, values)
        workers = min(workers or max_sweep_workers(), len(specs))
        logger.info(f"Sweeping {axis} over {list(values)} with {workers} worker(s)")

        if workers <= 1:
            results = [_sweep_member(member, value) for member, value in zip(specs, values)]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_sweep_member, specs, [float(v) for v in values]))

        rows = []
        for member, (row, metrics) in zip(specs, results):
            rows.append(row.to_dict())
            if row.ok and row.settling_time_5pct is None:
                logger.warning(f"Sweep member {member.label} did not settle")
            if metrics is not None and self.store is not None:
                self.store.save_metrics(metrics, f"{member.label}_metrics")

        summary = pd.DataFrame(rows)
        if self.store is not None:
            self.store.save_sweep_summary(summary, f"{spec.kind}_sweep_{axis}")
        return summary

    def refinement_study(self, spec: ExperimentSpec, dts: Sequence[float],
                         reltols: Sequence[float]) -> pd.DataFrame:
        """final_r per (dt, reltol); relative_change is measured against the finest setting"""
        rows: List[Dict] = []
        for dt in dts:
            for reltol in reltols:
                member = spec.with_overrides(
                    transient=spec.transient.with_overrides(dt=dt, reltol=reltol),
                    name=f"{spec.label}_dt{dt:g}_reltol{reltol:g}",
                )
                _, metrics = self.run_experiment(member, save=False)
                rows.append({
                    'dt': dt,
                    'reltol': reltol,
                    'final_r': metrics.final_r,
                    'settling_time_5pct': metrics.settling_time_5pct,
                })
        table = pd.DataFrame(rows)
        reference = table.sort_values(['dt', 'reltol']).iloc[0]['final_r']
        table['relative_change'] = (table['final_r'] - reference).abs() / reference
        if self.store is not None:
            self.store.save_table(table, f"{spec.label}_refinement")
        return table
