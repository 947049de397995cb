"""
Analysis models: transient configuration, MNA layout/system, solutions and recorded traces
"""

from dataclasses import dataclass, field, asdict, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config.settings import (
    T_STOP_DEFAULT, DT_DEFAULT, INTEGRATOR_DEFAULT, INTEGRATORS, RELTOL,
    ABSTOL_VOLTAGE, ABSTOL_CURRENT, ABSTOL_STATE, MAX_NEWTON_ITERS, DT_MIN_DIVISOR,
    DT_MAX_FRACTION, LTE_RELTOL, LTE_ABSTOL,
)
from models.circuit import (
    GROUND, Circuit, CapacitorElement, ResistorElement, MemristorElement, OpAmpElement,
    MemristorProbe, BRANCH_ELEMENTS,
)
from services.device_models import memristance_array, memristance_unchecked, clamp_state
from services.exceptions import ConfigurationError, EvaluationError, UnknownSignalError


@dataclass(frozen=True)
class TransientConfig:
    """Time-stepping settings; dt_min/dt_max default from dt and t_stop"""
    t_stop: float = T_STOP_DEFAULT
    dt: float = DT_DEFAULT
    dt_min: Optional[float] = None
    dt_max: Optional[float] = None
    integrator: str = INTEGRATOR_DEFAULT
    reltol: float = RELTOL
    abstol_current: float = ABSTOL_CURRENT
    abstol_voltage: float = ABSTOL_VOLTAGE
    abstol_state: float = ABSTOL_STATE
    max_newton_iters: int = MAX_NEWTON_ITERS
    adaptive: bool = False
    lte_reltol: float = LTE_RELTOL
    lte_abstol: float = LTE_ABSTOL

    def __post_init__(self):
        if self.dt_min is None and self.dt > 0:
            object.__setattr__(self, 'dt_min', self.dt / DT_MIN_DIVISOR)
        if self.dt_max is None and self.dt > 0:
            object.__setattr__(self, 'dt_max', max(self.dt, self.t_stop * DT_MAX_FRACTION))

    @property
    def order(self) -> int:
        """Local accuracy order of the integrator"""
        return 1 if self.integrator == 'be' else 2

    def validate(self) -> 'TransientConfig':
        if self.t_stop <= 0:
            raise ConfigurationError(f"t_stop must be positive (got {self.t_stop})")
        if self.dt <= 0:
            raise ConfigurationError(f"dt must be positive (got {self.dt})")
        if not (0 < self.dt_min <= self.dt <= self.dt_max):
            raise ConfigurationError(
                f"need 0 < dt_min <= dt <= dt_max (got {self.dt_min}, {self.dt}, {self.dt_max})"
            )
        if self.integrator not in INTEGRATORS:
            raise ConfigurationError(
                f"unknown integrator '{self.integrator}' (choose from {', '.join(INTEGRATORS)})"
            )
        if min(self.reltol, self.abstol_current, self.abstol_voltage, self.abstol_state) <= 0:
            raise ConfigurationError("tolerances must be positive")
        if self.max_newton_iters < 1:
            raise ConfigurationError("max_newton_iters must be at least 1")
        if self.lte_reltol <= 0 or self.lte_abstol <= 0:
            raise ConfigurationError("LTE tolerances must be positive")
        return self

    def with_overrides(self, **changes) -> 'TransientConfig':
        """Copy with changes; derived step bounds are recomputed unless given"""
        if 'dt' in changes or 't_stop' in changes:
            changes.setdefault('dt_min', None)
            changes.setdefault('dt_max', None)
        return replace(self, **changes)

    def to_dict(self) -> dict:
        """Convert to dictionary"""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'TransientConfig':
        """Create from dictionary"""
        return cls(**data)


@dataclass(frozen=True)
class StampContext:
    """How one assembly treats dynamic elements and homotopy knobs"""
    mode: str = 'dc'
    time: float = 0.0
    h: float = 0.0
    integrator: str = INTEGRATOR_DEFAULT
    gmin: float = 0.0
    source_scale: float = 1.0
    forced: Tuple[Tuple[str, float], ...] = ()

    @property
    def forced_outputs(self) -> Dict[str, float]:
        return dict(self.forced)


@dataclass(frozen=True)
class DeviceHistory:
    """
    Accepted values at the previous time point

    Capacitors keep voltage and current, native memristors keep x and dx/dt,
    op-amp lags keep s and ds/dt. At DC, mem_x is the held initial state.
    """
    cap_v: Dict[str, float] = field(default_factory=dict)
    cap_i: Dict[str, float] = field(default_factory=dict)
    mem_x: Dict[str, float] = field(default_factory=dict)
    mem_g: Dict[str, float] = field(default_factory=dict)
    lag_s: Dict[str, float] = field(default_factory=dict)
    lag_f: Dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class MnaLayout:
    """
    Unknown ordering: node voltages, branch currents, then state unknowns

    Branch currents flow from an element's first (plus) terminal through the
    element to its second terminal.
    """
    circuit: Circuit
    node_index: Dict[str, int]
    branch_index: Dict[str, int]
    state_index: Dict[str, int]
    kinds: Tuple[str, ...]
    labels: Tuple[str, ...]

    @classmethod
    def from_circuit(cls, circuit: Circuit) -> 'MnaLayout':
        node_index: Dict[str, int] = {}
        kinds: List[str] = []
        labels: List[str] = []
        for node in circuit.nodes:
            if node == GROUND:
                continue
            node_index[node] = len(kinds)
            kinds.append('v')
            labels.append(f"v({node})")

        branch_index: Dict[str, int] = {}
        for el in circuit.elements:
            if isinstance(el, BRANCH_ELEMENTS):
                branch_index[el.name] = len(kinds)
                kinds.append('i')
                labels.append(f"i({el.name})")

        state_index: Dict[str, int] = {}
        for el in circuit.elements:
            if isinstance(el, MemristorElement):
                state_index[el.name] = len(kinds)
                kinds.append('x')
                labels.append(f"x({el.name})")
            elif isinstance(el, OpAmpElement) and el.model.tau is not None:
                state_index[el.name] = len(kinds)
                kinds.append('s')
                labels.append(f"s({el.name})")

        return cls(circuit, node_index, branch_index, state_index, tuple(kinds), tuple(labels))

    @property
    def size(self) -> int:
        return len(self.kinds)

    @property
    def node_rows(self) -> np.ndarray:
        return np.array(list(self.node_index.values()), dtype=int)

    def col(self, node: str) -> int:
        """Unknown index of a node voltage; -1 for ground"""
        if node == GROUND:
            return -1
        try:
            return self.node_index[node]
        except KeyError:
            raise EvaluationError(f"unknown node '{node}'")

    def voltage(self, u: np.ndarray, node: str) -> float:
        index = self.col(node)
        return 0.0 if index < 0 else float(u[index])

    def memristor_state(self, u: np.ndarray, name: str) -> float:
        return clamp_state(float(u[self.state_index[name]]))

    def current(self, u: np.ndarray, name: str) -> float:
        """Branch current, or the derived current of a resistor / native memristor"""
        if name in self.branch_index:
            return float(u[self.branch_index[name]])
        if not self.circuit.has_element(name):
            raise EvaluationError(f"unknown element '{name}'")
        el = self.circuit.element(name)
        if isinstance(el, ResistorElement):
            return (self.voltage(u, el.n1) - self.voltage(u, el.n2)) / el.resistance
        if isinstance(el, MemristorElement):
            v = self.voltage(u, el.plus) - self.voltage(u, el.minus)
            return v / memristance_unchecked(self.memristor_state(u, name), el.params)
        raise EvaluationError(f"element '{name}' has no current unknown")

    def current_partials(self, u: np.ndarray, name: str) -> List[Tuple[int, float]]:
        """d(current)/d(unknown) as (column, value) pairs, ground omitted"""
        if name in self.branch_index:
            return [(self.branch_index[name], 1.0)]
        el = self.circuit.element(name)
        if isinstance(el, ResistorElement):
            g = 1.0 / el.resistance
            pairs = [(self.col(el.n1), g), (self.col(el.n2), -g)]
        elif isinstance(el, MemristorElement):
            x = self.memristor_state(u, name)
            r = memristance_unchecked(x, el.params)
            v = self.voltage(u, el.plus) - self.voltage(u, el.minus)
            pairs = [
                (self.col(el.plus), 1.0 / r),
                (self.col(el.minus), -1.0 / r),
                (self.state_index[name], v * el.params.delta_r / r ** 2),
            ]
        else:
            raise EvaluationError(f"element '{name}' has no current unknown")
        return [(col, value) for col, value in pairs if col >= 0]

    def unknown_tolerances(self, config: TransientConfig) -> np.ndarray:
        by_kind = {
            'v': config.abstol_voltage,
            'i': config.abstol_current,
            'x': config.abstol_state,
            's': config.abstol_voltage,
        }
        return np.array([by_kind[kind] for kind in self.kinds])

    def row_tolerances(self, config: TransientConfig) -> np.ndarray:
        """Residual scale per row: KCL and capacitor rows are currents"""
        tolerances = self.unknown_tolerances(config)
        for index in self.node_index.values():
            tolerances[index] = config.abstol_current
        for name, index in self.branch_index.items():
            if isinstance(self.circuit.element(name), CapacitorElement):
                tolerances[index] = config.abstol_current
            else:
                tolerances[index] = config.abstol_voltage
        return tolerances


@dataclass
class MnaSystem:
    """F(u) = 0 with Jacobian J = dF/du at the assembly point u"""
    jacobian: np.ndarray
    residual: np.ndarray
    u: np.ndarray
    layout: MnaLayout

    @property
    def kcl_residual(self) -> float:
        """Largest KCL imbalance over node rows (A)"""
        rows = self.layout.node_rows
        if rows.size == 0:
            return 0.0
        return float(np.max(np.abs(self.residual[rows])))

    def worst_row(self, scale: Optional[np.ndarray] = None) -> str:
        scaled = np.abs(self.residual) if scale is None else np.abs(self.residual) / scale
        if scaled.size == 0:
            return ''
        return self.layout.labels[int(np.argmax(scaled))]


@dataclass(frozen=True)
class Solution:
    """Solved unknown vector at one time point"""
    u: np.ndarray
    t: float
    layout: MnaLayout
    iterations: int = 0
    kcl_residual: float = 0.0

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        u.setflags(write=False)
        object.__setattr__(self, 'u', u)

    def voltage(self, node: str) -> float:
        return self.layout.voltage(self.u, node)

    def current(self, element: str) -> float:
        return self.layout.current(self.u, element)

    def state(self, name: str) -> float:
        """Native memristor x or op-amp lag state"""
        if name not in self.layout.state_index:
            raise EvaluationError(f"'{name}' has no state unknown")
        return float(self.u[self.layout.state_index[name]])

    @property
    def memristor_states(self) -> Dict[str, float]:
        circuit = self.layout.circuit
        states = {}
        for probe in circuit.memristors:
            if probe.state_kind == 'x':
                states[probe.name] = self.layout.memristor_state(self.u, probe.state_ref)
            else:
                states[probe.name] = self.voltage(probe.state_ref)
        return states


def _normalize(selector: str) -> str:
    return ''.join(selector.split()).lower()


@dataclass
class TraceSet:
    """
    Recorded signals on a shared, strictly increasing time grid

    Columns are v(node), i(element) and x(memristor); r(memristor) is derived
    from the recorded x on request.
    """
    frame: pd.DataFrame
    memristors: Dict[str, MemristorProbe] = field(default_factory=dict)
    kcl_residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    newton_iterations: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def time(self) -> np.ndarray:
        return self.frame.index.to_numpy()

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def signal_names(self) -> List[str]:
        return list(self.frame.columns) + [f"r({name})" for name in self.memristors]

    def signal(self, selector: str) -> pd.Series:
        key = _normalize(selector)
        if key in self.frame.columns:
            return self.frame[key]
        if key.startswith('r(') and key.endswith(')'):
            name = key[2:-1]
            probe = self.memristors.get(name)
            if probe is not None and f"x({name})" in self.frame.columns:
                values = memristance_array(self.frame[f"x({name})"].to_numpy(), probe.params)
                return pd.Series(values, index=self.frame.index, name=key)
        raise UnknownSignalError(selector, self.signal_names)

    def select(self, selectors: Optional[Sequence[str]] = None) -> pd.DataFrame:
        """Frame of the requested signals (all signals by default), index named time"""
        names = self.signal_names if not selectors else [_normalize(s) for s in selectors]
        frame = pd.DataFrame({name: self.signal(name).to_numpy() for name in names},
                             index=self.frame.index)
        frame.index.name = 'time'
        return frame
