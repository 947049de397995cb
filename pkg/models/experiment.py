"""
Experiment models: closed-loop resistance-copy run settings, metrics and sweep rows
"""

from dataclasses import dataclass, field, asdict, replace
from typing import List, Optional, Tuple

import numpy as np

from config.settings import (
    EXPERIMENT_KINDS, EXPERIMENT_DEFAULTS, R1_DEFAULT, R2_DEFAULT, SUPPLY_VOLTAGE,
    OPAMP_GAIN, OPAMP_POLE_HZ, REALIZATIONS,
)
from models.analysis import TransientConfig
from models.devices import MemristorParams
from services.exceptions import ConfigurationError, DeviceError


@dataclass(frozen=True)
class ExperimentSpec:
    """One increase or decrease run"""
    kind: str = 'increase'
    r_ref: float = EXPERIMENT_DEFAULTS['increase']['r_ref']
    r_init: float = EXPERIMENT_DEFAULTS['increase']['r_init']
    r1: float = R1_DEFAULT
    r2: float = R2_DEFAULT
    supply: float = SUPPLY_VOLTAGE
    memristor: MemristorParams = field(default_factory=MemristorParams)
    opamp_gain: float = OPAMP_GAIN
    opamp_pole: float = OPAMP_POLE_HZ
    transient: TransientConfig = field(default_factory=TransientConfig)
    realization: str = 'native'
    name: Optional[str] = None

    @classmethod
    def for_kind(cls, kind: str, **overrides) -> 'ExperimentSpec':
        """Spec with the kind's default R_ref / R_init, then overrides"""
        if kind not in EXPERIMENT_DEFAULTS:
            raise ConfigurationError(
                f"unknown experiment kind '{kind}' (choose from {', '.join(EXPERIMENT_KINDS)})"
            )
        values = dict(EXPERIMENT_DEFAULTS[kind])
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(kind=kind, **values)

    @property
    def label(self) -> str:
        return self.name or f"{self.kind}_rref{self.r_ref:g}_supply{self.supply:g}"

    @property
    def memristor_params(self) -> MemristorParams:
        """Device parameters with r_init taken from this spec"""
        try:
            return self.memristor.with_r_init(self.r_init)
        except DeviceError as e:
            raise ConfigurationError(str(e))

    def with_overrides(self, **changes) -> 'ExperimentSpec':
        return replace(self, **changes)

    def validate(self) -> 'ExperimentSpec':
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigurationError(
                f"unknown experiment kind '{self.kind}' (choose from {', '.join(EXPERIMENT_KINDS)})"
            )
        if self.realization not in REALIZATIONS:
            raise ConfigurationError(
                f"unknown realization '{self.realization}' (choose from {', '.join(REALIZATIONS)})"
            )
        if min(self.r_ref, self.r1, self.r2) <= 0:
            raise ConfigurationError("r_ref, r1 and r2 must be positive")
        if self.supply <= 0:
            raise ConfigurationError(f"supply must be positive (got {self.supply})")
        if self.opamp_gain <= 0 or self.opamp_pole < 0:
            raise ConfigurationError("op-amp gain must be positive and its pole non-negative")
        params = self.memristor_params
        if not (params.r_on < self.r_ref < params.r_off):
            raise ConfigurationError(
                f"r_ref={self.r_ref:g} is outside the memristor range ({params.r_on:g}, {params.r_off:g})"
            )
        if self.kind == 'increase' and not self.r_ref > self.r_init:
            raise ConfigurationError(
                f"the increase circuit needs r_ref > r_init (got r_ref={self.r_ref:g}, "
                f"r_init={self.r_init:g}); use the decrease circuit"
            )
        if self.kind == 'decrease' and not self.r_ref < self.r_init:
            raise ConfigurationError(
                f"the decrease circuit needs r_ref < r_init (got r_ref={self.r_ref:g}, "
                f"r_init={self.r_init:g}); use the increase circuit"
            )
        self.transient.validate()
        return self

    def to_dict(self) -> dict:
        """Convert to dictionary"""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'ExperimentSpec':
        """Create from dictionary"""
        data = dict(data)
        if isinstance(data.get('memristor'), dict):
            data['memristor'] = MemristorParams.from_dict(data['memristor'])
        if isinstance(data.get('transient'), dict):
            data['transient'] = TransientConfig.from_dict(data['transient'])
        return cls(**data)


@dataclass
class ViCurve:
    """Memristor branch (current, voltage) samples in the drive direction"""
    time: np.ndarray
    current: np.ndarray
    voltage: np.ndarray
    steady_slope: Optional[float] = None

    def __len__(self) -> int:
        return len(self.time)

    def pairs(self) -> List[Tuple[float, float]]:
        return list(zip(self.current.tolist(), self.voltage.tolist()))


@dataclass
class ExperimentMetrics:
    """Summary of one run; settling times are None when the band is never held"""
    name: str
    kind: str
    r_ref: float
    final_r: float
    settling_time_2pct: Optional[float]
    settling_time_5pct: Optional[float]
    converged: bool
    steady_slope: Optional[float]
    voltage_match_time: Optional[float]
    steady_v1_mean: float
    vi_curve: Optional[ViCurve] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        """JSON-ready dictionary (the V-I samples are stored in the trace CSV)"""
        return {
            'name': self.name,
            'kind': self.kind,
            'r_ref': self.r_ref,
            'final_r': self.final_r,
            'settling_time_2pct': self.settling_time_2pct,
            'settling_time_5pct': self.settling_time_5pct,
            'converged': self.converged,
            'steady_slope': self.steady_slope,
            'voltage_match_time': self.voltage_match_time,
            'steady_v1_mean': self.steady_v1_mean,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'ExperimentMetrics':
        """Create from dictionary"""
        return cls(**data)


@dataclass
class SweepRow:
    """One sweep member; status is 'ok' or 'failed: <reason>'"""
    value: float
    settling_time_2pct: Optional[float] = None
    settling_time_5pct: Optional[float] = None
    final_r: Optional[float] = None
    converged: bool = False
    status: str = 'ok'

    @property
    def ok(self) -> bool:
        return self.status == 'ok'

    def to_dict(self) -> dict:
        """Convert to dictionary"""
        return asdict(self)

    @classmethod
    def from_metrics(cls, value: float, metrics: ExperimentMetrics) -> 'SweepRow':
        return cls(
            value=value,
            settling_time_2pct=metrics.settling_time_2pct,
            settling_time_5pct=metrics.settling_time_5pct,
            final_r=metrics.final_r,
            converged=metrics.converged,
        )
