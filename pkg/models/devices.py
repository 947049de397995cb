"""
Device parameter models: HP memristor, its internal state and the behavioral op-amp
"""

import math
from dataclasses import dataclass, asdict
from typing import Optional, Dict, Any

from config.settings import (
    MEMRISTOR_R_ON, MEMRISTOR_R_OFF, MEMRISTOR_R_INIT, MEMRISTOR_LENGTH,
    MEMRISTOR_MOBILITY, MEMRISTOR_WINDOW_P, WINDOW_EXPONENT_FACTOR,
    OPAMP_GAIN, OPAMP_POLE_HZ, SUPPLY_VOLTAGE,
)
from services.exceptions import DeviceParameterError, StateDomainError

# Netlist parameter names (lowercase) for each field
NETLIST_PARAM_NAMES = {
    'ron': 'r_on',
    'roff': 'r_off',
    'rinit': 'r_init',
    'd': 'd',
    'uv': 'mu_v',
    'p': 'p',
    'wexp': 'window_exponent_factor',
}


@dataclass(frozen=True)
class MemristorParams:
    """HP memristor constants; k = mu_v * r_on / d**2 is derived"""
    r_on: float = MEMRISTOR_R_ON
    r_off: float = MEMRISTOR_R_OFF
    d: float = MEMRISTOR_LENGTH
    mu_v: float = MEMRISTOR_MOBILITY
    p: int = MEMRISTOR_WINDOW_P
    r_init: float = MEMRISTOR_R_INIT
    window_exponent_factor: int = WINDOW_EXPONENT_FACTOR

    def __post_init__(self):
        if not (0 < self.r_on < self.r_off):
            raise DeviceParameterError(
                f"memristor requires 0 < r_on < r_off (got r_on={self.r_on}, r_off={self.r_off})"
            )
        if not (self.r_on <= self.r_init <= self.r_off):
            raise DeviceParameterError(
                f"r_init={self.r_init} outside [{self.r_on}, {self.r_off}]"
            )
        if self.d <= 0 or self.mu_v <= 0:
            raise DeviceParameterError("memristor requires d > 0 and mu_v > 0")
        if int(self.p) != self.p or self.p < 1:
            raise DeviceParameterError(f"window sharpness p must be a positive integer (got {self.p})")
        if int(self.window_exponent_factor) != self.window_exponent_factor or self.window_exponent_factor < 1:
            raise DeviceParameterError("window exponent factor must be a positive integer")
        object.__setattr__(self, 'p', int(self.p))
        object.__setattr__(self, 'window_exponent_factor', int(self.window_exponent_factor))

    @property
    def k(self) -> float:
        return self.mu_v * self.r_on / self.d ** 2

    @property
    def delta_r(self) -> float:
        return self.r_off - self.r_on

    @property
    def window_exponent(self) -> int:
        return self.window_exponent_factor * self.p

    def with_r_init(self, r_init: float) -> 'MemristorParams':
        data = self.to_dict()
        data['r_init'] = r_init
        return MemristorParams.from_dict(data)

    def to_dict(self) -> dict:
        """Convert to dictionary"""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'MemristorParams':
        """Create from dictionary"""
        return cls(**data)

    @classmethod
    def from_netlist_params(cls, params: Dict[str, float]) -> 'MemristorParams':
        """Create from lowercase netlist parameters (ron, roff, rinit, d, uv, p, wexp)"""
        kwargs: Dict[str, Any] = {}
        for key, field_name in NETLIST_PARAM_NAMES.items():
            if key in params:
                kwargs[field_name] = params[key]
        return cls(**kwargs)


@dataclass(frozen=True)
class MemristorState:
    """Doped-region fraction x = w / D"""
    x: float

    def __post_init__(self):
        if not (0.0 <= self.x <= 1.0) or math.isnan(self.x):
            raise StateDomainError(f"memristor state x={self.x} outside [0, 1]")


@dataclass(frozen=True)
class OpAmpModel:
    """Saturating finite-gain amplifier with an optional single pole"""
    open_loop_gain: float = OPAMP_GAIN
    v_sat: float = SUPPLY_VOLTAGE
    pole_freq: Optional[float] = OPAMP_POLE_HZ

    def __post_init__(self):
        if self.open_loop_gain <= 0 or self.v_sat <= 0:
            raise DeviceParameterError("op-amp requires open_loop_gain > 0 and v_sat > 0")
        if self.pole_freq is not None and self.pole_freq < 0:
            raise DeviceParameterError("op-amp pole frequency must be non-negative")
        if self.pole_freq == 0:
            object.__setattr__(self, 'pole_freq', None)

    @property
    def tau(self) -> Optional[float]:
        if self.pole_freq is None:
            return None
        return 1.0 / (2.0 * math.pi * self.pole_freq)

    def to_dict(self) -> dict:
        """Convert to dictionary"""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'OpAmpModel':
        """Create from dictionary"""
        return cls(**data)

    @classmethod
    def from_netlist_params(cls, params: Dict[str, float]) -> 'OpAmpModel':
        """Create from lowercase netlist parameters (gain, vsat, fp)"""
        return cls(
            open_loop_gain=params.get('gain', OPAMP_GAIN),
            v_sat=params.get('vsat', SUPPLY_VOLTAGE),
            pole_freq=params.get('fp', OPAMP_POLE_HZ),
        )
