"""
Closed-form device mathematics: HP memristor, capacitor companion and op-amp transfer
"""

import logging
from typing import Tuple

import numpy as np

from config.settings import (
    STATE_CLAMP_TOLERANCE, STATE_NEWTON_MAX_ITERS, STATE_NEWTON_TOLERANCE,
)
from models.devices import MemristorParams, OpAmpModel
from services.exceptions import StateDomainError, StateStepConvergenceError

logger = logging.getLogger(__name__)

METHODS = ('explicit-euler', 'implicit')


def clamp_state(x: float) -> float:
    return min(1.0, max(0.0, x))


def _check_fraction(x: float) -> float:
    if not (-STATE_CLAMP_TOLERANCE <= x <= 1.0 + STATE_CLAMP_TOLERANCE):
        raise StateDomainError(f"state x={x} outside [0, 1]")
    return clamp_state(x)


def memristance(x: float, params: MemristorParams) -> float:
    """R(x) = r_off - (r_off - r_on) * x"""
    x = _check_fraction(x)
    return params.r_off - params.delta_r * x


def memristance_unchecked(x: float, params: MemristorParams) -> float:
    """R(x) without the domain check, for Newton iterates"""
    return params.r_off - params.delta_r * x


def memristance_array(x: np.ndarray, params: MemristorParams) -> np.ndarray:
    """Vectorized R(x) over a recorded state trace (clamped)"""
    return params.r_off - params.delta_r * np.clip(np.asarray(x, dtype=float), 0.0, 1.0)


def window(x: float, p: int, exponent_factor: int = 2) -> float:
    """Joglekar window 1 - (2x - 1)**(exponent_factor * p)"""
    return 1.0 - (2.0 * x - 1.0) ** (exponent_factor * p)


def window_derivative(x: float, p: int, exponent_factor: int = 2) -> float:
    n = exponent_factor * p
    return -2.0 * n * (2.0 * x - 1.0) ** (n - 1)


def state_derivative(x: float, i: float, params: MemristorParams) -> float:
    """
    dx/dt = k * i * window(x)

    Positive i enters the marked (plus) terminal, raising x and lowering R.
    """
    _check_fraction(x)
    return params.k * i * window(x, params.p, params.window_exponent_factor)


def x_from_resistance(r: float, params: MemristorParams) -> float:
    """Inverse of memristance"""
    if not (params.r_on <= r <= params.r_off):
        raise StateDomainError(
            f"resistance {r} outside [{params.r_on}, {params.r_off}]"
        )
    return (params.r_off - r) / params.delta_r


def initial_state(params: MemristorParams) -> float:
    return x_from_resistance(params.r_init, params)


def integrate_state_step(x: float, i: float, dt: float, params: MemristorParams,
                         method: str = 'implicit') -> float:
    """
    Advance x by one step of length dt under constant current i

    The implicit method solves y = x + dt * k * i * window(y) by scalar Newton.
    Result is clamped to [0, 1].
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive (got {dt})")
    if method not in METHODS:
        raise ValueError(f"unknown integration method '{method}'")
    x = _check_fraction(x)
    if i == 0.0:
        return x

    p, factor = params.p, params.window_exponent_factor
    drive = dt * params.k * i
    explicit = clamp_state(x + drive * window(x, p, factor))
    if method == 'explicit-euler':
        return explicit

    y = explicit
    for _ in range(STATE_NEWTON_MAX_ITERS):
        residual = y - x - drive * window(y, p, factor)
        slope = 1.0 - drive * window_derivative(y, p, factor)
        if slope == 0.0:
            break
        y_next = clamp_state(y - residual / slope)
        if abs(y_next - y) <= STATE_NEWTON_TOLERANCE:
            return y_next
        y = y_next
    raise StateStepConvergenceError(
        f"implicit state update did not converge (x={x}, i={i}, dt={dt})"
    )


def opamp_output(v_plus: float, v_minus: float, model: OpAmpModel) -> float:
    """Hard-clamped finite-gain transfer"""
    target = model.open_loop_gain * (v_plus - v_minus)
    return min(model.v_sat, max(-model.v_sat, target))


def opamp_slope(v_plus: float, v_minus: float, model: OpAmpModel) -> float:
    """d(opamp_output)/d(v_plus - v_minus); zero in saturation"""
    target = model.open_loop_gain * (v_plus - v_minus)
    return model.open_loop_gain if abs(target) < model.v_sat else 0.0


def capacitor_companion(capacitance: float, dt: float, integrator: str,
                        v_prev: float, i_prev: float) -> Tuple[float, float]:
    """
    Companion model i = geq * v - ieq for one implicit step

    backward Euler: geq = C/dt, ieq = geq * v_prev
    trapezoidal:    geq = 2C/dt, ieq = geq * v_prev + i_prev
    """
    if integrator == 'be':
        geq = capacitance / dt
        return geq, geq * v_prev
    geq = 2.0 * capacitance / dt
    return geq, geq * v_prev + i_prev
