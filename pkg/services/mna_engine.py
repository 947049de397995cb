"""
Modified nodal analysis engine: assembly, damped Newton, DC operating point and transient
"""

import math
import time
import logging
from dataclasses import replace
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd

from config.settings import GMIN_LADDER, SOURCE_STEPS, MAX_BACKTRACKS
from models.analysis import (
    TransientConfig, StampContext, DeviceHistory, MnaLayout, MnaSystem, Solution, TraceSet,
)
from models.circuit import (
    GROUND, Circuit, ResistorElement, CapacitorElement, VoltageSourceElement, VcvsElement,
    VccsElement, OpAmpElement, MemristorElement,
)
from services.device_models import (
    memristance_unchecked, memristance_array, window, window_derivative, initial_state,
    capacitor_companion, opamp_output, opamp_slope, clamp_state,
)
from services.exceptions import (
    AssemblyError, SingularMatrixError, NewtonConvergenceError, DcConvergenceError,
    TimestepTooSmallError, NonFiniteSolutionError, EvaluationError,
)
from services.expression_service import evaluate_expression

logger = logging.getLogger(__name__)

_STEP_FAILURES = (NewtonConvergenceError, SingularMatrixError)

Partials = List[Tuple[int, float]]


def _flow(F: np.ndarray, J: np.ndarray, a: int, b: int, value: float, partials: Partials):
    """Current `value` leaves node row a and enters node row b"""
    if a >= 0:
        F[a] += value
        for col, d in partials:
            J[a, col] += d
    if b >= 0:
        F[b] -= value
        for col, d in partials:
            J[b, col] -= d


def _terminal_partials(a: int, b: int, g: float) -> Partials:
    return [(col, value) for col, value in ((a, g), (b, -g)) if col >= 0]


class _Iterate:
    """Read access to a Newton iterate for the expression evaluator"""
    __slots__ = ('layout', 'u')

    def __init__(self, layout: MnaLayout, u: np.ndarray):
        self.layout = layout
        self.u = u

    def voltage(self, node: str) -> float:
        return self.layout.voltage(self.u, node)

    def current(self, name: str) -> float:
        return self.layout.current(self.u, name)


def _scaled_norm(residual: np.ndarray, row_tolerances: np.ndarray) -> float:
    return float(np.linalg.norm(residual / row_tolerances))


def _finite(system: MnaSystem) -> bool:
    return bool(np.all(np.isfinite(system.residual)) and np.all(np.isfinite(system.jacobian)))


def newton_solve(build: Callable[[np.ndarray], MnaSystem],
                 u0: np.ndarray,
                 config: TransientConfig,
                 project: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                 t: float = 0.0) -> Solution:
    """
    Damped Newton on F(u) = 0

    Converged when every update satisfies |du| <= abstol + reltol*|u| for its
    unknown kind and the KCL residual is within abstol_current on every node row.
    The reported iteration count excludes the final verifying pass.
    """
    project = project or (lambda u: u)
    u = project(np.array(u0, dtype=float))
    try:
        system = build(u)
    except EvaluationError as e:
        raise NewtonConvergenceError(f"cannot evaluate the initial guess at t={t:g}: {e}", 0)
    layout = system.layout
    unknown_tolerances = layout.unknown_tolerances(config)
    row_tolerances = layout.row_tolerances(config)

    for iteration in range(1, config.max_newton_iters + 1):
        if not _finite(system):
            raise NewtonConvergenceError(
                f"non-finite residual at t={t:g}", iteration, system.worst_row(row_tolerances)
            )
        try:
            delta = np.linalg.solve(system.jacobian, -system.residual)
        except np.linalg.LinAlgError:
            raise SingularMatrixError(f"singular MNA matrix at t={t:g}")
        if not np.all(np.isfinite(delta)):
            raise NewtonConvergenceError(f"non-finite Newton update at t={t:g}", iteration)

        step_ok = bool(np.all(np.abs(delta) <= unknown_tolerances + config.reltol * np.abs(u)))
        if step_ok and system.kcl_residual <= config.abstol_current:
            return Solution(project(u + delta), t, layout,
                            iterations=max(iteration - 1, 1), kcl_residual=system.kcl_residual)

        u, system = _damped_update(build, project, u, delta, system, row_tolerances, t, iteration)

    worst = system.worst_row(row_tolerances)
    raise NewtonConvergenceError(
        f"Newton did not converge in {config.max_newton_iters} iterations at t={t:g} (worst: {worst})",
        config.max_newton_iters, worst,
    )


def _damped_update(build, project, u, delta, system, row_tolerances, t, iteration):
    """Halve the step until the scaled residual norm drops; else take the full step"""
    norm0 = _scaled_norm(system.residual, row_tolerances)
    scale = 1.0
    for _ in range(MAX_BACKTRACKS + 1):
        trial = project(u + scale * delta)
        try:
            trial_system = build(trial)
        except EvaluationError:
            trial_system = None
        if (trial_system is not None and _finite(trial_system)
                and _scaled_norm(trial_system.residual, row_tolerances) < norm0):
            return trial, trial_system
        scale *= 0.5
    trial = project(u + delta)
    try:
        return trial, build(trial)
    except EvaluationError as e:
        raise NewtonConvergenceError(f"evaluation failed at t={t:g}: {e}", iteration)


class MnaEngine:
    """
    Assembles and solves one flattened circuit

    Unknowns are node voltages, branch currents of voltage-defined elements and
    capacitors, native memristor states and op-amp lag states.
    """

    def __init__(self, circuit: Circuit, config: Optional[TransientConfig] = None):
        self.circuit = circuit
        self.config = (config or TransientConfig()).validate()
        self.layout = MnaLayout.from_circuit(circuit)
        self._check_voltage_loops()
        self._memristor_rows = [
            self.layout.state_index[el.name] for el in circuit.elements_of(MemristorElement)
        ]

    def _check_voltage_loops(self):
        parent: Dict[str, str] = {}

        def find(node: str) -> str:
            parent.setdefault(node, node)
            while parent[node] != node:
                parent[node] = parent[parent[node]]
                node = parent[node]
            return node

        for el in self.circuit.elements:
            if isinstance(el, (VoltageSourceElement, VcvsElement)):
                a, b = el.n_plus, el.n_minus
            elif isinstance(el, OpAmpElement):
                a, b = el.out, GROUND
            else:
                continue
            root_a, root_b = find(a), find(b)
            if root_a == root_b:
                raise AssemblyError(
                    f"voltage-defined element '{el.name}' closes a loop of voltage sources"
                )
            parent[root_a] = root_b

    # ------------------------------------------------------------------ assembly

    def _expression_partials(self, u: np.ndarray, grad) -> Partials:
        pairs: Partials = []
        for (kind, name), d in grad.items():
            if kind == 'v':
                col = self.layout.col(name)
                if col >= 0:
                    pairs.append((col, d))
            else:
                pairs.extend((col, d * c) for col, c in self.layout.current_partials(u, name))
        return pairs

    def stamp(self, u: np.ndarray, history: DeviceHistory, context: StampContext) -> MnaSystem:
        """Residual F(u) (KCL rows sum currents leaving each node) and Jacobian"""
        layout = self.layout
        n = layout.size
        J = np.zeros((n, n))
        F = np.zeros(n)
        view = _Iterate(layout, u)
        dc = context.mode == 'dc'
        trap = context.integrator == 'trap'
        h = context.h
        c = h / 2.0 if trap else h
        forced = context.forced_outputs

        def v(node: str) -> float:
            return layout.voltage(u, node)

        for el in self.circuit.elements:
            if isinstance(el, ResistorElement):
                a, b = layout.col(el.n1), layout.col(el.n2)
                g = 1.0 / el.resistance
                _flow(F, J, a, b, g * (v(el.n1) - v(el.n2)), _terminal_partials(a, b, g))

            elif isinstance(el, VoltageSourceElement):
                k = layout.branch_index[el.name]
                a, b = layout.col(el.n_plus), layout.col(el.n_minus)
                _flow(F, J, a, b, u[k], [(k, 1.0)])
                F[k] = v(el.n_plus) - v(el.n_minus) - context.source_scale * el.voltage
                for col, d in _terminal_partials(a, b, 1.0):
                    J[k, col] += d

            elif isinstance(el, VcvsElement):
                k = layout.branch_index[el.name]
                a, b = layout.col(el.n_plus), layout.col(el.n_minus)
                _flow(F, J, a, b, u[k], [(k, 1.0)])
                value, grad = evaluate_expression(el.expr, view)
                F[k] = v(el.n_plus) - v(el.n_minus) - value
                for col, d in _terminal_partials(a, b, 1.0):
                    J[k, col] += d
                for col, d in self._expression_partials(u, grad):
                    J[k, col] -= d

            elif isinstance(el, VccsElement):
                a, b = layout.col(el.n_plus), layout.col(el.n_minus)
                value, grad = evaluate_expression(el.expr, view)
                _flow(F, J, a, b, value, self._expression_partials(u, grad))

            elif isinstance(el, CapacitorElement):
                k = layout.branch_index[el.name]
                a, b = layout.col(el.n1), layout.col(el.n2)
                _flow(F, J, a, b, u[k], [(k, 1.0)])
                vc = v(el.n1) - v(el.n2)
                if dc:
                    if el.ic is not None:
                        F[k] = vc - el.ic
                        for col, d in _terminal_partials(a, b, 1.0):
                            J[k, col] += d
                    else:
                        F[k] = u[k]
                        J[k, k] = 1.0
                else:
                    geq, ieq = capacitor_companion(
                        el.capacitance, h, context.integrator,
                        history.cap_v[el.name], history.cap_i[el.name],
                    )
                    F[k] = u[k] - (geq * vc - ieq)
                    J[k, k] = 1.0
                    for col, d in _terminal_partials(a, b, geq):
                        J[k, col] -= d

            elif isinstance(el, OpAmpElement):
                self._stamp_opamp(el, u, F, J, history, context, dc, trap, c, forced)

            elif isinstance(el, MemristorElement):
                self._stamp_memristor(el, u, F, J, history, dc, trap, c)

        if context.gmin > 0.0:
            for index in layout.node_index.values():
                F[index] += context.gmin * u[index]
                J[index, index] += context.gmin

        return MnaSystem(J, F, u, layout)

    def _stamp_opamp(self, el: OpAmpElement, u, F, J, history, context, dc, trap, c, forced):
        layout = self.layout
        model = el.model
        if context.source_scale != 1.0:
            model = replace(model, v_sat=model.v_sat * context.source_scale)
        k = layout.branch_index[el.name]
        o = layout.col(el.out)
        p, m = layout.col(el.in_plus), layout.col(el.in_minus)
        _flow(F, J, o, -1, u[k], [(k, 1.0)])
        v_out = layout.voltage(u, el.out)
        v_plus, v_minus = layout.voltage(u, el.in_plus), layout.voltage(u, el.in_minus)

        if o >= 0:
            J[k, o] += 1.0
        if el.name in forced:
            F[k] = v_out - min(model.v_sat, max(-model.v_sat, forced[el.name]))
        elif model.tau is None:
            F[k] = v_out - opamp_output(v_plus, v_minus, model)
            slope = opamp_slope(v_plus, v_minus, model)
            for col, d in _terminal_partials(p, m, slope):
                J[k, col] -= d
        else:
            s_row = layout.state_index[el.name]
            s = u[s_row]
            F[k] = v_out - min(model.v_sat, max(-model.v_sat, s))
            if abs(s) < model.v_sat:
                J[k, s_row] -= 1.0

        if model.tau is None:
            return
        s_row = layout.state_index[el.name]
        s = u[s_row]
        gain = model.open_loop_gain
        drive = gain * (v_plus - v_minus)
        if dc:
            F[s_row] = s - drive
            J[s_row, s_row] = 1.0
            for col, d in _terminal_partials(p, m, gain):
                J[s_row, col] -= d
        else:
            tau = model.tau
            rate = (drive - s) / tau
            F[s_row] = s - history.lag_s[el.name] - c * rate
            if trap:
                F[s_row] -= c * history.lag_f[el.name]
            J[s_row, s_row] = 1.0 + c / tau
            for col, d in _terminal_partials(p, m, c * gain / tau):
                J[s_row, col] -= d

    def _stamp_memristor(self, el: MemristorElement, u, F, J, history, dc, trap, c):
        layout = self.layout
        params = el.params
        s_row = layout.state_index[el.name]
        a, b = layout.col(el.plus), layout.col(el.minus)
        x = u[s_row]
        r = memristance_unchecked(x, params)
        vm = layout.voltage(u, el.plus) - layout.voltage(u, el.minus)
        current = vm / r
        di_dv = 1.0 / r
        di_dx = vm * params.delta_r / r ** 2
        partials = _terminal_partials(a, b, di_dv) + [(s_row, di_dx)]
        _flow(F, J, a, b, current, partials)

        if dc:
            F[s_row] = x - history.mem_x[el.name]
            J[s_row, s_row] = 1.0
            return
        k = params.k
        w = window(x, params.p, params.window_exponent_factor)
        dw = window_derivative(x, params.p, params.window_exponent_factor)
        F[s_row] = x - history.mem_x[el.name] - c * k * current * w
        if trap:
            F[s_row] -= c * history.mem_g[el.name]
        J[s_row, s_row] = 1.0 - c * k * (di_dx * w + current * dw)
        for col, d in _terminal_partials(a, b, c * k * w * di_dv):
            J[s_row, col] -= d

    def _project(self, u: np.ndarray) -> np.ndarray:
        if self._memristor_rows:
            u = u.copy()
            u[self._memristor_rows] = np.clip(u[self._memristor_rows], 0.0, 1.0)
        return u

    # ------------------------------------------------------------------ DC

    def initial_history(self) -> DeviceHistory:
        """DC history: native memristors held at the state implied by r_init"""
        return DeviceHistory(mem_x={
            el.name: initial_state(el.params) for el in self.circuit.elements_of(MemristorElement)
        })

    def initial_guess(self, history: DeviceHistory) -> np.ndarray:
        u = np.zeros(self.layout.size)
        for node, value in self.circuit.initial_conditions:
            index = self.layout.col(node)
            if index >= 0:
                u[index] = value
        for name, x in history.mem_x.items():
            u[self.layout.state_index[name]] = x
        return u

    def _resolve_hints(self, bias_hints: Optional[Mapping[str, float]]) -> Dict[str, float]:
        """Map hints keyed by op-amp name or output node onto op-amp names"""
        by_output = {el.out: el.name for el in self.circuit.elements_of(OpAmpElement)}
        names = {el.name for el in self.circuit.elements_of(OpAmpElement)}
        resolved: Dict[str, float] = {}
        for node, value in self.circuit.initial_conditions:
            if node in by_output:
                resolved[by_output[node]] = value
        for key, value in (bias_hints or {}).items():
            key = key.lower()
            if key in names:
                resolved[key] = float(value)
            elif key in by_output:
                resolved[by_output[key]] = float(value)
            else:
                logger.warning(f"Ignoring bias hint '{key}': not an op-amp or op-amp output node")
        return resolved

    def dc_operating_point(self, bias_hints: Optional[Mapping[str, float]] = None) -> Solution:
        """
        DC solution with memristor states held and capacitor ICs as constraints

        With hints, op-amp outputs are first pinned to the hinted value, then
        released from that point so Newton settles on the hinted equilibrium.
        """
        history = self.initial_history()
        u0 = self.initial_guess(history)
        hints = self._resolve_hints(bias_hints)
        if not hints:
            return self._solve_dc(history, u0, ())

        logger.debug(f"DC bias hints: {hints}")
        pinned = self._solve_dc(history, u0, tuple(sorted(hints.items())))
        seeded = np.array(pinned.u)
        for name, value in hints.items():
            if name in self.layout.state_index and value != 0.0:
                model = self.circuit.element(name).model
                seeded[self.layout.state_index[name]] = math.copysign(2.0 * model.v_sat, value)
        return self._solve_dc(history, seeded, ())

    def _solve_dc(self, history: DeviceHistory, u0: np.ndarray, forced) -> Solution:

        def attempt(u_start: np.ndarray, gmin: float = 0.0, scale: float = 1.0) -> Solution:
            context = StampContext('dc', integrator=self.config.integrator, gmin=gmin,
                                   source_scale=scale, forced=forced)
            return newton_solve(lambda u: self.stamp(u, history, context), u_start,
                                self.config, self._project)

        try:
            return attempt(u0)
        except _STEP_FAILURES as e:
            last = e
            logger.debug(f"Plain Newton failed ({e}); trying gmin stepping")

        solved = None
        try:
            u = u0
            for gmin in GMIN_LADDER:
                solved = attempt(u, gmin=gmin)
                u = solved.u
            return attempt(u)
        except _STEP_FAILURES as e:
            last = e
            if solved is not None and isinstance(e, SingularMatrixError):
                logger.warning("Circuit is singular without gmin; keeping the smallest-gmin solution")
                return solved
            logger.debug(f"gmin stepping failed ({e}); trying source stepping")

        try:
            u = u0
            for step in range(1, SOURCE_STEPS + 1):
                solved = attempt(u, scale=step / SOURCE_STEPS)
                u = solved.u
            return solved
        except _STEP_FAILURES as e:
            last = e

        worst = getattr(last, 'worst', None) or 'unknown'
        logger.error(f"DC operating point failed; worst residual at {worst}")
        raise DcConvergenceError(
            f"DC operating point failed after gmin and source stepping; worst residual at {worst}"
        )

    # ------------------------------------------------------------------ transient

    def accept(self, solution: Solution) -> Tuple[np.ndarray, DeviceHistory]:
        """
        Post-step projection and the history snapshot for the next step

        Memristor states are clamped to [0, 1]. Op-amp lag states are held to
        the rails, and a clamped lag restarts with zero slope.
        """
        layout = self.layout
        u = np.array(solution.u)
        if not np.all(np.isfinite(u)):
            raise NonFiniteSolutionError(f"non-finite solution at t={solution.t:g}")
        history = DeviceHistory()

        for el in self.circuit.elements:
            if isinstance(el, CapacitorElement):
                history.cap_v[el.name] = layout.voltage(u, el.n1) - layout.voltage(u, el.n2)
                history.cap_i[el.name] = float(u[layout.branch_index[el.name]])
            elif isinstance(el, MemristorElement):
                s_row = layout.state_index[el.name]
                x = clamp_state(float(u[s_row]))
                u[s_row] = x
                params = el.params
                history.mem_x[el.name] = x
                history.mem_g[el.name] = params.k * layout.current(u, el.name) * window(
                    x, params.p, params.window_exponent_factor
                )
            elif isinstance(el, OpAmpElement) and el.model.tau is not None:
                s_row = layout.state_index[el.name]
                s = float(u[s_row])
                model = el.model
                if abs(s) > model.v_sat:
                    u[s_row] = math.copysign(model.v_sat, s)
                    history.lag_s[el.name] = u[s_row]
                    history.lag_f[el.name] = 0.0
                else:
                    vd = layout.voltage(u, el.in_plus) - layout.voltage(u, el.in_minus)
                    history.lag_s[el.name] = s
                    history.lag_f[el.name] = (model.open_loop_gain * vd - s) / model.tau
        return u, history

    def _step(self, u: np.ndarray, history: DeviceHistory, t: float, h: float) -> Solution:
        context = StampContext('tran', time=t + h, h=h, integrator=self.config.integrator)
        return newton_solve(lambda trial: self.stamp(trial, history, context), u,
                            self.config, self._project, t=t + h)

    def _lte_ratio(self, u_full: np.ndarray, u_fine: np.ndarray) -> float:
        """Step-doubling error estimate normalised so that 1.0 is the tolerance"""
        kinds = np.array(self.layout.kinds)
        mask = kinds != 'i'
        if not np.any(mask):
            return 0.0
        cfg = self.config
        scale = cfg.lte_abstol + cfg.lte_reltol * np.abs(u_fine[mask])
        err = np.max(np.abs(u_full[mask] - u_fine[mask]) / scale)
        return float(err) / (2 ** cfg.order - 1)

    def transient(self, initial: Optional[Solution] = None,
                  bias_hints: Optional[Mapping[str, float]] = None) -> TraceSet:
        """Integrate from the DC point (or `initial`) to t_stop"""
        cfg = self.config
        started = time.perf_counter()
        if initial is None:
            initial = self.dc_operating_point(bias_hints)
        logger.info(
            f"Transient: {self.layout.size} unknowns, t_stop={cfg.t_stop:g}s, dt={cfg.dt:g}s, "
            f"{cfg.integrator}{' adaptive' if cfg.adaptive else ''}"
        )

        u, history = self.accept(initial)
        times = [0.0]
        rows = [u]
        kcl = [initial.kcl_residual]
        iterations = [initial.iterations]

        t = 0.0
        h = cfg.dt
        reductions = 0
        while cfg.t_stop - t > 1e-12 * cfg.t_stop:
            h_try = min(h, cfg.t_stop - t)
            if cfg.t_stop - (t + h_try) < 1e-9 * h_try:
                h_try = cfg.t_stop - t
            try:
                if cfg.adaptive:
                    full = self._step(u, history, t, h_try)
                    half = self._step(u, history, t, h_try / 2.0)
                    u_half, history_half = self.accept(half)
                    solution = self._step(u_half, history_half, t + h_try / 2.0, h_try / 2.0)
                else:
                    solution = self._step(u, history, t, h_try)
            except _STEP_FAILURES as e:
                h = h_try / 2.0
                if h < cfg.dt_min:
                    logger.error(f"Time step underflow at t={t:.9g}")
                    raise TimestepTooSmallError(
                        f"time step fell below dt_min={cfg.dt_min:g} at t={t:.9g}: {e}", t
                    )
                reductions += 1
                logger.warning(f"Step at t={t:.9g} failed ({e}); reducing dt to {h:g}")
                continue

            u_next, history_next = self.accept(solution)
            if cfg.adaptive:
                u_full, _ = self.accept(full)
                ratio = self._lte_ratio(u_full, u_next)
                factor = 2.0 if ratio == 0.0 else min(2.0, max(0.3, 0.9 * ratio ** (-1.0 / (cfg.order + 1))))
                if ratio > 1.0 and h_try > cfg.dt_min * (1.0 + 1e-9):
                    h = max(h_try * factor, cfg.dt_min)
                    continue
                h = min(max(h_try * factor, cfg.dt_min), cfg.dt_max)
            else:
                h = min(2.0 * h_try, cfg.dt)

            t = cfg.t_stop if cfg.t_stop - (t + h_try) <= 1e-12 * cfg.t_stop else t + h_try
            u, history = u_next, history_next
            times.append(t)
            rows.append(u)
            kcl.append(solution.kcl_residual)
            iterations.append(solution.iterations)
            logger.debug(f"t={t:.9g} accepted after {solution.iterations} Newton iteration(s)")

        traces = self._build_traces(times, rows, kcl, iterations)
        logger.info(
            f"Transient finished: {len(times) - 1} steps, {reductions} dt reductions, "
            f"{time.perf_counter() - started:.2f}s"
        )
        return traces

    def _build_traces(self, times, rows, kcl, iterations) -> TraceSet:
        layout = self.layout
        U = np.vstack(rows)
        count = U.shape[0]

        def node_values(node: str) -> np.ndarray:
            index = layout.col(node)
            return np.zeros(count) if index < 0 else U[:, index]

        columns: Dict[str, np.ndarray] = {}
        for node in self.circuit.nodes:
            if node != GROUND:
                columns[f"v({node})"] = U[:, layout.node_index[node]]
        for el in self.circuit.elements:
            if el.name in layout.branch_index:
                columns[f"i({el.name})"] = U[:, layout.branch_index[el.name]]
            elif isinstance(el, ResistorElement):
                columns[f"i({el.name})"] = (node_values(el.n1) - node_values(el.n2)) / el.resistance
            elif isinstance(el, MemristorElement):
                x = U[:, layout.state_index[el.name]]
                columns[f"i({el.name})"] = (node_values(el.plus) - node_values(el.minus)) / \
                    memristance_array(x, el.params)
        for el in self.circuit.elements_of(MemristorElement):
            columns[f"x({el.name})"] = np.clip(U[:, layout.state_index[el.name]], 0.0, 1.0)
        for probe in self.circuit.memristors:
            if probe.state_kind != 'v':
                continue
            columns.setdefault(f"x({probe.name})", node_values(probe.state_ref))
            source = f"i({probe.current_ref})" if probe.current_ref else None
            if source in columns:
                columns.setdefault(f"i({probe.name})", columns[source])

        frame = pd.DataFrame(columns, index=pd.Index(np.asarray(times), name='time'))
        return TraceSet(
            frame=frame,
            memristors={probe.name: probe for probe in self.circuit.memristors},
            kcl_residuals=np.asarray(kcl, dtype=float),
            newton_iterations=np.asarray(iterations, dtype=int),
        )


def stamp(circuit: Circuit, u_guess: np.ndarray, device_states: DeviceHistory,
          integrator_context: StampContext) -> MnaSystem:
    return MnaEngine(circuit).stamp(np.asarray(u_guess, dtype=float), device_states, integrator_context)


def dc_operating_point(circuit: Circuit, bias_hints: Optional[Mapping[str, float]] = None,
                       config: Optional[TransientConfig] = None) -> Solution:
    return MnaEngine(circuit, config).dc_operating_point(bias_hints)


def transient(circuit: Circuit, config: Optional[TransientConfig] = None,
              initial: Optional[Solution] = None,
              bias_hints: Optional[Mapping[str, float]] = None) -> TraceSet:
    return MnaEngine(circuit, config).transient(initial, bias_hints)


def probe(traces: TraceSet, selector: str) -> pd.Series:
    """Time series for v(node), i(element), x(memristor) or r(memristor)"""
    return traces.signal(selector)
