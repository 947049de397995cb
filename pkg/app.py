"""
Command-line front end for the memristor resistance-copy simulator

    python app.py run NETLIST [--probe LIST] [transient flags] [--out DIR] [--force]
    python app.py experiment {increase|decrease} [--rref R] [--rinit R] ...
    python app.py sweep {increase|decrease} --axis {rref|supply} --values V1,V2[,...]
"""

import sys
import logging
import argparse
from pathlib import Path
from typing import List, Optional

from config.settings import (
    LOG_FORMAT, OUTPUT_DIR, DT_DEFAULT, EXPERIMENT_KINDS, INTEGRATORS, REALIZATIONS, SWEEP_AXES,
    EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_SOLVE,
)
from models.analysis import TransientConfig
from models.experiment import ExperimentSpec
from services.exceptions import (
    MemsimError, NetlistError, NetlistParseError, ConfigurationError, OutputExistsError,
    UnknownSignalError, SimulationError, ExperimentError,
)
from services.experiment_service import ExperimentService
from services.mna_engine import MnaEngine
from services.netlist_parser import read_netlist, flatten, parse_number
from storage.results_store import ResultsStore

logger = logging.getLogger(__name__)


class UsageError(Exception):
    pass


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors by raising instead of exiting with 2"""

    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def spice_number(text: str) -> float:
    try:
        return parse_number(text)
    except NetlistParseError:
        raise argparse.ArgumentTypeError(f"invalid number '{text}'")


def spice_list(text: str) -> List[float]:
    return [spice_number(item) for item in text.split(',') if item.strip()]


def probe_list(text: str) -> List[str]:
    return [item.strip() for item in text.split(',') if item.strip()]


def _add_transient_flags(parser: argparse.ArgumentParser):
    group = parser.add_argument_group('transient')
    group.add_argument('--tstop', type=spice_number, help='stop time (s)')
    group.add_argument('--dt', type=spice_number, help='time step (s)')
    group.add_argument('--integrator', choices=INTEGRATORS, help='be or trap')
    group.add_argument('--adaptive', action='store_true', help='LTE-controlled step size')


def _add_output_flags(parser: argparse.ArgumentParser):
    parser.add_argument('--out', type=Path, default=OUTPUT_DIR, help='output directory')
    parser.add_argument('--force', action='store_true', help='overwrite existing files')


def _add_experiment_flags(parser: argparse.ArgumentParser, sweep: bool = False):
    parser.add_argument('kind', choices=EXPERIMENT_KINDS)
    parser.add_argument('--rref', type=spice_number, help='reference resistance (ohm)')
    parser.add_argument('--rinit', type=spice_number, help='initial memristance (ohm)')
    parser.add_argument('--supply', type=spice_number, help='op-amp supply A (V)')
    parser.add_argument('--realization', choices=REALIZATIONS, help='memristor realization')
    if not sweep:
        parser.add_argument('--r1', type=spice_number, help='divider resistor R1 (ohm)')
        parser.add_argument('--r2', type=spice_number, help='divider resistor R2 (ohm)')


def build_parser() -> CliParser:
    parser = CliParser(prog='memsim', description='SPICE-subset simulator for memristor resistance copying')
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('--verbose', action='store_true', help='debug logging')
    verbosity.add_argument('--quiet', action='store_true', help='warnings and errors only')
    subparsers = parser.add_subparsers(dest='command', required=True)

    run = subparsers.add_parser('run', help='simulate a netlist file')
    run.add_argument('netlist', type=Path)
    run.add_argument('--probe', type=probe_list, help='comma-separated signals, e.g. v(2),r(xmem)')
    _add_transient_flags(run)
    _add_output_flags(run)
    run.set_defaults(handler=cmd_run)

    experiment = subparsers.add_parser('experiment', help='run the increase or decrease circuit')
    _add_experiment_flags(experiment)
    _add_transient_flags(experiment)
    _add_output_flags(experiment)
    experiment.set_defaults(handler=cmd_experiment)

    sweep = subparsers.add_parser('sweep', help='sweep R_ref or the supply')
    _add_experiment_flags(sweep, sweep=True)
    sweep.add_argument('--axis', choices=sorted(SWEEP_AXES), required=True)
    sweep.add_argument('--values', type=spice_list, required=True, help='comma-separated values')
    sweep.add_argument('--workers', type=int, help='parallel runs (default: MEMSIM_THREADS or CPU count)')
    _add_transient_flags(sweep)
    _add_output_flags(sweep)
    sweep.set_defaults(handler=cmd_sweep)
    return parser


def configure_logging(verbose: bool = False, quiet: bool = False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)


def transient_config(args, base: TransientConfig = None) -> TransientConfig:
    """Apply --tstop/--dt/--integrator/--adaptive on top of base"""
    base = base or TransientConfig()
    changes = {}
    if args.tstop is not None:
        changes['t_stop'] = args.tstop
    if args.dt is not None:
        changes['dt'] = args.dt
    if args.integrator is not None:
        changes['integrator'] = args.integrator
    if args.adaptive:
        changes['adaptive'] = True
    return base.with_overrides(**changes).validate() if changes else base.validate()


def cmd_run(args) -> int:
    """Parse, flatten and simulate a netlist; write its traces as CSV"""
    if not args.netlist.exists():
        raise UsageError(f"netlist not found: {args.netlist}")
    document = read_netlist(args.netlist)
    if document.is_empty:
        raise NetlistParseError(f"{args.netlist}: netlist contains no elements", 1)
    circuit = flatten(document)

    if circuit.tran is None and args.tstop is None:
        raise ConfigurationError("netlist has no .tran directive; pass --tstop")
    dt, t_stop = circuit.tran if circuit.tran else (DT_DEFAULT, None)
    config = transient_config(args, TransientConfig(t_stop=t_stop or args.tstop, dt=dt))

    store = ResultsStore(args.out, force=args.force)
    name = args.netlist.stem
    store.check_available(name, '.csv')

    traces = MnaEngine(circuit, config).transient()
    path = store.save_traces(traces.select(args.probe), name)
    print(f"{len(traces)} time points written to {path}")
    return EXIT_OK


def _spec_from_args(args) -> ExperimentSpec:
    overrides = {
        'r_ref': args.rref,
        'r_init': args.rinit,
        'supply': args.supply,
        'realization': args.realization,
        'r1': getattr(args, 'r1', None),
        'r2': getattr(args, 'r2', None),
    }
    spec = ExperimentSpec.for_kind(args.kind, **overrides)
    return spec.with_overrides(transient=transient_config(args, spec.transient))


def cmd_experiment(args) -> int:
    spec = _spec_from_args(args).validate()
    store = ResultsStore(args.out, force=args.force)
    store.check_available(spec.label, '.csv')
    store.check_available(f"{spec.label}_metrics", '.json')

    _, metrics = ExperimentService(store).run_experiment(spec)
    print(f"experiment      {metrics.name}")
    print(f"final_r         {metrics.final_r:.6g} ohm (target {spec.r_ref:g})")
    for label, value in (('settling 2%', metrics.settling_time_2pct),
                         ('settling 5%', metrics.settling_time_5pct),
                         ('v2 = v3 from', metrics.voltage_match_time)):
        print(f"{label:<15} {'not settled' if value is None else f'{value * 1e3:.4g} ms'}")
    slope = 'n/a' if metrics.steady_slope is None else f"{metrics.steady_slope:.6g} ohm"
    print(f"steady slope    {slope}")
    print(f"converged       {metrics.converged}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = _spec_from_args(args)
    store = ResultsStore(args.out, force=args.force)
    service = ExperimentService(store)
    service.sweep_specs(spec, args.axis, args.values)
    store.check_available(f"{spec.kind}_sweep_{args.axis}", '.csv')

    summary = service.run_sweep(spec, args.axis, args.values, workers=args.workers)
    print(summary.to_string(index=False))
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    configure_logging(args.verbose, args.quiet)

    try:
        return args.handler(args)
    except (UsageError, ConfigurationError, OutputExistsError, UnknownSignalError) as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NetlistError as e:
        logger.error(f"Netlist error: {e}")
        print(f"netlist error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (SimulationError, ExperimentError, MemsimError) as e:
        logger.error(f"Simulation failed: {e}")
        print(f"simulation error: {e}", file=sys.stderr)
        return EXIT_SOLVE
    except Exception as e:
        logger.error(f"Unexpected error: {e}", exc_info=args.verbose)
        return EXIT_SOLVE


if __name__ == "__main__":
    sys.exit(main())
