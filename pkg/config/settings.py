"""
Configuration settings for the memristor resistance-copy simulator
"""

import os
from pathlib import Path

# Base directory
BASE_DIR = Path(__file__).parent.parent

# File locations
FIXTURES_DIR = BASE_DIR / "fixtures"
OUTPUT_DIR = BASE_DIR / "output"
HP_MEMRISTOR_NETLIST = FIXTURES_DIR / "hp_memristor.sp"

# Logging
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# SPICE magnitude suffixes (checked longest first, case-insensitive)
SPICE_SUFFIXES = {
    'meg': 1e6,
    't': 1e12,
    'g': 1e9,
    'k': 1e3,
    'm': 1e-3,
    'u': 1e-6,
    'n': 1e-9,
    'p': 1e-12,
    'f': 1e-15,
}

GROUND_NAMES = ('0', 'gnd')

# Built-in subcircuit names handled natively by the engine
OPAMP_SUBCKT = 'opamp'
MEMRISTOR_SUBCKT = 'hpmem'
RESERVED_SUBCKTS = (OPAMP_SUBCKT, MEMRISTOR_SUBCKT)

# HP memristor defaults
MEMRISTOR_R_ON = 100.0
MEMRISTOR_R_OFF = 16e3
MEMRISTOR_R_INIT = 1e3
MEMRISTOR_LENGTH = 10e-9
MEMRISTOR_MOBILITY = 10e-15
MEMRISTOR_WINDOW_P = 10
# Window exponent is WINDOW_EXPONENT_FACTOR * p
WINDOW_EXPONENT_FACTOR = 2
STATE_CLAMP_TOLERANCE = 1e-9
STATE_NEWTON_MAX_ITERS = 50
STATE_NEWTON_TOLERANCE = 1e-14

# Op-amp defaults
OPAMP_GAIN = 2e5
OPAMP_POLE_HZ = 20.0
SUPPLY_VOLTAGE = 5.0

# Subcircuit name used by the executable HP memristor model fixture
HP_MEMRISTOR_SUBCKT = 'memristor'

# Experiment defaults
EXPERIMENT_KINDS = ('increase', 'decrease')
EXPERIMENT_DEFAULTS = {
    'increase': {'r_ref': 2e3, 'r_init': 1e3},
    'decrease': {'r_ref': 500.0, 'r_init': 2e3},
}
SWEEP_AXES = {'rref': 'r_ref', 'supply': 'supply'}
R1_DEFAULT = 1e3
R2_DEFAULT = 1e3
T_STOP_DEFAULT = 15e-3
DT_DEFAULT = 1e-6
INTEGRATOR_DEFAULT = 'trap'
INTEGRATORS = ('be', 'trap')
REALIZATIONS = ('native', 'subcircuit')

# Solver tolerances
RELTOL = 1e-4
ABSTOL_VOLTAGE = 1e-6
ABSTOL_CURRENT = 1e-9
ABSTOL_STATE = 1e-9
MAX_NEWTON_ITERS = 50
MAX_BACKTRACKS = 4
DT_MIN_DIVISOR = 1024
DT_MAX_FRACTION = 0.01  # adaptive dt_max default, as a fraction of t_stop
LTE_RELTOL = 1e-3
LTE_ABSTOL = 1e-6

# DC homotopies
GMIN_LADDER = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11, 1e-12]
SOURCE_STEPS = 10

# Metrics
SETTLING_BANDS = (0.02, 0.05)
CONVERGENCE_TOLERANCE = 0.02
STEADY_WINDOW_FRACTION = 0.10
QUIESCENCE_WINDOW_FRACTION = 0.05
VOLTAGE_MATCH_FRACTION = 0.01
VI_CURRENT_FLOOR = 1e-3  # fraction of the peak branch current

# Output
CSV_FLOAT_FORMAT = '%.9g'
EXPERIMENT_COLUMNS = ['v1', 'v2', 'v3', 'i_mem', 'v_mem', 'x', 'r_mem']

# Exit codes
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_SOLVE = 3

# Chart settings
CHART_HEIGHT = 600
CHART_COLORS = {
    'r_mem': '#00d4aa',
    'r_ref': '#e74c3c',
    'v1': '#3498db',
    'v2': '#ff7f0e',
    'v3': '#9b59b6',
    'vi': '#00d4aa',
}


def max_sweep_workers() -> int:
    """Worker cap for sweeps, honouring MEMSIM_THREADS"""
    value = os.environ.get('MEMSIM_THREADS')
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            pass
    return os.cpu_count() or 1
