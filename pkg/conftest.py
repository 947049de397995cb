"""
Shared pytest setup: repository root on sys.path and the `slow` marker
"""

import sys
from pathlib import Path

ROOT = Path(__file__).parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long transient runs (fine time steps, sweeps)")
