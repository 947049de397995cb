"""
Storage package: CSV and JSON persistence of simulation results
"""

from .results_store import ResultsStore

__all__ = ['ResultsStore']
