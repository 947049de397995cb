"""
Components package for experiment figures
"""

from .chart_components import TraceChartComponent

__all__ = ['TraceChartComponent']
