"""
Chart components for experiment traces
"""

from typing import List, Optional

import pandas as pd
import plotly.graph_objects as go

from config.settings import CHART_HEIGHT, CHART_COLORS


class TraceChartComponent:
    """Builds plotly figures from experiment trace frames (index is time in seconds)"""

    def __init__(self, dark_theme: bool = True):
        self.dark_theme = dark_theme
        self.fig = None

    def create_resistance_chart(self, data: pd.DataFrame, r_ref: Optional[float] = None,
                                title: str = 'Memristance') -> go.Figure:
        """R_mem against time, with the reference resistance as a dashed line"""
        self.fig = go.Figure()
        time_ms = data.index.to_numpy(dtype=float) * 1e3

        self.fig.add_trace(go.Scatter(
            x=time_ms,
            y=data['r_mem'],
            mode='lines',
            name='R_mem',
            line=dict(color=CHART_COLORS['r_mem'], width=3)
        ))
        if r_ref is not None:
            self.fig.add_hline(
                y=r_ref,
                line=dict(color=CHART_COLORS['r_ref'], width=1, dash='dash'),
                annotation_text=f"R_ref = {r_ref:g} Ω",
            )

        self._update_layout(title, 'Time (ms)', 'Resistance (Ω)')
        return self.fig

    def create_voltage_chart(self, data: pd.DataFrame, signals: List[str] = None,
                             title: str = 'Node voltages') -> go.Figure:
        """v1 (op-amp output), v2 and v3 against time"""
        self.fig = go.Figure()
        time_ms = data.index.to_numpy(dtype=float) * 1e3

        for signal in signals or ['v1', 'v2', 'v3']:
            if signal not in data.columns:
                continue
            self.fig.add_trace(go.Scatter(
                x=time_ms,
                y=data[signal],
                mode='lines',
                name=signal,
                line=dict(color=CHART_COLORS.get(signal, '#ffffff'), width=2),
                opacity=0.9
            ))

        self._update_layout(title, 'Time (ms)', 'Voltage (V)')
        return self.fig

    def create_vi_chart(self, data: pd.DataFrame, slope: Optional[float] = None,
                        title: str = 'Memristor V-I') -> go.Figure:
        """
        Branch voltage against branch current

        The local slope is the memristance; a fitted steady slope is drawn
        through the origin when given.
        """
        self.fig = go.Figure()
        current_ma = data['i_mem'].to_numpy(dtype=float) * 1e3

        self.fig.add_trace(go.Scatter(
            x=current_ma,
            y=data['v_mem'],
            mode='lines+markers',
            name='V-I',
            marker=dict(size=3),
            line=dict(color=CHART_COLORS['vi'], width=1)
        ))
        if slope is not None and len(current_ma):
            span = [0.0, float(current_ma.max())]
            self.fig.add_trace(go.Scatter(
                x=span,
                y=[value * 1e-3 * slope for value in span],
                mode='lines',
                name=f"slope {slope:.4g} Ω",
                line=dict(color=CHART_COLORS['r_ref'], width=1, dash='dot')
            ))

        self._update_layout(title, 'Current (mA)', 'Voltage (V)', hovermode='closest')
        return self.fig

    def _update_layout(self, title: str, x_title: str, y_title: str, hovermode: str = 'x unified'):
        """Update chart layout with the dark theme"""
        if self.dark_theme:
            bg_color = '#0a0a0a'
            grid_color = '#333333'
            text_color = '#ffffff'
            title_color = '#00d4aa'
        else:
            bg_color = '#ffffff'
            grid_color = '#e5e5e5'
            text_color = '#000000'
            title_color = '#1f77b4'

        self.fig.update_layout(
            title=dict(
                text=title,
                font=dict(color=title_color, size=20)
            ),
            xaxis_title=x_title,
            yaxis_title=y_title,
            height=CHART_HEIGHT,
            showlegend=True,
            legend=dict(
                orientation="h",
                yanchor="bottom",
                y=1.02,
                xanchor="right",
                x=1,
                bgcolor='rgba(0,0,0,0)',
                font=dict(color=text_color)
            ),
            hovermode=hovermode,
            template='plotly_dark' if self.dark_theme else 'plotly_white',
            plot_bgcolor=bg_color,
            paper_bgcolor=bg_color,
            font=dict(color=text_color),
            xaxis=dict(gridcolor=grid_color, color=text_color),
            yaxis=dict(gridcolor=grid_color, color=text_color)
        )
