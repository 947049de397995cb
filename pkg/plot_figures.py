"""
Render experiment CSVs as static plotly HTML figures

    python plot_figures.py output/increase_rref2000_supply5.csv [more.csv ...] [--out DIR]

Each CSV yields <stem>_resistance.html, <stem>_voltages.html and <stem>_vi.html.
R_ref and the steady V-I slope are read from the <stem>_metrics.json sidecar
when it exists.
"""

import sys
import logging
import argparse
from pathlib import Path
from typing import List, Optional

from components.chart_components import TraceChartComponent
from config.settings import LOG_FORMAT, EXIT_OK, EXIT_USAGE
from storage.results_store import ResultsStore

logger = logging.getLogger(__name__)


def render_experiment(csv_path: Path, out_dir: Path, dark_theme: bool = True) -> List[Path]:
    """Write the three figures for one experiment CSV; returns the written paths"""
    store = ResultsStore(csv_path.parent)
    data = store.load_traces(csv_path)
    metrics = None
    sidecar = csv_path.with_name(f"{csv_path.stem}_metrics.json")
    if sidecar.exists():
        metrics = store.load_metrics(sidecar)
    r_ref = metrics.get('r_ref') if metrics else None
    slope = metrics.get('steady_slope') if metrics else None

    charts = TraceChartComponent(dark_theme=dark_theme)
    figures = {
        'resistance': charts.create_resistance_chart(data, r_ref, title=f"{csv_path.stem}: memristance"),
        'voltages': charts.create_voltage_chart(data, title=f"{csv_path.stem}: v1, v2, v3"),
        'vi': charts.create_vi_chart(data, slope, title=f"{csv_path.stem}: V-I"),
    }

    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for suffix, fig in figures.items():
        path = out_dir / f"{csv_path.stem}_{suffix}.html"
        fig.write_html(str(path), include_plotlyjs='cdn')
        written.append(path)
    logger.info(f"Wrote {len(written)} figures for {csv_path.name} to {out_dir}")
    return written


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(description='Render experiment CSVs as HTML figures')
    parser.add_argument('csv', nargs='+', type=Path, help='experiment trace CSV files')
    parser.add_argument('--out', type=Path, help='figure directory (default: next to each CSV)')
    parser.add_argument('--light', action='store_true', help='use the light theme')
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format=LOG_FORMAT)

    missing = [str(path) for path in args.csv if not path.exists()]
    if missing:
        print(f"error: not found: {', '.join(missing)}", file=sys.stderr)
        return EXIT_USAGE

    for csv_path in args.csv:
        try:
            render_experiment(csv_path, args.out or csv_path.parent, dark_theme=not args.light)
        except KeyError as e:
            logger.error(f"{csv_path} is not an experiment trace (missing column {e})")
            return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
