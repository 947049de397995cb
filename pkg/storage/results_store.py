"""
Results store for trace CSVs, metrics JSON sidecars and sweep summaries
"""

import json
import logging
from pathlib import Path
from typing import Optional, Union

import pandas as pd

from config.settings import OUTPUT_DIR, CSV_FLOAT_FORMAT
from services.exceptions import OutputExistsError

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ['value', 'settling_time_2pct', 'settling_time_5pct', 'final_r', 'converged', 'status']


class ResultsStore:
    """Owns one output directory; refuses to overwrite unless force is set"""

    def __init__(self, output_dir: Union[str, Path] = None, force: bool = False):
        self.output_dir = Path(output_dir or OUTPUT_DIR)
        self.force = force
        self._ensure_output_directory()

    def _ensure_output_directory(self):
        """Ensure the output directory exists"""
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def check_available(self, name: str, suffix: str) -> Path:
        """Path for a new file; raises OutputExistsError if it would overwrite"""
        path = self.output_dir / f"{name}{suffix}"
        if path.exists() and not self.force:
            raise OutputExistsError(f"{path} already exists (use --force to overwrite)")
        return path

    _target = check_available

    def save_traces(self, frame: pd.DataFrame, name: str) -> Path:
        """
        Write a trace frame as CSV

        Args:
            frame: Signals indexed by time
            name: File stem inside the output directory

        Returns:
            Path of the written file
        """
        path = self._target(name, '.csv')
        frame = frame.copy()
        frame.index.name = 'time'
        frame.to_csv(path, float_format=CSV_FLOAT_FORMAT)
        logger.info(f"Wrote {len(frame)} rows to {path}")
        return path

    def save_metrics(self, metrics, name: str) -> Path:
        """Write metrics (an object with to_dict() or a dict) as sorted JSON"""
        path = self._target(name, '.json')
        data = metrics.to_dict() if hasattr(metrics, 'to_dict') else dict(metrics)
        with open(path, 'w', encoding='utf-8') as handle:
            json.dump(data, handle, indent=2, sort_keys=True)
            handle.write('\n')
        logger.info(f"Wrote metrics to {path}")
        return path

    def save_sweep_summary(self, frame: pd.DataFrame, name: str) -> Path:
        """Write the combined sweep table with its fixed column order"""
        path = self._target(name, '.csv')
        frame.reindex(columns=SWEEP_COLUMNS).to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
        logger.info(f"Wrote sweep summary ({len(frame)} rows) to {path}")
        return path

    def save_table(self, frame: pd.DataFrame, name: str) -> Path:
        path = self._target(name, '.csv')
        frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
        logger.info(f"Wrote {path}")
        return path

    def load_traces(self, path: Union[str, Path]) -> pd.DataFrame:
        """Read a trace CSV back into a time-indexed frame"""
        path = Path(path)
        if not path.is_absolute() and not path.exists():
            path = self.output_dir / path
        return pd.read_csv(path, index_col='time')

    def load_metrics(self, path: Union[str, Path]) -> Optional[dict]:
        path = Path(path)
        if not path.is_absolute() and not path.exists():
            path = self.output_dir / path
        try:
            with open(path, encoding='utf-8') as handle:
                return json.load(handle)
        except (OSError, json.JSONDecodeError) as e:
            logger.error(f"Error reading metrics from {path}: {e}")
            return None
