"""
Plain-text result tables with exact float round-tripping
"""
# Standard library imports
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Union

# Third-party library imports
import numpy as np
import pandas as pd

# Local imports
from errors import OutputError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def format_cell(value: Any) -> str:
    """Shortest decimal that parses back to the same double; blanks for missing values"""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return ""
        return repr(value)
    return str(value)


def write_round_trip_csv(frame: pd.DataFrame, path: PathLike) -> Path:
    """Write a table as UTF-8 CSV with a header row"""
    path = Path(path)
    text_frame = pd.DataFrame({name: frame[name].map(format_cell) for name in frame.columns},
                              columns=list(frame.columns))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        text_frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    except OSError as e:
        raise OutputError(f"Could not write {path}: {e}") from e
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def read_round_trip_csv(path: PathLike) -> pd.DataFrame:
    """Read a table written by write_round_trip_csv"""
    try:
        return pd.read_csv(path, float_precision="round_trip")
    except OSError as e:
        raise OutputError(f"Could not read {path}: {e}") from e


def write_json(payload: Dict[str, Any], path: PathLike) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(_sanitize(payload), handle, indent=2, sort_keys=True, allow_nan=False, default=_json_default)
            handle.write("\n")
    except OSError as e:
        raise OutputError(f"Could not write {path}: {e}") from e
    logger.info(f"Wrote summary to {path}")
    return path


def _json_default(value: Any):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Not JSON serializable: {type(value).__name__}")


def _sanitize(value: Any) -> Any:
    # JSON has no NaN/inf; missing numbers become null.
    if isinstance(value, dict):
        return {str(key): _sanitize(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sanitize(item) for item in value]
    if isinstance(value, (float, np.floating)) and not math.isfinite(float(value)):
        return None
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, (np.integer, np.bool_)):
        return value.item()
    return value
