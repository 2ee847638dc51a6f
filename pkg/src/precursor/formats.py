from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional

import numpy as np
import pandas as pd
import yaml

from .exceptions import IngestionError
from .models import Series, TradingCalendar, as_minutes
from .statics import DEFAULT_ENCODING

FLOAT_FORMAT = "%.17g"
DATE_FORMAT = "%Y-%m-%dT%H:%M"


def _plain(value):
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, Path):
        return str(value)
    return value


def format_csv(frame: pd.DataFrame, path, encode=True):
    if encode:
        frame.to_csv(
            path,
            index=False,
            float_format=FLOAT_FORMAT,
            date_format=DATE_FORMAT,
            encoding=DEFAULT_ENCODING,
            lineterminator="\n",
        )
        return Path(path)
    return pd.read_csv(path)


def format_kv(data: Mapping[str, Any], path, encode=True):
    """``key=value`` lines; ``None`` is written as ``NA``."""
    if encode:
        lines = []
        for key, value in data.items():
            value = _plain(value)
            if value is None:
                value = "NA"
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{key}={value}")
        Path(path).write_text("\n".join(lines) + "\n", encoding=DEFAULT_ENCODING)
        return Path(path)
    text = Path(path).read_text(encoding=DEFAULT_ENCODING)
    return dict(line.split("=", 1) for line in text.splitlines() if "=" in line)


def format_yaml(data: Mapping[str, Any], path, encode=True):
    if encode:
        plain = {k: _plain(v) for k, v in data.items()}
        Path(path).write_text(
            yaml.safe_dump(plain, sort_keys=False, default_flow_style=False),
            encoding=DEFAULT_ENCODING,
        )
        return Path(path)
    return yaml.safe_load(Path(path).read_text(encoding=DEFAULT_ENCODING))


def get_formats() -> Dict[str, Callable]:
    return {
        "csv": format_csv,
        "kv": format_kv,
        "yaml": format_yaml,
    }


def read_series(path, column: Optional[str] = None) -> Series:
    """Reads ``index,dX[,omega]`` (a simulated path) or ``timestamp,<column>``.

    Empty cells are masked. A timestamped file gets one session per UTC date.
    """
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError:
        raise IngestionError(f"series file {path} does not exist") from None
    except (OSError, UnicodeDecodeError, pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise IngestionError(f"cannot read series file {path}: {e}") from None

    if "timestamp" in frame.columns:
        others = [c for c in frame.columns if c != "timestamp"]
    elif "index" in frame.columns:
        others = [c for c in frame.columns if c != "index"]
    else:
        raise IngestionError(f"series file {path} needs an index or timestamp column")
    if column is None:
        column = "dX" if "dX" in others else (others[0] if others else None)
    if column not in others:
        raise IngestionError(f"series file {path} has no column {column!r}")

    values = pd.to_numeric(frame[column], errors="coerce").to_numpy(dtype=np.float64)
    name = Path(path).stem
    if "timestamp" not in frame.columns:
        return Series.from_array(values, name=name)

    stamps = pd.to_datetime(frame["timestamp"], errors="coerce", utc=True, format="ISO8601")
    if stamps.isna().any():
        raise IngestionError(
            "unparseable timestamps", rows=(frame.index[stamps.isna()] + 2).tolist()
        )
    calendar = TradingCalendar(as_minutes(stamps))
    return Series(values, calendar, name=name)
