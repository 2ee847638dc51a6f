"""Ingestion and preprocessing of minute series.

Log-returns never bridge a session boundary, intraday seasonality is divided
out per minute-of-day bucket, and local linear trends are removed block by block.
"""

import logging
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd

from .config import IngestionConfig
from .exceptions import CalendarError, IngestionError, ProfileError
from .models import (
    MINUTE,
    IntradayProfile,
    PriceSeries,
    ReturnSeries,
    Series,
    TradingCalendar,
    as_minutes,
)
from .statics import CALENDAR_COLUMNS, DEFAULT_ENCODING, DEFAULT_MIN_BUCKET

logger = logging.getLogger(__name__)


class IngestionReport:
    """Rejected or masked input rows, one line each."""

    __slots__ = ["source", "entries"]

    def __init__(self, source: str = ""):
        self.source = source
        self.entries: List[Tuple[int, str, str]] = []

    def add(self, row: int, reason: str, raw: str = "") -> None:
        self.entries.append((int(row), reason, raw))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def lines(self) -> List[str]:
        return [f"row {row}: {reason} [{raw}]" for row, reason, raw in sorted(self.entries)]

    def write(self, path) -> Path:
        path = Path(path)
        text = "\n".join(self.lines())
        path.write_text(text + ("\n" if text else ""), encoding=DEFAULT_ENCODING)
        return path


class Ingestion(NamedTuple):
    series: Dict[str, PriceSeries]
    calendar: TradingCalendar
    report: IngestionReport


def _read_csv(path, what: str) -> pd.DataFrame:
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except FileNotFoundError:
        raise IngestionError(f"{what} file {path} does not exist") from None
    except (OSError, UnicodeDecodeError, pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise IngestionError(f"cannot read {what} file {path}: {e}") from None


def load_calendar(path) -> Dict[np.datetime64, int]:
    """Reads the optional ``date,open_skip_minutes`` file into a date -> skip mapping."""
    frame = _read_csv(path, "calendar")
    missing = [c for c in CALENDAR_COLUMNS if c not in frame.columns]
    if missing:
        raise IngestionError(f"calendar file {path} lacks column(s) {missing}")
    dates = pd.to_datetime(frame["date"], errors="coerce", format="ISO8601")
    skips = pd.to_numeric(frame["open_skip_minutes"], errors="coerce")
    bad = dates.isna() | skips.isna() | (skips < 0)
    if bad.any():
        raise IngestionError(
            "calendar file has malformed rows", rows=(frame.index[bad] + 2).tolist()
        )
    return {
        np.datetime64(d.date(), "D"): int(s) for d, s in zip(dates, skips.astype(int))
    }


def load_prices(path, schema: Optional[IngestionConfig] = None) -> Ingestion:
    """Reads a long-format ``timestamp,issue,price`` CSV.

    One :class:`PriceSeries` per issue is returned, all on the calendar built
    from the union of observed minutes. Rows with non-positive or non-numeric
    prices are masked and listed in the report; rows whose timestamp or issue
    cannot be parsed are dropped and listed too.

    :param path: the price CSV.
    :param schema: column names, optional calendar file and default opening skip.
    """
    schema = schema or IngestionConfig()
    frame = _read_csv(path, "price")
    columns = (schema.timestamp_column, schema.issue_column, schema.price_column)
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise IngestionError(f"price file {path} lacks column(s) {missing}")

    report = IngestionReport(str(path))
    positions = np.arange(len(frame))
    rows = positions + 2  # header is line 1

    def raw(i: int) -> str:
        return ",".join(frame.iloc[i][list(columns)])

    stamps = pd.to_datetime(
        frame[schema.timestamp_column], errors="coerce", utc=True, format="ISO8601"
    )
    issues = frame[schema.issue_column].str.strip()
    prices = pd.to_numeric(frame[schema.price_column], errors="coerce")

    unplaced = (stamps.isna() | (issues == "")).to_numpy()
    for i in positions[unplaced]:
        report.add(rows[i], "unparseable timestamp or issue", raw(i))
    if unplaced.all():
        raise IngestionError(f"price file {path} has no parseable rows")

    keep = ~unplaced
    positions, rows = positions[keep], rows[keep]
    minutes = as_minutes(stamps[keep])
    issues = issues[keep].to_numpy()
    prices = prices[keep].to_numpy(dtype=np.float64)

    keys = pd.DataFrame({"t": minutes, "issue": issues})
    duplicated = keys.duplicated(keep=False).to_numpy()
    if duplicated.any():
        raise IngestionError("duplicate (timestamp, issue) pairs", rows=rows[duplicated].tolist())

    bad = ~(prices > 0)
    for i, row in zip(positions[bad], rows[bad]):
        report.add(row, "non-positive or non-numeric price (masked)", raw(i))

    skips = schema.open_skip
    calendar = TradingCalendar(np.unique(minutes), open_skip=0)
    if schema.calendar_path is not None:
        per_day = load_calendar(schema.calendar_path)
        skips = [per_day.get(d, schema.open_skip) for d in calendar.dates]
    calendar = calendar.with_open_skip(np.broadcast_to(skips, (calendar.n_sessions,)))

    codes, names = pd.factorize(issues, sort=True)
    where = np.searchsorted(calendar.timestamps, minutes)
    matrix = np.full((len(names), len(calendar)), np.nan)
    matrix[codes, where] = np.where(bad, np.nan, prices)

    series = {
        str(name): PriceSeries(str(name), calendar, matrix[i]) for i, name in enumerate(names)
    }
    logger.info(
        "ingested %d issue(s) over %d minute(s) in %d session(s); %d row(s) reported",
        len(series),
        len(calendar),
        calendar.n_sessions,
        len(report),
    )
    return Ingestion(series, calendar, report)


def log_returns(p: Series, dt: int = 1) -> ReturnSeries:
    """``log P(t) - log P(t - dt)`` where both minutes share a session and are unmasked.

    Minutes inside the opening skip of their session never contribute, and a
    return is only computed when the two endpoints are exactly ``dt`` clock
    minutes apart.
    """
    dt = int(dt)
    if dt < 1:
        raise ValueError("dt must be at least one minute")
    calendar = p.calendar
    if dt >= calendar.session_lengths.max():
        raise CalendarError(f"dt={dt} is not shorter than the longest session; no returns")

    log_price = np.log(p.values)
    log_price[calendar.skipped] = np.nan

    out = np.full(len(p), np.nan)
    same = (calendar.session_ids[dt:] == calendar.session_ids[:-dt]) & (
        calendar.timestamps[dt:] - calendar.timestamps[:-dt] == dt * MINUTE
    )
    out[dt:] = np.where(same, log_price[dt:] - log_price[:-dt], np.nan)
    if np.isnan(out).all():
        raise CalendarError(f"{p.name or 'series'} has no computable {dt}-minute returns")
    return ReturnSeries(out, calendar, dt=dt, name=p.name)


def _merge_buckets(counts: np.ndarray, min_count: int) -> np.ndarray:
    """Group index per bucket. A sparse bucket joins the group before it; leading
    sparse buckets accumulate forward until the minimum is met."""
    groups = np.empty(len(counts), dtype=np.int64)
    current, pending, n_groups = 0, 0, 0
    for i, c in enumerate(counts):
        if n_groups and (pending == 0) and c < min_count:
            groups[i] = n_groups - 1
            continue
        groups[i] = n_groups
        current += c
        pending += 1
        if current >= min_count:
            n_groups += 1
            current, pending = 0, 0
    if pending:
        # only reachable while no group has closed yet
        raise ProfileError(
            f"only {int(counts.sum())} samples in total; need {min_count} per bucket"
        )
    return groups


def intraday_profile(r: Series, min_count: int = DEFAULT_MIN_BUCKET) -> IntradayProfile:
    """Sample standard deviation of ``r`` per minute-of-day over the whole series.

    Buckets holding fewer than ``min_count`` unmasked samples are merged with
    their earlier neighbour.
    """
    calendar = r.calendar
    if calendar.n_sessions < 2:
        raise ProfileError("an intraday profile needs more than one session")

    valid = r.valid
    x = r.values[valid]
    minutes, inverse = np.unique(calendar.minute_of_day[valid], return_inverse=True)
    counts = np.bincount(inverse, minlength=len(minutes))
    groups = _merge_buckets(counts, int(min_count))
    if groups[-1] + 1 < len(minutes):
        logger.debug("merged %d sparse bucket(s)", len(minutes) - groups[-1] - 1)

    member = groups[inverse]
    n = np.bincount(member)
    mean = np.bincount(member, weights=x) / n
    var = np.bincount(member, weights=(x - mean[member]) ** 2) / (n - 1)
    std = np.sqrt(var)
    if np.any(~(std > 0)):
        flat = minutes[np.isin(groups, np.flatnonzero(~(std > 0)))]
        raise ProfileError(f"zero deviation in bucket(s) at minute(s) {flat[:5].tolist()}")
    return IntradayProfile(minutes, std[groups], n[groups], groups)


def deseasonalize(r: Series, prof: IntradayProfile) -> Series:
    """Divides every unmasked value by the deviation of its minute-of-day bucket."""
    valid = r.valid
    out = r.values.copy()
    out[valid] = r.values[valid] / prof.lookup(r.calendar.minute_of_day[valid])
    return r.replace(values=out)


def _block_ids(calendar: TradingCalendar, size: int) -> Tuple[np.ndarray, np.ndarray]:
    """Consecutive block index of every minute (restarting at each session) and
    the offset of the minute within its block."""
    offsets = calendar.offsets
    block = offsets // size
    ids = calendar.session_ids
    change = (ids[1:] != ids[:-1]) | (block[1:] != block[:-1])
    return np.concatenate(([0], np.cumsum(change))), offsets % size


def detrend_local(r: Series, block: int) -> Series:
    """Removes the least-squares line of every non-overlapping ``block``.

    Blocks restart at session boundaries; a trailing partial block gets its own
    fit when it holds at least two unmasked values. A series with no complete
    block anywhere is returned unchanged.
    """
    block = int(block)
    if block < 2:
        raise ValueError("detrend block must span at least two minutes")
    if r.calendar.session_lengths.max() < block:
        logger.info("no complete %d-minute block in %s; left unchanged", block, r.name or "series")
        return r.replace(values=r.values.copy())

    gid, x = _block_ids(r.calendar, block)
    x = x.astype(np.float64)
    w = r.valid.astype(np.float64)
    y = np.where(r.valid, r.values, 0.0)

    n = np.bincount(gid, weights=w)
    sx = np.bincount(gid, weights=w * x)
    sy = np.bincount(gid, weights=y)
    sxx = np.bincount(gid, weights=w * x * x)
    sxy = np.bincount(gid, weights=x * y)

    den = n * sxx - sx * sx
    fit = (n >= 2) & (den > 0)
    safe = np.where(fit, den, 1.0)
    slope = np.where(fit, (n * sxy - sx * sy) / safe, 0.0)
    intercept = np.where(fit, (sy - slope * sx) / np.where(n > 0, n, 1.0), 0.0)
    return r.replace(values=r.values - (intercept[gid] + slope[gid] * x))


def block_sums(r: Series, dt: int) -> Tuple[np.ndarray, np.ndarray]:
    """Sums of ``dt`` consecutive minutes in non-overlapping within-session blocks.

    Returns ``(sums, end_positions)`` for every complete block; a block holding
    any masked minute sums to ``NaN``.
    """
    gid, _ = _block_ids(r.calendar, dt)
    valid = r.valid
    size = np.bincount(gid)
    n_valid = np.bincount(gid, weights=valid.astype(np.float64))
    sums = np.bincount(gid, weights=np.where(valid, r.values, 0.0))
    ends = np.flatnonzero(np.concatenate((gid[1:] != gid[:-1], [True])))
    complete = size == dt
    sums = np.where(n_valid == dt, sums, np.nan)
    return sums[complete], ends[complete]


def coarse_grain(r: Series, dt: int) -> Series:
    """Within-session ``dt``-minute sums, stamped at the last minute of each block."""
    dt = int(dt)
    if dt < 1:
        raise ValueError("dt must be at least one minute")
    if dt == 1:
        return r
    sums, ends = block_sums(r, dt)
    if not len(sums):
        raise CalendarError(f"no session holds a complete {dt}-minute block")
    _, ids = np.unique(r.calendar.session_ids[ends], return_inverse=True)
    calendar = TradingCalendar(r.calendar.timestamps[ends], session_ids=ids)
    return r.replace(values=sums, calendar=calendar, dt=r.dt * dt)
