import copy
from typing import Iterator, Sequence, Tuple

import numpy as np
import pandas as pd

from .exceptions import CalendarError, ProfileError

MINUTE = np.timedelta64(1, "m")
SYNTHETIC_OPEN = np.datetime64("2007-05-01T08:00", "m")


def as_minutes(timestamps) -> np.ndarray:
    """Coerces timestamps (strings, datetimes, pandas objects) to ``datetime64[m]``."""
    if isinstance(timestamps, (pd.Series, pd.Index)):
        stamps = pd.DatetimeIndex(timestamps)
        if stamps.tz is not None:
            stamps = stamps.tz_convert("UTC").tz_localize(None)
        return stamps.to_numpy().astype("datetime64[m]")
    return np.asarray(timestamps, dtype="datetime64[m]")


class TradingCalendar:
    """Ordered trading minutes grouped into sessions.

    :param timestamps: minute timestamps, strictly increasing (UTC).
    :param session_ids: session number of every minute; defaults to one session per UTC date.
    :param open_skip: minutes to discard after each session open (scalar or per session).
    """

    __slots__ = ["timestamps", "session_ids", "open_skip", "_starts"]

    def __init__(self, timestamps, session_ids=None, open_skip=0):
        timestamps = as_minutes(timestamps)
        if timestamps.ndim != 1 or len(timestamps) == 0:
            raise CalendarError("a calendar needs at least one minute")
        if np.any(np.diff(timestamps) <= np.timedelta64(0, "m")):
            raise CalendarError("timestamps must be strictly increasing")

        if session_ids is None:
            days = timestamps.astype("datetime64[D]")
            session_ids = np.concatenate(([0], np.cumsum(days[1:] != days[:-1])))
        session_ids = np.asarray(session_ids, dtype=np.int64)
        if session_ids.shape != timestamps.shape:
            raise CalendarError("session ids must align with timestamps")
        steps = np.diff(session_ids)
        if session_ids[0] != 0 or np.any((steps != 0) & (steps != 1)):
            raise CalendarError("session ids must count up from 0 in steps of 1")

        self.timestamps = timestamps
        self.session_ids = session_ids
        self._starts = np.concatenate(
            ([0], np.flatnonzero(steps) + 1, [len(timestamps)])
        )

        skip = np.broadcast_to(np.asarray(open_skip, dtype=np.int64), (self.n_sessions,))
        lengths = self.session_lengths
        if np.any(skip < 0) or np.any(skip >= lengths):
            raise CalendarError("opening skip must satisfy 0 <= skip < session length")
        self.open_skip = skip.copy()

    @classmethod
    def synthetic(cls, n_sessions: int, session_minutes: int, *, start=SYNTHETIC_OPEN, open_skip=0):
        """A calendar of ``n_sessions`` consecutive days, each ``session_minutes`` long."""
        day = np.arange(n_sessions).repeat(session_minutes)
        minute = np.tile(np.arange(session_minutes), n_sessions)
        stamps = np.datetime64(start, "m") + day * np.timedelta64(1, "D") + minute * MINUTE
        return cls(stamps, session_ids=day, open_skip=open_skip)

    @classmethod
    def continuous(cls, n: int, *, start=SYNTHETIC_OPEN):
        """A single uninterrupted session of ``n`` minutes (simulated paths)."""
        stamps = np.datetime64(start, "m") + np.arange(n) * MINUTE
        return cls(stamps, session_ids=np.zeros(n, dtype=np.int64))

    def __len__(self):
        return len(self.timestamps)

    def __eq__(self, other):
        if not isinstance(other, TradingCalendar):
            return NotImplemented
        return (
            len(self) == len(other)
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.session_ids, other.session_ids)
            and np.array_equal(self.open_skip, other.open_skip)
        )

    def __repr__(self):
        return f"<TradingCalendar minutes={len(self)} sessions={self.n_sessions}>"

    @property
    def n_sessions(self) -> int:
        return len(self._starts) - 1

    @property
    def session_lengths(self) -> np.ndarray:
        return np.diff(self._starts)

    @property
    def dates(self) -> np.ndarray:
        """Date of every session (the date of its opening minute)."""
        return self.timestamps[self._starts[:-1]].astype("datetime64[D]")

    def sessions(self) -> Iterator[Tuple[int, int]]:
        """Yields ``(start, stop)`` positions of each session."""
        for start, stop in zip(self._starts[:-1], self._starts[1:]):
            yield int(start), int(stop)

    @property
    def offsets(self) -> np.ndarray:
        """Position of every minute counted from its session open."""
        return np.arange(len(self)) - self._starts[self.session_ids]

    @property
    def minute_of_day(self) -> np.ndarray:
        day = self.timestamps.astype("datetime64[D]")
        return ((self.timestamps - day) // MINUTE).astype(np.int64)

    @property
    def day_of(self) -> np.ndarray:
        """UTC date of every minute."""
        return self.timestamps.astype("datetime64[D]")

    @property
    def skipped(self) -> np.ndarray:
        """``True`` for minutes inside the opening skip of their session."""
        return self.offsets < self.open_skip[self.session_ids]

    def index_of(self, timestamp) -> int:
        stamp = np.datetime64(timestamp, "m")
        i = int(np.searchsorted(self.timestamps, stamp))
        if i >= len(self) or self.timestamps[i] != stamp:
            raise CalendarError(f"{stamp} is not a calendar minute")
        return i

    def span(self, start=None, end=None) -> Tuple[int, int]:
        """Positions ``[lo, hi)`` covering timestamps in ``[start, end]`` (inclusive)."""
        lo = 0 if start is None else int(np.searchsorted(self.timestamps, np.datetime64(start, "m")))
        if end is None:
            hi = len(self)
        else:
            end = np.datetime64(end)
            if end.dtype == np.dtype("datetime64[D]"):
                end = end + np.timedelta64(1, "D") - MINUTE
            hi = int(np.searchsorted(self.timestamps, np.datetime64(end, "m"), side="right"))
        return lo, hi

    def slice(self, start: int, stop: int) -> "TradingCalendar":
        """Sub-calendar of positions ``[start, stop)``; the opening skip is dropped."""
        ids = self.session_ids[start:stop]
        return TradingCalendar(self.timestamps[start:stop], session_ids=ids - ids[0])

    def with_open_skip(self, skips) -> "TradingCalendar":
        """Returns a copy with per-session skips; ``skips`` maps session date to minutes."""
        if isinstance(skips, dict):
            lookup = {np.datetime64(k, "D"): int(v) for k, v in skips.items()}
            skips = [lookup.get(d, 0) for d in self.dates]
        return TradingCalendar(self.timestamps, session_ids=self.session_ids, open_skip=skips)


class Series:
    """Values on a :class:`TradingCalendar`. ``NaN`` marks a masked minute.

    :param values: one real per calendar minute.
    :param calendar: the shared calendar.
    :param dt: sampling interval of the values, in minutes.
    :param name: issue id or a descriptive label.
    :param mask: optional boolean array; ``True`` entries are masked.
    """

    __slots__ = ["values", "calendar", "dt", "name"]

    def __init__(self, values, calendar: TradingCalendar, *, dt: int = 1, name: str = "", mask=None):
        values = np.array(values, dtype=np.float64)
        if values.shape != (len(calendar),):
            raise CalendarError(
                f"{len(values)} values do not align with {len(calendar)} calendar minutes"
            )
        if mask is not None:
            values[np.asarray(mask, dtype=bool)] = np.nan
        values[~np.isfinite(values)] = np.nan
        if int(dt) < 1:
            raise CalendarError("dt must be a positive number of minutes")
        self.values = values
        self.calendar = calendar
        self.dt = int(dt)
        self.name = name

    @classmethod
    def from_array(cls, values, *, dt: int = 1, name: str = "", **kwargs):
        """Wraps a bare array on a single continuous session."""
        values = np.asarray(values, dtype=np.float64)
        return cls(values, TradingCalendar.continuous(len(values)), dt=dt, name=name, **kwargs)

    def __len__(self):
        return len(self.values)

    def __repr__(self):
        return f"<{type(self).__name__} {self.name!r} n={len(self)} masked={int(self.mask.sum())}>"

    @property
    def mask(self) -> np.ndarray:
        return np.isnan(self.values)

    @property
    def valid(self) -> np.ndarray:
        return ~np.isnan(self.values)

    @property
    def count(self) -> int:
        return int(self.valid.sum())

    def compressed(self) -> np.ndarray:
        """Unmasked values only."""
        return self.values[self.valid]

    def replace(self, **changes):
        """Shallow copy with the given slots replaced (``values`` is copied)."""
        clone = copy.copy(self)
        for key, value in changes.items():
            setattr(clone, key, value)
        if "values" in changes:
            values = np.array(changes["values"], dtype=np.float64)
            if values.shape != (len(clone.calendar),):
                raise CalendarError("replacement values do not align with the calendar")
            clone.values = values
        return clone

    def window(self, start: int, stop: int):
        """Positions ``[start, stop)`` as a series on a sub-calendar."""
        return self.replace(
            values=self.values[start:stop].copy(), calendar=self.calendar.slice(start, stop)
        )

    def to_frame(self, column: str = "value", *, drop_masked: bool = True) -> pd.DataFrame:
        frame = pd.DataFrame(
            {"timestamp": pd.DatetimeIndex(self.calendar.timestamps), column: self.values}
        )
        if drop_masked:
            frame = frame[self.valid]
        return frame.reset_index(drop=True)


class PriceSeries(Series):
    """Minute prices of one issue. Every unmasked price is positive."""

    __slots__ = []

    def __init__(self, issue_id: str, calendar: TradingCalendar, prices, *, mask=None):
        prices = np.array(prices, dtype=np.float64)
        bad = ~(prices > 0)
        prices[bad] = np.nan
        super().__init__(prices, calendar, dt=1, name=issue_id, mask=mask)

    @property
    def issue_id(self) -> str:
        return self.name

    @property
    def prices(self) -> np.ndarray:
        return self.values


class ReturnSeries(Series):
    """Log-returns over ``dt`` minutes; no value spans a session boundary."""

    __slots__ = []

    @property
    def issue_id(self) -> str:
        return self.name

    @property
    def boundary(self) -> np.ndarray:
        """``True`` at the first minute of every session."""
        return self.calendar.offsets == 0


class IntradayProfile:
    """Standard deviation per minute-of-day bucket.

    Buckets too sparse to stand alone share the deviation of the group they were
    merged into; ``counts`` holds the sample count of that group.
    """

    __slots__ = ["minutes", "std", "counts", "groups"]

    def __init__(self, minutes, std, counts, groups=None):
        self.minutes = np.asarray(minutes, dtype=np.int64)
        self.std = np.asarray(std, dtype=np.float64)
        self.counts = np.asarray(counts, dtype=np.int64)
        self.groups = (
            np.arange(len(self.minutes)) if groups is None else np.asarray(groups, dtype=np.int64)
        )
        if not (self.minutes.shape == self.std.shape == self.counts.shape):
            raise ProfileError("profile arrays must align")
        if np.any(np.diff(self.minutes) <= 0):
            raise ProfileError("profile minutes must be strictly increasing")
        if np.any(~(self.std > 0)):
            raise ProfileError("profile deviations must be positive")

    @classmethod
    def flat(cls, minutes: Sequence[int], value: float = 1.0):
        minutes = np.unique(np.asarray(minutes, dtype=np.int64))
        return cls(minutes, np.full(len(minutes), float(value)), np.zeros(len(minutes)))

    def __len__(self):
        return len(self.minutes)

    def __getitem__(self, minute: int) -> float:
        return float(self.lookup(np.array([minute]))[0])

    def __repr__(self):
        return f"<IntradayProfile buckets={len(self)} groups={self.n_groups}>"

    @property
    def n_groups(self) -> int:
        return len(np.unique(self.groups))

    def lookup(self, minutes: np.ndarray) -> np.ndarray:
        minutes = np.asarray(minutes, dtype=np.int64)
        where = np.searchsorted(self.minutes, minutes)
        where = np.clip(where, 0, len(self.minutes) - 1)
        missing = self.minutes[where] != minutes
        if np.any(missing):
            absent = np.unique(minutes[missing])[:5]
            raise ProfileError(f"profile has no bucket for minute(s) of day {absent.tolist()}")
        return self.std[where]

    def ratio(self) -> float:
        """Largest over smallest bucket deviation."""
        return float(self.std.max() / self.std.min())

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"minute": self.minutes, "std": self.std, "count": self.counts})

