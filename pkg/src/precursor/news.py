"""Daily news counts and their power-law coupling to the variance trajectory."""

import logging
from datetime import date
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from .exceptions import EstimationError, IngestionError, NewsError
from .fitting import loglog_fit
from .scan import WindowEstimate
from .statics import MIN_NEWS_POINTS, NEWS_COLUMNS

logger = logging.getLogger(__name__)

JOIN_COLUMNS = ("date", "var_omega", "cum_news")


class NewsSeries:
    """Per-day counts with their weekday-adjusted and cumulative forms."""

    __slots__ = ["dates", "raw", "adjusted"]

    def __init__(self, dates, raw, adjusted=None):
        self.dates = np.asarray(dates, dtype="datetime64[D]")
        self.raw = np.asarray(raw, dtype=np.float64)
        self.adjusted = self.raw.copy() if adjusted is None else np.asarray(adjusted, dtype=np.float64)
        if not (self.dates.shape == self.raw.shape == self.adjusted.shape):
            raise NewsError("dates and counts must align")
        if len(self.dates) == 0:
            raise NewsError("a news series needs at least one day")
        if np.any(np.diff(self.dates) <= np.timedelta64(0, "D")):
            raise NewsError("news dates must be strictly increasing")
        if np.any(~(self.raw >= 0)) or np.any(~(self.adjusted >= 0)):
            raise NewsError("news counts must be non-negative")

    @classmethod
    def from_counts(cls, counts: pd.Series):
        """From a date-indexed series of counts."""
        counts = counts.sort_index()
        return cls(pd.DatetimeIndex(counts.index).to_numpy().astype("datetime64[D]"), counts.to_numpy())

    def __len__(self):
        return len(self.dates)

    def __repr__(self):
        return f"<NewsSeries days={len(self)} total={self.raw.sum():g}>"

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.adjusted)

    @property
    def weekdays(self) -> np.ndarray:
        """Monday is 0."""
        return pd.DatetimeIndex(self.dates).dayofweek.to_numpy()

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "date": pd.DatetimeIndex(self.dates.astype("datetime64[ns]")),
                "raw": self.raw,
                "adjusted": self.adjusted,
                "cumulative": self.cumulative,
            }
        )


def load_news(path) -> NewsSeries:
    """Reads a ``date,count`` CSV."""
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except FileNotFoundError:
        raise IngestionError(f"news file {path} does not exist", origin="news") from None
    except (OSError, UnicodeDecodeError, pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise IngestionError(f"cannot read news file {path}: {e}", origin="news") from None

    missing = [c for c in NEWS_COLUMNS if c not in frame.columns]
    if missing:
        raise NewsError(f"news file {path} lacks column(s) {missing}")
    dates = pd.to_datetime(frame["date"], errors="coerce", format="ISO8601")
    counts = pd.to_numeric(frame["count"], errors="coerce")
    bad = dates.isna() | counts.isna() | (counts < 0)
    if bad.any():
        raise IngestionError(
            "malformed news rows", rows=(frame.index[bad] + 2).tolist(), origin="news"
        )
    if dates.duplicated().any():
        raise IngestionError(
            "duplicate news dates",
            rows=(frame.index[dates.duplicated(keep=False)] + 2).tolist(),
            origin="news",
        )
    return NewsSeries.from_counts(pd.Series(counts.to_numpy(), index=dates))


def deseasonalize_news(raw: NewsSeries) -> NewsSeries:
    """``adjusted / mean(adjusted on the same weekday) * mean(adjusted)``.

    Works from the current adjusted counts, so a second pass leaves them as they are.
    """
    weekday = raw.weekdays
    present = np.unique(weekday)
    sums = np.bincount(weekday, weights=raw.adjusted, minlength=7)
    days = np.bincount(weekday, minlength=7)
    means = np.divide(sums, days, out=np.zeros(7), where=days > 0)
    empty = [int(d) for d in present if means[d] == 0]
    if empty:
        names = ", ".join(pd.Timestamp(2024, 1, 1 + d).day_name() for d in empty)
        raise NewsError(f"no news on any {names}; weekday adjustment undefined")

    period_mean = raw.adjusted.mean()
    adjusted = raw.adjusted / means[weekday] * period_mean
    return NewsSeries(raw.dates, raw.raw, adjusted)


def _bounds(start, end):
    lo = None if start is None else np.datetime64(start, "D")
    hi = None if end is None else np.datetime64(end, "D")
    return lo, hi


def join_news(
    trajectory: Sequence[WindowEstimate], news: NewsSeries, start=None, end=None
) -> pd.DataFrame:
    """Pairs the last window ending on each date with that day's cumulative count."""
    ends = pd.DataFrame(
        {
            "date": pd.DatetimeIndex(
                [pd.Timestamp(w.end).normalize() for w in trajectory]
            ).astype("datetime64[ns]"),
            "var_omega": [w.fit.var_omega for w in trajectory],
        }
    )
    ends = ends.drop_duplicates("date", keep="last")
    counts = pd.DataFrame(
        {"date": pd.DatetimeIndex(news.dates.astype("datetime64[ns]")), "cum_news": news.cumulative}
    )
    joined = ends.merge(counts, on="date", how="inner")

    lo, hi = _bounds(start, end)
    day = joined["date"].to_numpy().astype("datetime64[D]")
    keep = np.ones(len(joined), dtype=bool)
    if lo is not None:
        keep &= day >= lo
    if hi is not None:
        keep &= day <= hi
    return joined[keep].reset_index(drop=True)[list(JOIN_COLUMNS)]


class NewsCoupling(BaseModel):
    """``Var(omega) ~ prefactor * N_n ** alpha``."""

    alpha: float
    alpha_stderr: float
    prefactor: float = Field(..., gt=0)
    r2: float = Field(..., ge=0, le=1)
    n: int = Field(..., ge=MIN_NEWS_POINTS)
    start: date
    end: date
    detrend: str = "none"

    def report(self) -> dict:
        return {
            "alpha": self.alpha,
            "alpha_se": self.alpha_stderr,
            "prefactor": self.prefactor,
            "r2": self.r2,
            "n": self.n,
            "start": self.start.isoformat(),
            "end": self.end.isoformat(),
            "detrend": self.detrend,
        }


def fit_news_coupling(
    trajectory: Sequence[WindowEstimate],
    news: NewsSeries,
    start=None,
    end=None,
    *,
    min_points: int = MIN_NEWS_POINTS,
) -> NewsCoupling:
    """OLS of ``log Var(omega)`` on ``log N_n`` over the dates both share in ``[start, end]``."""
    joined = join_news(trajectory, news, start, end)
    if len(joined) < min_points:
        raise NewsError(f"only {len(joined)} joined date(s) in the window; need {min_points}")
    bad = joined[(joined["var_omega"] <= 0) | (joined["cum_news"] <= 0)]
    if len(bad):
        days = ", ".join(d.date().isoformat() for d in bad["date"][:5])
        raise NewsError(f"non-positive variance or cumulative news on {days}")

    try:
        line = loglog_fit(joined["cum_news"], joined["var_omega"])
    except EstimationError as e:
        raise NewsError(e.detail) from None
    detrend = {w.detrend for w in trajectory}
    coupling = NewsCoupling(
        alpha=line.slope,
        alpha_stderr=line.slope_stderr,
        prefactor=float(np.exp(line.intercept)),
        r2=line.r2,
        n=line.n,
        start=joined["date"].iloc[0].date(),
        end=joined["date"].iloc[-1].date(),
        detrend=detrend.pop() if len(detrend) == 1 else "mixed",
    )
    logger.info("news coupling alpha=%.4g (se %.2g) over %d day(s)", coupling.alpha, coupling.alpha_stderr, coupling.n)
    return coupling
