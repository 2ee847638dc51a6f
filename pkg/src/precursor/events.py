"""Main shocks, cumulative counts of large returns around them and Omori fits.

Times are signed trading minutes from the main shock: positions on the
series calendar, so overnight gaps take no time.
"""

import logging
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from .exceptions import CalendarError, EstimationError, EventError
from .fitting import loglog_fit
from .models import Series
from .statics import DEFAULT_THRESHOLDS, MIN_OMORI_EVENTS

logger = logging.getLogger(__name__)

SIDES = ("before", "after")


def find_main_shock(x: Series, start=None, end=None) -> np.datetime64:
    """Timestamp of the largest unmasked ``|x|`` in ``[start, end]``; ties go to the earliest."""
    lo, hi = x.calendar.span(start, end)
    if hi <= lo:
        raise EventError(f"search range [{start}, {end}] holds no minute of the series")
    window = np.abs(x.values[lo:hi])
    if np.isnan(window).all():
        raise EventError(f"search range [{start}, {end}] is entirely masked")
    where = lo + int(np.argmax(np.where(np.isnan(window), -np.inf, window)))
    return x.calendar.timestamps[where]


class ShockFrame:
    """Exceedances of ``multiple * sigma`` on either side of one main shock.

    ``before`` holds negative times in increasing order, ``after`` positive
    times in increasing order. The shock itself is in neither.
    """

    __slots__ = ["origin", "multiple", "sigma", "before", "after"]

    def __init__(self, origin, multiple: float, sigma: float, before, after):
        self.origin = np.datetime64(origin, "m")
        self.multiple = float(multiple)
        self.sigma = float(sigma)
        self.before = np.sort(np.asarray(before, dtype=np.float64))
        self.after = np.sort(np.asarray(after, dtype=np.float64))
        if np.any(self.before >= 0) or np.any(self.after <= 0):
            raise EventError("before-times must be negative and after-times positive")

    def __repr__(self):
        return (
            f"<ShockFrame origin={self.origin} multiple={self.multiple:g} "
            f"before={len(self.before)} after={len(self.after)}>"
        )

    @property
    def threshold(self) -> float:
        return self.multiple * self.sigma

    def curve(self, side: str) -> Tuple[np.ndarray, np.ndarray]:
        """``(t, N)`` at each event of ``side``, ordered by distance from the shock."""
        if side == "after":
            t = self.after
        elif side == "before":
            t = self.before[::-1]
        else:
            raise ValueError(f"side must be one of {SIDES}")
        return t, np.arange(1, len(t) + 1)

    def count(self, t: float) -> int:
        """``|N(t) - N(0)|``."""
        if t >= 0:
            return int(np.searchsorted(self.after, t, side="right"))
        return int(len(self.before) - np.searchsorted(self.before, t, side="left"))

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for side in SIDES:
            t, n = self.curve(side)
            rows.append(pd.DataFrame({"side": side, "t_minutes": t, "N": n}))
        return pd.concat(rows, ignore_index=True)


def _period_sigma(x: Series, reference) -> float:
    values = x.values
    if reference is not None:
        lo, hi = x.calendar.span(*reference)
        values = values[lo:hi]
    values = values[np.isfinite(values)]
    if len(values) < 2:
        raise EventError("the reference period holds fewer than two unmasked values")
    sigma = float(np.std(values, ddof=1))
    if not sigma > 0:
        raise EventError("the reference period has zero deviation")
    return sigma


def _origin_index(x: Series, origin) -> int:
    try:
        return x.calendar.index_of(origin)
    except CalendarError:
        raise EventError(f"origin {origin} is not inside the series") from None


def cumulative_frequency(
    x: Series,
    origin,
    multiple: float,
    *,
    reference: Optional[Tuple] = None,
    sigma: Optional[float] = None,
) -> ShockFrame:
    """Events ``|x(t)| >= multiple * sigma`` around ``origin``.

    :param reference: ``(start, end)`` of the period ``sigma`` is taken over;
        the whole series by default.
    :param sigma: a known deviation, bypassing ``reference``.
    """
    if not multiple > 0:
        raise ValueError("threshold multiple must be positive")
    at = _origin_index(x, origin)
    if sigma is None:
        sigma = _period_sigma(x, reference)
    elif not sigma > 0:
        raise ValueError("sigma must be positive")

    magnitude = np.abs(np.where(x.valid, x.values, 0.0))
    hits = np.flatnonzero(x.valid & (magnitude >= multiple * sigma))
    times = hits - at
    frame = ShockFrame(x.calendar.timestamps[at], multiple, sigma, times[times < 0], times[times > 0])
    logger.debug("%r", frame)
    return frame


def cumulative_frequencies(
    x: Series,
    origin,
    multiples: Sequence[float] = DEFAULT_THRESHOLDS,
    *,
    reference: Optional[Tuple] = None,
    sigma: Optional[float] = None,
) -> Dict[float, ShockFrame]:
    """One frame per threshold multiple, all against the same ``sigma``."""
    if sigma is None:
        sigma = _period_sigma(x, reference)
    return {
        float(m): cumulative_frequency(x, origin, m, sigma=sigma) for m in sorted(multiples)
    }


class SideFit(BaseModel):
    beta: float
    beta_stderr: float
    prefactor: float
    r2: float = Field(..., ge=0, le=1)
    n: int = Field(..., ge=2)
    t_min: float = Field(..., gt=0)
    t_max: float = Field(..., gt=0)


class OmoriFit(BaseModel):
    """Power-law exponents of ``|N(t) - N(0)| ~ |t| ** beta`` on each side.

    A side with too few events is absent.
    """

    multiple: float
    before: Optional[SideFit] = None
    after: Optional[SideFit] = None
    n_before: int = 0
    n_after: int = 0

    @property
    def beta_b(self) -> Optional[float]:
        return None if self.before is None else self.before.beta

    @property
    def beta_a(self) -> Optional[float]:
        return None if self.after is None else self.after.beta

    @property
    def inequality(self) -> bool:
        """``0 < beta_b < beta_a < 1``."""
        if self.before is None or self.after is None:
            return False
        return 0 < self.before.beta < self.after.beta < 1

    def report(self) -> dict:
        out = {"multiple": self.multiple, "n_before": self.n_before, "n_after": self.n_after}
        for key, side in (("beta_b", self.before), ("beta_a", self.after)):
            out[key] = None if side is None else side.beta
            out[f"{key}_se"] = None if side is None else side.beta_stderr
            out[f"{key}_r2"] = None if side is None else side.r2
        out["inequality"] = self.inequality
        return out


def _fit_side(frame: ShockFrame, side: str, min_events: int) -> Optional[SideFit]:
    t, n = frame.curve(side)
    if len(t) < min_events:
        logger.info(
            "%s side of %r has %d event(s), below %d; not fitted", side, frame, len(t), min_events
        )
        return None
    try:
        line = loglog_fit(np.abs(t), n)
    except EstimationError as e:
        logger.info("%s side of %r not fitted: %s", side, frame, e.detail)
        return None
    return SideFit(
        beta=line.slope,
        beta_stderr=line.slope_stderr,
        prefactor=float(np.exp(line.intercept)),
        r2=line.r2,
        n=line.n,
        t_min=float(np.abs(t).min()),
        t_max=float(np.abs(t).max()),
    )


def fit_omori(frame: ShockFrame, *, min_events: int = MIN_OMORI_EVENTS) -> OmoriFit:
    """OLS of ``log N`` on ``log |t|`` over the event times of each side."""
    return OmoriFit(
        multiple=frame.multiple,
        before=_fit_side(frame, "before", min_events),
        after=_fit_side(frame, "after", min_events),
        n_before=len(frame.before),
        n_after=len(frame.after),
    )
