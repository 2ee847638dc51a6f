"""Sliding-window evolution of the log-volatility variance."""

import logging
from datetime import datetime
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from .background import BackgroundQueue
from .estimate import MrwFit, fit_lambda_L, log_abs_cov
from .exceptions import CalendarError, EstimationError, ScanError
from .models import Series
from .statics import (
    DEFAULT_DETREND_BLOCK,
    DEFAULT_K_MIN,
    DEFAULT_LARGE_MULTIPLE,
    DETREND_MODES,
    LAG_LENGTH_FACTOR,
    MIN_WINDOW_FACTOR,
)
from .timeseries import coarse_grain, detrend_local

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ("window_end", "lambda2", "L", "var_omega", "r2", "flag")


class WindowEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    end: datetime
    fit: MrwFit
    detrend: str = "none"
    dt: int = 1

    @property
    def flag(self) -> str:
        return self.fit.flag

    @property
    def date(self):
        return self.end.date()


def _default_stride(x: Series, window: int) -> int:
    """One trading day: the median session length, or the window itself for a
    single uninterrupted session."""
    calendar = x.calendar
    if calendar.n_sessions > 1:
        return int(np.median(calendar.session_lengths))
    return window


class _WindowFitter:
    __slots__ = ["x", "window", "dt", "detrend", "block", "k_min", "max_lag", "form"]

    def __init__(self, x, window, dt, detrend, block, k_min, max_lag, form):
        self.x = x
        self.window = window
        self.dt = dt
        self.detrend = detrend
        self.block = block
        self.k_min = k_min
        self.max_lag = max_lag
        self.form = form

    def __call__(self, stop: int) -> WindowEstimate:
        view = self.x.window(stop - self.window, stop)
        end = pd.Timestamp(view.calendar.timestamps[-1]).to_pydatetime()
        n_zero = 0
        try:
            y = coarse_grain(view, self.dt)
            if self.detrend == "local-block":
                y = detrend_local(y, self.block)
            max_lag = self.max_lag or max(len(y) // LAG_LENGTH_FACTOR, 1)
            curve = log_abs_cov(y, max_lag)
            n_zero = curve.n_zero
            fit = fit_lambda_L(curve, self.k_min, y.dt, form=self.form)
        except (EstimationError, CalendarError) as e:
            logger.debug("window ending %s left unfit: %s", end, e.detail)
            fit = MrwFit.failed(dt=self.x.dt * self.dt, k_min=self.k_min, n_zero_excluded=n_zero)
        return WindowEstimate(end=end, fit=fit, detrend=self.detrend, dt=self.x.dt * self.dt)


def window_scan(
    x: Series,
    window: int,
    stride: Optional[int] = None,
    dt: int = 1,
    detrend: str = "none",
    *,
    detrend_block: int = DEFAULT_DETREND_BLOCK,
    k_min: int = DEFAULT_K_MIN,
    max_lag: Optional[int] = None,
    form: str = "asymptotic",
    workers: Optional[int] = 1,
) -> List[WindowEstimate]:
    """Fits the covariance route in every window ``[t - window, t]``.

    ``window`` and ``stride`` count trading minutes of ``x``. Inside each
    window the 1-minute values are summed into ``dt``-minute blocks, which are
    detrended with ``detrend_block`` when ``detrend="local-block"``. Windows
    where no fit is possible stay in the trajectory with the ``unfit`` flag.

    :param x: 1-minute series, typically the market mode.
    :param workers: worker threads; the trajectory is identical for any count.
    """
    window = int(window)
    dt = int(dt)
    if detrend not in DETREND_MODES:
        raise ScanError(f"detrend must be one of {DETREND_MODES}")
    if stride is None:
        stride = _default_stride(x, window)
    if stride <= 0:
        raise ScanError("stride must be positive")
    if window < MIN_WINDOW_FACTOR * dt:
        raise ScanError(f"window of {window} min is below {MIN_WINDOW_FACTOR} * dt = {MIN_WINDOW_FACTOR * dt}")
    if window > len(x):
        raise ScanError(f"window of {window} min exceeds the series length {len(x)}")

    stops = range(window, len(x) + 1, int(stride))
    fitter = _WindowFitter(x, window, dt, detrend, detrend_block, k_min, max_lag, form)
    with BackgroundQueue(workers) as queue:
        trajectory = queue.map(fitter, stops)

    short = sum(1 for w in trajectory if w.fit.L is not None and window <= w.fit.L)
    if short:
        logger.warning(
            "%d of %d window(s) are not longer than their fitted L; "
            "Var(omega) needs L < window to be meaningful",
            short,
            len(trajectory),
        )
    logger.info("scanned %d window(s) of %d min, stride %d", len(trajectory), window, stride)
    return trajectory


def trajectory_frame(trajectory: Sequence[WindowEstimate]) -> pd.DataFrame:
    """Plot-ready ``window_end,lambda2,L,var_omega,r2,flag`` table."""
    return pd.DataFrame(
        {
            "window_end": [pd.Timestamp(w.end) for w in trajectory],
            "lambda2": [w.fit.lambda2 for w in trajectory],
            "L": [np.nan if w.fit.L is None else w.fit.L for w in trajectory],
            "var_omega": [w.fit.var_omega for w in trajectory],
            "r2": [w.fit.r2 for w in trajectory],
            "flag": [w.flag for w in trajectory],
        },
        columns=list(TRAJECTORY_COLUMNS),
    )


def daily_large_count(x: Series, multiple: float = DEFAULT_LARGE_MULTIPLE) -> pd.Series:
    """Per trading day, the number of unmasked ``|x| > multiple * sigma``.

    ``sigma`` is the whole-period sample deviation of ``x``.
    """
    if not multiple > 0:
        raise ValueError("threshold multiple must be positive")
    if x.count < 2:
        raise ScanError("a period deviation needs at least two unmasked values")
    sigma = float(np.std(x.compressed(), ddof=1))
    large = np.abs(np.where(x.valid, x.values, 0.0)) > multiple * sigma
    counts = np.bincount(
        x.calendar.session_ids, weights=large.astype(np.float64), minlength=x.calendar.n_sessions
    )
    return pd.Series(
        counts.astype(np.int64),
        index=pd.DatetimeIndex(x.calendar.dates, name="date"),
        name="count",
    )
