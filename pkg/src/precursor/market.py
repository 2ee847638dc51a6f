"""The market mode: equal-weight average of volatility-normalized returns."""

import logging
from typing import Dict, Iterable, Optional, Union

import numpy as np
import pandas as pd

from .exceptions import MarketModeError
from .models import IntradayProfile, Series
from .statics import DEFAULT_COVERAGE, DEFAULT_MIN_BUCKET
from .timeseries import deseasonalize as divide_profile
from .timeseries import intraday_profile

logger = logging.getLogger(__name__)


class MarketMode(Series):
    """``dM(t)`` on the shared calendar.

    ``sigmas`` maps issue id to the whole-period deviation used for its
    normalization; ``profile`` is set when the mode was de-seasonalized.
    """

    __slots__ = ["sigmas", "deseasonalized", "profile"]

    def __init__(
        self,
        values,
        calendar,
        *,
        sigmas: Dict[str, float],
        deseasonalized: bool = False,
        profile: Optional[IntradayProfile] = None,
        dt: int = 1,
    ):
        super().__init__(values, calendar, dt=dt, name="market")
        if not sigmas:
            raise MarketModeError("a market mode needs at least one issue")
        self.sigmas = dict(sigmas)
        self.deseasonalized = deseasonalized
        self.profile = profile

    @property
    def n_issues(self) -> int:
        return len(self.sigmas)

    def to_frame(self, column: str = "dM", *, drop_masked: bool = True) -> pd.DataFrame:
        return super().to_frame(column, drop_masked=drop_masked)


def compute_market_mode(
    returns: Union[Dict[str, Series], Iterable[Series]],
    *,
    coverage: float = DEFAULT_COVERAGE,
    deseasonalize: bool = False,
    min_bucket: int = DEFAULT_MIN_BUCKET,
) -> MarketMode:
    """Averages ``r_i / sigma_i`` over the issues unmasked at each minute.

    A minute is masked when fewer than ``coverage`` of the issues contribute.
    Issues are reduced in issue-id order.

    :param returns: return series on one calendar, keyed or named by issue id.
    :param coverage: fraction of issues required at a minute, in ``(0, 1]``.
    :param deseasonalize: divide the mode by its own intraday profile.
    :param min_bucket: minimum samples per minute-of-day bucket for that profile.
    """
    if isinstance(returns, dict):
        returns = list(returns.values())
    issues = sorted(returns, key=lambda r: r.name)
    if not issues:
        raise MarketModeError("no return series given")
    if not 0 < coverage <= 1:
        raise ValueError("coverage must lie in (0, 1]")

    calendar = issues[0].calendar
    dt = issues[0].dt
    names = [r.name for r in issues]
    if len(set(names)) != len(names):
        raise MarketModeError("issue ids must be unique")
    for r in issues[1:]:
        if r.dt != dt or not (r.calendar is calendar or r.calendar == calendar):
            raise MarketModeError(f"issue {r.name} is not on the shared calendar")

    sigmas = {}
    total = np.zeros(len(calendar))
    present = np.zeros(len(calendar), dtype=np.int64)
    for r in issues:
        if r.count < 2:
            raise MarketModeError(f"issue {r.name} has fewer than two returns")
        sigma = float(np.std(r.compressed(), ddof=1))
        if not sigma > 0:
            raise MarketModeError(f"issue {r.name} has zero return variance")
        sigmas[r.name] = sigma
        valid = r.valid
        total[valid] += r.values[valid] / sigma
        present += valid

    need = int(np.ceil(coverage * len(issues) - 1e-9))
    enough = present >= max(need, 1)
    values = np.where(enough, total / np.maximum(present, 1), np.nan)
    logger.info(
        "market mode over %d issue(s); %d of %d minute(s) covered",
        len(issues),
        int(enough.sum()),
        len(calendar),
    )

    mode = MarketMode(values, calendar, sigmas=sigmas, dt=dt)
    if not deseasonalize:
        return mode
    profile = intraday_profile(mode, min_bucket)
    return MarketMode(
        divide_profile(mode, profile).values,
        calendar,
        sigmas=sigmas,
        deseasonalized=True,
        profile=profile,
        dt=dt,
    )
