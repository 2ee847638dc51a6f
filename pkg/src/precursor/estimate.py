"""Multifractal random walk estimators.

Two routes to the intermittency coefficient: the log-abs covariance
regression, which also yields ``L`` and ``Var(omega)``, and the curvature of
the moment scaling spectrum ``zeta_q``.
"""

import logging
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, model_validator
from scipy import fft

from .exceptions import EstimationError
from .fitting import linear_fit
from .models import Series
from .simulate import MrwParams, rho_asymptotic
from .statics import (
    DEFAULT_DT_LIST,
    DEFAULT_K_MIN,
    DEFAULT_Q_LIST,
    FIT_FORMS,
    HEAVY_TAIL_SHARE,
    HEAVY_TAIL_TOP,
    LAG_LENGTH_FACTOR,
    MAX_DT,
    MAX_Q,
    MIN_FIT_LAGS,
    MIN_LAG_PAIRS,
    MIN_MOMENT_SAMPLES,
    MIN_ZETA_CELLS,
)
from .timeseries import block_sums

logger = logging.getLogger(__name__)

ArrayLike = Union[Series, np.ndarray, Sequence[float]]


def _values(x: ArrayLike) -> np.ndarray:
    if isinstance(x, Series):
        return x.values
    return np.asarray(x, dtype=np.float64)


class CovCurve:
    """Empirical ``Cov(log|x[i]|, log|x[i+k]|)`` per lag ``k``."""

    __slots__ = ["lags", "cov", "counts", "n_zero", "dt"]

    def __init__(self, lags, cov, counts, *, n_zero: int = 0, dt: int = 1):
        self.lags = np.asarray(lags, dtype=np.int64)
        self.cov = np.asarray(cov, dtype=np.float64)
        self.counts = np.asarray(counts, dtype=np.int64)
        self.n_zero = int(n_zero)
        self.dt = int(dt)
        if not (self.lags.shape == self.cov.shape == self.counts.shape):
            raise EstimationError("covariance curve arrays must align")
        if np.any(np.diff(self.lags) <= 0) or np.any(self.lags < 1):
            raise EstimationError("lags must be positive and strictly increasing")
        if np.any(self.counts <= 0):
            raise EstimationError("every lag needs a positive pair count")

    def __len__(self):
        return len(self.lags)

    def __repr__(self):
        return f"<CovCurve lags={len(self)} zeros_excluded={self.n_zero}>"

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"k": self.lags, "cov": self.cov, "n": self.counts})


class MrwFit(BaseModel):
    """Covariance-route fit. ``L`` is in minutes and absent when ``lambda2`` is 0."""

    lambda2: float = Field(..., ge=0)
    lambda2_stderr: float = 0.0
    L: Optional[float] = Field(None, gt=0)
    var_omega: float = Field(..., ge=0)
    dt: int = 1
    k_min: int
    k_max: int
    k_cross: Optional[int] = None
    n_lags: int = 0
    r2: float = Field(0.0, ge=0, le=1)
    n_zero_excluded: int = 0
    form: str = "asymptotic"
    degenerate: bool = False
    unfit: bool = False

    @model_validator(mode="after")
    def _range(self):
        if self.n_lags and not self.k_min < self.k_max:
            raise ValueError("fit range must satisfy k_min < k_max")
        return self

    @classmethod
    def failed(cls, *, dt: int, k_min: int, n_zero_excluded: int = 0):
        """Placeholder for a window where no fit was possible."""
        return cls(
            lambda2=0.0,
            var_omega=0.0,
            dt=dt,
            k_min=k_min,
            k_max=k_min,
            n_zero_excluded=n_zero_excluded,
            degenerate=True,
            unfit=True,
        )

    @property
    def flag(self) -> str:
        if self.unfit:
            return "unfit"
        return "degenerate" if self.degenerate else "ok"

    def report(self) -> dict:
        return {
            "lambda2": self.lambda2,
            "lambda2_se": self.lambda2_stderr,
            "L": self.L,
            "var_omega": self.var_omega,
            "dt": self.dt,
            "k_min": self.k_min,
            "k_max": self.k_max,
            "k_cross": self.k_cross,
            "n_lags": self.n_lags,
            "r2": self.r2,
            "zeros_excluded": self.n_zero_excluded,
            "form": self.form,
            "flag": self.flag,
        }


def log_abs_cov(x: ArrayLike, max_lag: int, *, min_pairs: int = MIN_LAG_PAIRS) -> CovCurve:
    """Sample covariance of ``(log|x[i]|, log|x[i+k]|)`` for ``k = 1..max_lag``.

    Masked (``NaN``) and zero entries are excluded pairwise. Lags with fewer
    than ``min_pairs`` valid pairs are omitted.
    """
    values = _values(x)
    dt = x.dt if isinstance(x, Series) else 1
    n = len(values)
    max_lag = int(max_lag)
    if max_lag < 1:
        raise ValueError("max_lag must be at least 1")
    if n < LAG_LENGTH_FACTOR * max_lag:
        raise EstimationError(
            f"{n} values are too few for max_lag={max_lag} "
            f"(need {LAG_LENGTH_FACTOR * max_lag})"
        )

    finite = np.isfinite(values)
    zero = finite & (values == 0)
    valid = finite & ~zero
    if valid.sum() < 2:
        raise EstimationError("fewer than two nonzero unmasked values")

    y = np.zeros(n)
    y[valid] = np.log(np.abs(values[valid]))
    y[valid] -= y[valid].mean()
    v = valid.astype(np.float64)

    size = fft.next_fast_len(n + max_lag + 1, real=True)
    fy = fft.rfft(y, size)
    fv = fft.rfft(v, size)

    def lagged(a, b):
        # sum_i a[i] * b[i + k] for k = 1..max_lag
        return fft.irfft(np.conj(a) * b, size)[1 : max_lag + 1]

    pairs = np.rint(lagged(fv, fv))
    s_a = lagged(fy, fv)
    s_b = lagged(fv, fy)
    s_ab = lagged(fy, fy)

    keep = pairs >= max(min_pairs, 2)
    if not keep.any():
        raise EstimationError(f"no lag has {min_pairs} valid pairs")
    pairs, s_a, s_b, s_ab = pairs[keep], s_a[keep], s_b[keep], s_ab[keep]
    cov = (s_ab - s_a * s_b / pairs) / (pairs - 1)
    lags = np.arange(1, max_lag + 1)[keep]
    return CovCurve(lags, cov, pairs.astype(np.int64), n_zero=int(zero.sum()), dt=dt)


def fit_lambda_L(
    c: CovCurve,
    k_min: int = DEFAULT_K_MIN,
    dt: Optional[int] = None,
    *,
    form: str = "asymptotic",
    min_lags: int = MIN_FIT_LAGS,
) -> MrwFit:
    """Regresses ``Cov(k)`` on ``log(k dt)`` over ``[k_min, k_cross)``.

    ``k_cross`` is the first lag at or above ``k_min`` whose covariance is not
    positive. Slope is ``-lambda2`` and intercept ``lambda2 * log(L)``. With
    ``form="exact"`` the regressor is ``log((k + 1) dt)``, matching the
    discrete covariance of ``omega``.
    """
    if form not in FIT_FORMS:
        raise ValueError(f"form must be one of {FIT_FORMS}")
    dt = c.dt if dt is None else int(dt)
    use = c.lags >= k_min
    lags, cov = c.lags[use], c.cov[use]

    k_cross = None
    nonpositive = np.flatnonzero(cov <= 0)
    if len(nonpositive):
        k_cross = int(lags[nonpositive[0]])
        lags, cov = lags[: nonpositive[0]], cov[: nonpositive[0]]
    if len(lags) < min_lags:
        raise EstimationError(
            f"only {len(lags)} usable lag(s) with positive covariance above k_min={k_min}; "
            f"need {min_lags}"
        )

    shift = 1 if form == "exact" else 0
    line = linear_fit(np.log((lags + shift) * dt), cov)
    common = dict(
        lambda2_stderr=line.slope_stderr,
        dt=dt,
        k_min=int(lags[0]),
        k_max=int(lags[-1]),
        k_cross=k_cross,
        n_lags=len(lags),
        r2=line.r2,
        n_zero_excluded=c.n_zero,
        form=form,
    )

    lambda2 = -line.slope
    if lambda2 <= 0:
        logger.info("covariance does not decay over [%d, %d]; degenerate fit", lags[0], lags[-1])
        return MrwFit(lambda2=0.0, L=None, var_omega=0.0, degenerate=True, **common)

    L = float(np.exp(line.intercept / lambda2))
    var_omega = lambda2 * float(np.log(L / dt))
    if not np.isfinite(L) or var_omega < 0:
        logger.info("fitted L=%.4g is not above dt=%d; degenerate fit", L, dt)
        return MrwFit(
            lambda2=lambda2,
            L=L if np.isfinite(L) and L > 0 else None,
            var_omega=0.0,
            degenerate=True,
            **common,
        )
    return MrwFit(lambda2=lambda2, L=L, var_omega=var_omega, **common)


def theoretical_log_abs_cov(params: MrwParams, lags) -> np.ndarray:
    """Model curve ``-lambda2 log(k dt / L)`` for ``k dt <= L``, zero beyond."""
    return params.lambda2 * np.log(rho_asymptotic(params, np.asarray(lags)))


class MomentTable:
    """``M(q, dt)`` cells; omitted cells are ``NaN``."""

    __slots__ = ["q", "dt", "moments", "stderr", "counts", "heavy"]

    def __init__(self, q, dt, moments, stderr, counts, heavy):
        self.q = np.asarray(q, dtype=np.float64)
        self.dt = np.asarray(dt, dtype=np.int64)
        self.moments = np.asarray(moments, dtype=np.float64)
        self.stderr = np.asarray(stderr, dtype=np.float64)
        self.counts = np.asarray(counts, dtype=np.int64)
        self.heavy = np.asarray(heavy, dtype=bool)

    def __repr__(self):
        return f"<MomentTable q={self.q.tolist()} dt={self.dt.tolist()}>"

    def cell(self, q: float, dt: int) -> float:
        i = int(np.flatnonzero(self.q == q)[0])
        j = int(np.flatnonzero(self.dt == dt)[0])
        return float(self.moments[i, j])

    def to_frame(self) -> pd.DataFrame:
        qq, dd = np.meshgrid(self.q, self.dt, indexing="ij")
        frame = pd.DataFrame(
            {
                "q": qq.ravel(),
                "dt": dd.ravel(),
                "moment": self.moments.ravel(),
                "se": self.stderr.ravel(),
                "n": np.broadcast_to(self.counts, qq.shape).ravel(),
                "heavy_tail": self.heavy.ravel(),
            }
        )
        return frame[np.isfinite(frame["moment"])].reset_index(drop=True)


def moment_scaling(
    x: Series,
    q_list: Sequence[float] = DEFAULT_Q_LIST,
    dt_list: Sequence[int] = DEFAULT_DT_LIST,
    *,
    min_samples: int = MIN_MOMENT_SAMPLES,
) -> MomentTable:
    """Sample means of ``|dX_dt|**q`` over non-overlapping within-session sums.

    A cell with fewer than ``min_samples`` sums is omitted; a cell whose top 1%
    of samples carries more than half of the total is flagged heavy-tailed.
    """
    if not isinstance(x, Series):
        x = Series.from_array(x)
    q = np.asarray(sorted(set(float(v) for v in q_list)))
    scales = np.asarray(sorted(set(int(d) for d in dt_list)), dtype=np.int64)
    if np.any(q < 0) or np.any(q > MAX_Q):
        raise ValueError(f"moment orders must lie in [0, {MAX_Q:g}]")
    if np.any(scales < 1) or np.any(scales > MAX_DT) or np.any(scales & (scales - 1)):
        raise ValueError(f"time scales must be powers of two in [1, {MAX_DT}]")

    moments = np.full((len(q), len(scales)), np.nan)
    stderr = np.full_like(moments, np.nan)
    heavy = np.zeros(moments.shape, dtype=bool)
    counts = np.zeros(len(scales), dtype=np.int64)

    for j, dt in enumerate(scales):
        sums = x.values if dt == 1 else block_sums(x, int(dt))[0]
        a = np.abs(sums[np.isfinite(sums)])
        counts[j] = len(a)
        if len(a) < min_samples:
            logger.debug("dt=%d has %d sample(s); cells omitted", dt, len(a))
            continue
        top = max(1, int(np.ceil(HEAVY_TAIL_TOP * len(a))))
        for i, order in enumerate(q):
            powered = a**order
            total = powered.sum()
            moments[i, j] = total / len(a)
            stderr[i, j] = powered.std(ddof=1) / np.sqrt(len(a))
            if total > 0:
                share = np.partition(powered, len(a) - top)[len(a) - top :].sum() / total
                heavy[i, j] = share > HEAVY_TAIL_SHARE
    return MomentTable(q, scales * x.dt, moments, stderr, counts, heavy)


def zeta_theoretical(q, lambda2: float):
    """``(q - q (q - 2) lambda2) / 2``."""
    q = np.asarray(q, dtype=np.float64)
    out = (q - q * (q - 2.0) * lambda2) / 2.0
    return float(out) if out.ndim == 0 else out


class ZetaSpectrum:
    """Scaling exponents per ``q`` and the single-parameter quadratic fit."""

    __slots__ = ["q", "zeta", "stderr", "dt_min", "dt_max", "lambda2", "lambda2_stderr"]

    def __init__(self, q, zeta, stderr, dt_min, dt_max, lambda2, lambda2_stderr=0.0):
        self.q = np.asarray(q, dtype=np.float64)
        self.zeta = np.asarray(zeta, dtype=np.float64)
        self.stderr = np.asarray(stderr, dtype=np.float64)
        self.dt_min = int(dt_min)
        self.dt_max = int(dt_max)
        if lambda2 < 0:
            raise EstimationError("lambda2 of the spectrum must be non-negative")
        self.lambda2 = float(lambda2)
        self.lambda2_stderr = float(lambda2_stderr)

    def __repr__(self):
        return f"<ZetaSpectrum q={self.q.tolist()} lambda2={self.lambda2:.4g}>"

    def __getitem__(self, q: float) -> float:
        return float(self.zeta[np.flatnonzero(self.q == q)[0]])

    def se(self, q: float) -> float:
        return float(self.stderr[np.flatnonzero(self.q == q)[0]])

    def theoretical(self) -> np.ndarray:
        return zeta_theoretical(self.q, self.lambda2)

    def concavity(self) -> np.ndarray:
        """Second differences of ``zeta`` over consecutive ``q`` (negative when concave)."""
        return np.diff(self.zeta, 2)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"q": self.q, "zeta": self.zeta, "se": self.stderr})


def fit_zeta(table: MomentTable, *, min_cells: int = MIN_ZETA_CELLS) -> ZetaSpectrum:
    """``zeta_q`` as the OLS slope of ``log M(q, dt)`` on ``log dt``, then the
    least-squares ``lambda2`` of ``zeta_q = (q - q(q - 2) lambda2) / 2``."""
    qs, zetas, ses, used = [], [], [], []
    for i, q in enumerate(table.q):
        ok = np.isfinite(table.moments[i]) & (table.moments[i] > 0)
        if ok.sum() < min_cells:
            logger.info("q=%g has %d usable cell(s); dropped from the spectrum", q, ok.sum())
            continue
        line = linear_fit(np.log(table.dt[ok]), np.log(table.moments[i, ok]))
        qs.append(q)
        zetas.append(line.slope)
        ses.append(line.slope_stderr)
        used.extend(table.dt[ok].tolist())
    if len(qs) < 2:
        raise EstimationError("fewer than two moment orders have enough cells")

    q = np.asarray(qs)
    zeta = np.asarray(zetas)
    a = q * (q - 2.0) / 2.0
    denom = float(np.sum(a * a))
    if denom == 0:
        raise EstimationError("the moment orders carry no curvature information (use q != 0, 2)")
    residual = zeta - q / 2.0
    lambda2 = -float(np.sum(a * residual)) / denom
    dof = len(q) - 1
    spread = residual + lambda2 * a
    lambda2_se = float(np.sqrt(np.sum(spread**2) / dof / denom)) if dof else 0.0
    return ZetaSpectrum(
        q, zeta, ses, min(used), max(used), max(lambda2, 0.0), lambda2_se
    )
