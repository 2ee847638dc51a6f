"""Synthetic multifractal random walks and Omori event streams.

The log-volatility ``omega`` is a stationary Gaussian process with mean
``-lambda2 * log(L / dt)`` and covariance ``lambda2 * log(rho[k])``; increments
are ``dX = eps * exp(omega)`` with ``eps`` Gaussian white noise of variance
``sigma**2 * dt``. All logarithms are natural.
"""

import logging
import zlib
from typing import Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy import linalg

from .exceptions import SimulationError
from .models import Series
from .statics import (
    DENSE_FALLBACK_LIMIT,
    EMBEDDING_TOLERANCE,
    MIN_OMORI_EVENTS,
    MIN_OMORI_HORIZON,
)

logger = logging.getLogger(__name__)


def substream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for a named stream of one user seed.

    Streams are keyed by name, so adding a stream never shifts another.
    """
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(key,)))


class MrwParams(BaseModel):
    sigma: float = Field(1.0, gt=0, description="volatility scale per sqrt(minute)")
    lambda2: float = Field(..., ge=0, description="intermittency coefficient")
    L: float = Field(..., gt=0, description="decorrelation length, minutes")
    dt: int = Field(1, ge=1, description="sampling interval, minutes")

    @model_validator(mode="after")
    def _length_exceeds_step(self):
        if not self.L > self.dt:
            raise ValueError("L must exceed dt")
        return self

    @property
    def var_omega(self) -> float:
        return self.lambda2 * float(np.log(self.L / self.dt))

    @property
    def mean_omega(self) -> float:
        return -self.var_omega


class OmoriParams(BaseModel):
    beta_b: float = Field(..., gt=0, le=1)
    beta_a: float = Field(..., gt=0, le=1)
    c_b: float = Field(..., gt=0)
    c_a: float = Field(..., gt=0)
    horizon_before: float = Field(..., ge=MIN_OMORI_HORIZON)
    horizon_after: float = Field(..., ge=MIN_OMORI_HORIZON)
    paper_mode: bool = False

    @model_validator(mode="after")
    def _foreshock_slower(self):
        if self.paper_mode and not (0 < self.beta_b < self.beta_a < 1):
            raise ValueError("paper mode requires 0 < beta_b < beta_a < 1")
        return self

    @property
    def expected_before(self) -> float:
        return self.c_b * self.horizon_before**self.beta_b

    @property
    def expected_after(self) -> float:
        return self.c_a * self.horizon_after**self.beta_a


def rho(params: MrwParams, k) -> Union[float, np.ndarray]:
    """``L / ((k + 1) dt)`` for ``k <= L/dt - 1``, else 1."""
    lag = np.asarray(k, dtype=np.float64)
    if np.any(lag < 0):
        raise ValueError("lags must be non-negative")
    out = np.where(
        lag <= params.L / params.dt - 1, params.L / ((lag + 1) * params.dt), 1.0
    )
    return float(out) if out.ndim == 0 else out


def rho_asymptotic(params: MrwParams, k) -> Union[float, np.ndarray]:
    """``L / (k dt)`` floored at 1, the form behind the log-abs covariance law.

    Differs from :func:`rho` by the ``k + 1`` shift; at ``k = 0`` both give ``L / dt``.
    """
    lag = np.asarray(k, dtype=np.float64)
    if np.any(lag < 0):
        raise ValueError("lags must be non-negative")
    out = np.maximum(params.L / (np.maximum(lag, 1.0) * params.dt), 1.0)
    return float(out) if out.ndim == 0 else out


def omega_covariance(params: MrwParams, lags) -> np.ndarray:
    return params.lambda2 * np.log(rho(params, np.asarray(lags)))


def _dense_sample(acov: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    w, v = linalg.eigh(linalg.toeplitz(acov))
    if w.min() < -EMBEDDING_TOLERANCE * max(w.max(), 1.0):
        raise SimulationError("covariance matrix is not positive semi-definite")
    return v @ (np.sqrt(np.clip(w, 0.0, None)) * rng.standard_normal(len(acov)))


def gaussian_sample(acov_of, n: int, rng: np.random.Generator) -> np.ndarray:
    """Stationary Gaussian sample with autocovariance ``acov_of(lags)`` by
    circulant embedding; dense factorisation when the embedding is indefinite."""
    half = 1 << int(np.ceil(np.log2(max(n - 1, 1))))
    acov = acov_of(np.arange(half + 1))
    row = np.concatenate((acov, acov[-2:0:-1]))
    eig = np.fft.fft(row).real
    if eig.min() < -EMBEDDING_TOLERANCE * max(eig.max(), 1.0):
        if n > DENSE_FALLBACK_LIMIT:
            raise SimulationError(
                f"circulant embedding is indefinite (min eigenvalue {eig.min():.3g}) "
                f"and n={n} exceeds the dense limit {DENSE_FALLBACK_LIMIT}"
            )
        logger.warning(
            "circulant embedding indefinite (min eigenvalue %.3g); dense fallback for n=%d",
            eig.min(),
            n,
        )
        return _dense_sample(acov[:n], rng)

    m = len(row)
    z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    return np.fft.fft(np.sqrt(np.clip(eig, 0.0, None) / m) * z).real[:n]


def simulate_omega(params: MrwParams, n: int, seed: int) -> np.ndarray:
    """Log-volatility path of length ``n``; deterministic for a fixed seed."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if not np.isfinite(params.var_omega):
        raise SimulationError("lambda2 * log(L/dt) is not finite")
    if params.lambda2 == 0:
        return np.zeros(n)
    rng = substream(seed, "omega")
    return gaussian_sample(lambda k: omega_covariance(params, k), n, rng) + params.mean_omega


def simulate_mrw(params: MrwParams, n: int, seed: int, *, return_omega: bool = False):
    """Increments ``dX = eps * exp(omega)``.

    ``eps`` and ``omega`` come from separate named streams, so changing
    ``lambda2`` leaves the ``eps`` draw untouched.
    """
    omega = simulate_omega(params, n, seed)
    eps = substream(seed, "epsilon").normal(0.0, params.sigma * np.sqrt(params.dt), n)
    dx = eps * np.exp(omega)
    if return_omega:
        return dx, omega
    return dx


def _inverted_side(beta: float, c: float, horizon: float, rng: np.random.Generator) -> np.ndarray:
    expected = c * horizon**beta
    size = int(expected + 10 * np.sqrt(expected) + 10)
    arrivals = np.cumsum(rng.exponential(1.0, size))
    while arrivals[-1] < expected:
        more = np.cumsum(rng.exponential(1.0, size)) + arrivals[-1]
        arrivals = np.concatenate((arrivals, more))
    arrivals = arrivals[arrivals <= expected]
    return (arrivals / c) ** (1.0 / beta)


def _place_on_grid(t: np.ndarray, resolution: float) -> np.ndarray:
    """Moves increasing positive times up to distinct multiples of ``resolution``.

    Events crowded into one cell are pushed outward a cell at a time.
    """
    cells = np.ceil(t / resolution)
    step = np.arange(len(cells))
    return (np.maximum.accumulate(cells - step) + step) * resolution


def simulate_omori_events(
    params: OmoriParams, seed: int, *, resolution: Optional[float] = None
) -> np.ndarray:
    """Signed event times (minutes from the main shock at 0), sorted.

    Each side is a point process with cumulative mean ``c * |t| ** beta``,
    placed by inverting that curve at unit-mean exponential arrivals.

    :param resolution: when given, every event sits on its own multiple of
        ``resolution`` minutes, ready for :func:`omori_spike_series` with
        ``scale=1 / resolution``.
    """
    for side, expected in (("before", params.expected_before), ("after", params.expected_after)):
        if expected < MIN_OMORI_EVENTS:
            raise SimulationError(
                f"only {expected:.1f} expected events {side} the shock; "
                f"at least {MIN_OMORI_EVENTS} are needed to fit"
            )
    if resolution is not None and not resolution > 0:
        raise ValueError("resolution must be positive")
    before = _inverted_side(
        params.beta_b, params.c_b, params.horizon_before, substream(seed, "omori-before")
    )
    after = _inverted_side(
        params.beta_a, params.c_a, params.horizon_after, substream(seed, "omori-after")
    )
    if resolution is not None:
        before = _place_on_grid(before, resolution)
        after = _place_on_grid(after, resolution)
    return np.concatenate((-before[::-1], [0.0], after))


def omori_spike_series(
    events, *, scale: float = 1.0, amplitude: float = 10.0, shock: float = 20.0, pad: int = 1
) -> Tuple[Series, int]:
    """Spikes of ``amplitude`` at ``events * scale`` (rounded) on a grid of zeros.

    The main shock sits at time 0. Returns the series and the shock position;
    dividing the frame times by ``scale`` gives the events back.

    :param scale: grid cells per minute.
    :raises SimulationError: when two events share a cell or one lands on the shock.
    """
    if not scale > 0:
        raise ValueError("scale must be positive")
    events = np.asarray(events, dtype=np.float64)
    events = events[events != 0]
    cells = np.rint(events * scale).astype(np.int64)
    clashes = len(cells) - len(np.unique(cells)) + np.count_nonzero(cells == 0)
    if clashes:
        raise SimulationError(
            f"{clashes} event(s) share a cell with another event or the shock at scale {scale:g}; "
            "use a finer scale or simulate with a resolution"
        )
    low = int(min(cells.min(), 0)) if len(cells) else 0
    high = int(max(cells.max(), 0)) if len(cells) else 0
    origin = -low + pad
    values = np.zeros(origin + high + pad + 1)
    values[origin + cells] = amplitude
    values[origin] = shock
    return Series.from_array(values, name="omori"), origin
