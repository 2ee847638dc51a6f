import numpy as np
from pydantic import BaseModel
from scipy.stats import linregress

from .exceptions import EstimationError


class LineFit(BaseModel):
    """Ordinary least squares ``y = intercept + slope * x``."""

    slope: float
    slope_stderr: float
    intercept: float
    intercept_stderr: float
    r2: float
    n: int

    def predict(self, x):
        return self.intercept + self.slope * np.asarray(x, dtype=np.float64)


def linear_fit(x, y) -> LineFit:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y):
        raise EstimationError("x and y must have the same length")
    if len(x) < 2:
        raise EstimationError("a line needs at least two points")
    try:
        res = linregress(x, y)
    except ValueError as e:
        raise EstimationError(str(e)) from None
    return LineFit(
        slope=float(res.slope),
        slope_stderr=float(res.stderr),
        intercept=float(res.intercept),
        intercept_stderr=float(res.intercept_stderr),
        r2=float(np.clip(res.rvalue**2, 0.0, 1.0)),
        n=len(x),
    )


def loglog_fit(x, y) -> LineFit:
    """Power law ``y ~ exp(intercept) * x**slope`` by OLS in log-log space."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.any(~(x > 0)) or np.any(~(y > 0)):
        raise EstimationError("a log-log fit needs strictly positive data")
    return linear_fit(np.log(x), np.log(y))
