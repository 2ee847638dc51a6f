import numpy as np
import pytest

import precursor
from precursor.models import Series, TradingCalendar


@pytest.fixture
def rng():
    return np.random.default_rng(20070501)


@pytest.fixture
def calendar():
    return TradingCalendar.synthetic(5, 60)


@pytest.fixture
def white_noise(rng):
    def make(n, *, sigma=1.0, name="noise"):
        return Series.from_array(rng.normal(0.0, sigma, n), name=name)

    return make


@pytest.fixture
def mrw_params():
    return precursor.MrwParams(sigma=1.0, lambda2=0.018, L=12975.43, dt=1)


@pytest.fixture
def write_text(tmp_path):
    def write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write


@pytest.fixture
def price_csv(write_text):
    return write_text(
        "prices.csv",
        "timestamp,issue,price\n"
        "2008-10-08T08:00:00Z,AAA,100\n"
        "2008-10-08T08:00:00Z,BBB,50\n"
        "2008-10-08T08:01:00Z,AAA,101\n"
        "2008-10-08T08:01:00Z,BBB,51\n"
        "2008-10-08T08:02:00Z,AAA,102\n"
        "2008-10-08T08:02:00Z,BBB,49\n",
    )


@pytest.fixture
def session_prices(write_text, rng):
    """Two issues, six 40-minute sessions of geometric random walk prices."""

    def make(name="session_prices.csv", *, sessions=6, minutes=40):
        calendar = TradingCalendar.synthetic(sessions, minutes)
        lines = ["timestamp,issue,price"]
        for issue, scale in (("AAA", 0.001), ("BBB", 0.002)):
            path = 100 * np.exp(np.cumsum(rng.normal(0.0, scale, len(calendar))))
            for stamp, price in zip(calendar.timestamps, path):
                lines.append(f"{np.datetime_as_string(stamp)}:00Z,{issue},{price:.6f}")
        return write_text(name, "\n".join(lines) + "\n"), calendar

    return make
