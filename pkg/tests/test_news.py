from datetime import datetime, time

import numpy as np
import pandas as pd
import pytest

from precursor import news
from precursor.estimate import MrwFit
from precursor.exceptions import IngestionError, NewsError
from precursor.news import NewsSeries
from precursor.scan import WindowEstimate

DAYS = pd.date_range("2008-09-01", periods=10)


def _window(day, var_omega, hour=15):
    fit = MrwFit(lambda2=0.02, L=100.0, var_omega=var_omega, k_min=20, k_max=40, n_lags=21)
    return WindowEstimate(end=datetime.combine(day.date(), time(hour)), fit=fit)


def _trajectory(var_omega, days=DAYS):
    return [_window(day, v) for day, v in zip(days, var_omega)]


def _counts(values, days=DAYS):
    return NewsSeries.from_counts(pd.Series(np.asarray(values, dtype=float), index=days))


def test_constant_counts_are_unchanged():
    adjusted = news.deseasonalize_news(_counts(np.full(10, 7.0)))
    assert np.allclose(adjusted.adjusted, 7.0)
    assert np.array_equal(adjusted.raw, np.full(10, 7.0))


def test_weekday_adjustment_flattens_mondays():
    days = pd.date_range("2008-09-01", periods=28)
    counts = np.where(days.dayofweek == 0, 20.0, 10.0)
    adjusted = news.deseasonalize_news(_counts(counts, days))
    assert np.allclose(adjusted.adjusted, 320 / 28)
    assert adjusted.adjusted.sum() == pytest.approx(320.0)
    again = news.deseasonalize_news(adjusted)
    assert np.allclose(again.adjusted, adjusted.adjusted)


def test_weekday_without_news():
    days = pd.date_range("2008-09-01", periods=14)
    counts = np.where(days.dayofweek == 6, 0.0, 5.0)
    with pytest.raises(NewsError, match="Sunday"):
        news.deseasonalize_news(_counts(counts, days))


def test_negative_counts_are_rejected():
    with pytest.raises(NewsError):
        _counts([1.0, -1.0], DAYS[:2])


def test_exact_coupling():
    cumulative = np.arange(1.0, 11.0)
    coupling = news.fit_news_coupling(_trajectory(0.5 * cumulative**0.19), _counts(np.ones(10)))
    assert coupling.alpha == pytest.approx(0.19, rel=1e-9)
    assert coupling.prefactor == pytest.approx(0.5, rel=1e-9)
    assert coupling.r2 == pytest.approx(1.0)
    assert coupling.n == 10
    assert coupling.start.isoformat() == "2008-09-01"
    assert coupling.report()["end"] == "2008-09-10"


def test_fit_window_bounds():
    trajectory = _trajectory(0.5 * np.arange(1.0, 11.0) ** 0.19)
    coupling = news.fit_news_coupling(trajectory, _counts(np.ones(10)), "2008-09-03", "2008-09-08")
    assert coupling.n == 6
    with pytest.raises(NewsError):
        news.fit_news_coupling(trajectory, _counts(np.ones(10)), end="2008-09-04")


def test_non_positive_variance_is_rejected():
    var_omega = np.linspace(0.1, 0.2, 10)
    var_omega[2] = 0.0
    with pytest.raises(NewsError, match="2008-09-03"):
        news.fit_news_coupling(_trajectory(var_omega), _counts(np.ones(10)))


def test_alpha_ignores_count_scale():
    trajectory = _trajectory(0.5 * np.arange(1.0, 11.0) ** 0.19)
    base = news.fit_news_coupling(trajectory, _counts(np.ones(10)))
    scaled = news.fit_news_coupling(trajectory, _counts(np.full(10, 3.0)))
    assert scaled.alpha == pytest.approx(base.alpha)
    assert scaled.prefactor != pytest.approx(base.prefactor)


def test_join_keeps_last_window_of_the_day():
    trajectory = [
        _window(DAYS[0], 1.0, hour=10),
        _window(DAYS[0], 2.0, hour=15),
        _window(DAYS[1], 3.0),
    ]
    joined = news.join_news(trajectory, _counts(np.ones(10)))
    assert list(joined.columns) == ["date", "var_omega", "cum_news"]
    assert joined["var_omega"].tolist() == [2.0, 3.0]
    assert joined["cum_news"].tolist() == [1.0, 2.0]


def test_load_news(write_text):
    series = news.load_news(write_text("news.csv", "date,count\n2008-09-02,4\n2008-09-01,3\n"))
    assert series.raw.tolist() == [3.0, 4.0]
    assert series.cumulative.tolist() == [3.0, 7.0]
    assert list(series.to_frame().columns) == ["date", "raw", "adjusted", "cumulative"]


@pytest.mark.parametrize(
    "text, rows",
    [
        pytest.param("date,count\n2008-09-01,3\n2008-09-02,x\n", (3,), id="bad count"),
        pytest.param("date,count\nyesterday,3\n", (2,), id="bad date"),
        pytest.param("date,count\n2008-09-01,3\n2008-09-01,4\n", (2, 3), id="duplicate"),
    ],
)
def test_load_news_rejects(write_text, text, rows):
    with pytest.raises(IngestionError) as info:
        news.load_news(write_text("news.csv", text))
    assert info.value.rows == rows
    assert info.value.origin == "news"


def test_load_news_needs_columns(write_text):
    with pytest.raises(NewsError):
        news.load_news(write_text("news.csv", "day,n\n2008-09-01,3\n"))


@pytest.mark.slow
def test_noisy_coupling_over_seeds():
    days = pd.date_range("2008-08-01", periods=60)
    cumulative = np.arange(1.0, 61.0)
    counts = _counts(np.ones(60), days)
    hits = 0
    for seed in range(100):
        noise = np.random.default_rng(seed).normal(0.0, 0.1, len(days))
        var_omega = 0.07 * cumulative**0.19 * np.exp(noise)
        coupling = news.fit_news_coupling(_trajectory(var_omega, days), counts)
        hits += abs(coupling.alpha - 0.19) <= 2 * coupling.alpha_stderr
    assert hits >= 90
