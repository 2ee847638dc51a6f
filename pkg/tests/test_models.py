import numpy as np
import pytest

from precursor.exceptions import CalendarError, ProfileError
from precursor.models import IntradayProfile, PriceSeries, Series, TradingCalendar


def test_synthetic_calendar(calendar):
    assert len(calendar) == 300
    assert calendar.n_sessions == 5
    assert calendar.session_lengths.tolist() == [60] * 5
    assert calendar.dates[1] - calendar.dates[0] == np.timedelta64(1, "D")
    assert calendar.offsets[60] == 0
    assert calendar.minute_of_day[0] == 8 * 60


@pytest.mark.parametrize(
    "stamps, ids, skip",
    [
        pytest.param(["2008-10-08T08:01", "2008-10-08T08:00"], None, 0, id="decreasing timestamps"),
        pytest.param(["2008-10-08T08:00", "2008-10-08T08:01"], [0, 2], 0, id="session id jump"),
        pytest.param(["2008-10-08T08:00", "2008-10-08T08:01"], None, 2, id="skip covers session"),
        pytest.param([], None, 0, id="empty"),
    ],
)
def test_calendar_invariants(stamps, ids, skip):
    with pytest.raises(CalendarError):
        TradingCalendar(np.array(stamps, dtype="datetime64[m]"), session_ids=ids, open_skip=skip)


def test_sessions_default_to_dates():
    stamps = ["2008-10-08T15:59", "2008-10-08T16:00", "2008-10-09T08:00"]
    calendar = TradingCalendar(stamps)
    assert calendar.session_ids.tolist() == [0, 0, 1]
    assert list(calendar.sessions()) == [(0, 2), (2, 3)]


def test_span_includes_whole_end_day(calendar):
    lo, hi = calendar.span("2007-05-02", "2007-05-02")
    assert (lo, hi) == (60, 120)
    assert calendar.span() == (0, 300)


def test_index_of(calendar):
    assert calendar.index_of("2007-05-01T08:05") == 5
    with pytest.raises(CalendarError):
        calendar.index_of("2007-05-01T07:00")


def test_per_day_open_skip(calendar):
    skipped = calendar.with_open_skip({"2007-05-02": 10}).skipped
    assert skipped.sum() == 10
    assert skipped[60:70].all()


def test_series_masks_non_finite(calendar):
    values = np.ones(len(calendar))
    values[3] = np.inf
    s = Series(values, calendar, mask=np.arange(len(calendar)) == 7)
    assert s.count == len(calendar) - 2
    assert np.isnan(s.values[[3, 7]]).all()


def test_series_window_is_a_fresh_view(calendar):
    s = Series(np.arange(300.0), calendar)
    w = s.window(50, 130)
    assert len(w) == 80
    assert w.calendar.n_sessions == 3
    w.values[0] = -1
    assert s.values[50] == 50


def test_series_rejects_misaligned_values(calendar):
    with pytest.raises(CalendarError):
        Series(np.ones(3), calendar)


def test_price_series_masks_non_positive(calendar):
    prices = np.full(len(calendar), 10.0)
    prices[[1, 2]] = [-5.0, 0.0]
    p = PriceSeries("AAA", calendar, prices)
    assert p.issue_id == "AAA"
    assert p.mask.sum() == 2


def test_profile_lookup_and_missing_bucket():
    prof = IntradayProfile([480, 481], [1.0, 2.0], [40, 40])
    assert prof[481] == 2.0
    assert prof.ratio() == 2.0
    with pytest.raises(ProfileError):
        prof.lookup(np.array([482]))


def test_profile_rejects_zero_deviation():
    with pytest.raises(ProfileError):
        IntradayProfile([480], [0.0], [40])
