import numpy as np
import pytest
from pydantic import ValidationError

from precursor import estimate, simulate
from precursor.exceptions import EstimationError
from precursor.models import Series
from precursor.simulate import MrwParams


def _brute_force(x, max_lag):
    out = []
    for k in range(1, max_lag + 1):
        a, b = x[:-k], x[k:]
        ok = np.isfinite(a) & np.isfinite(b) & (a != 0) & (b != 0)
        out.append(np.cov(np.log(np.abs(a[ok])), np.log(np.abs(b[ok])))[0, 1])
    return np.array(out)


@pytest.mark.parametrize("n", [pytest.param(1000, id="1e3"), pytest.param(10_000, id="1e4")])
def test_log_abs_cov_matches_brute_force(rng, n):
    x = simulate.simulate_mrw(MrwParams(lambda2=0.05, L=256.0), n, seed=3)
    x[rng.choice(n, 40, replace=False)] = np.nan
    x[rng.choice(n, 10, replace=False)] = 0.0
    curve = estimate.log_abs_cov(x, 50)
    expected = _brute_force(x, 50)
    scale = np.nanvar(np.log(np.abs(x[np.isfinite(x) & (x != 0)])))
    assert curve.lags.tolist() == list(range(1, 51))
    assert np.allclose(curve.cov, expected, rtol=1e-10, atol=1e-10 * scale)
    assert curve.n_zero == np.count_nonzero(x == 0)


def test_log_abs_cov_pair_counts():
    x = np.arange(1.0, 1001.0)
    x[::10] = np.nan
    curve = estimate.log_abs_cov(Series.from_array(x), 5)
    valid = np.isfinite(x)
    assert curve.counts.tolist() == [int(np.sum(valid[:-k] & valid[k:])) for k in range(1, 6)]


def test_log_abs_cov_of_iid_noise_is_zero(white_noise):
    curve = estimate.log_abs_cov(white_noise(20_000), 100)
    # Var(log|Z|) = pi**2 / 8
    se = (np.pi**2 / 8) / np.sqrt(curve.counts)
    assert np.all(np.abs(curve.cov) < 5 * se)


def test_log_abs_cov_needs_length(white_noise):
    with pytest.raises(EstimationError):
        estimate.log_abs_cov(white_noise(999), 100)


def test_log_abs_cov_drops_sparse_lags():
    x = np.full(2000, np.nan)
    x[:150] = np.arange(1.0, 151.0)
    curve = estimate.log_abs_cov(x, 100)
    assert curve.lags.max() == 50


def test_log_abs_cov_all_lags_sparse():
    x = np.full(2000, np.nan)
    x[:50] = 1.0 + np.arange(50.0)
    with pytest.raises(EstimationError):
        estimate.log_abs_cov(x, 10)


def _curve(cov, lags=None):
    lags = np.arange(1, len(cov) + 1) if lags is None else lags
    return estimate.CovCurve(lags, cov, np.full(len(lags), 1000))


def test_fit_exact_curve():
    k = np.arange(1, 501)
    fit = estimate.fit_lambda_L(_curve(-0.02 * np.log(k / 1000.0)), k_min=20, dt=1)
    assert fit.lambda2 == pytest.approx(0.02, rel=1e-10)
    assert fit.L == pytest.approx(1000.0, rel=1e-10)
    assert fit.var_omega == pytest.approx(0.02 * np.log(1000.0), rel=1e-10)
    assert fit.r2 == pytest.approx(1.0)
    assert (fit.k_min, fit.k_max, fit.k_cross) == (20, 500, None)
    assert fit.flag == "ok"


def test_fit_reproduces_published_line():
    k = np.arange(1, 10_001)
    fit = estimate.fit_lambda_L(_curve(-0.018 * np.log(k / 12975.43)), k_min=20, dt=1)
    assert fit.lambda2 == pytest.approx(0.018, rel=1e-10)
    assert fit.L == pytest.approx(12975.43, rel=1e-8)


def test_fit_stops_at_first_non_positive_lag():
    k = np.arange(1, 1001)
    cov = -0.02 * np.log(k / 300.0)
    cov[k == 300] = 0.0
    fit = estimate.fit_lambda_L(_curve(cov), k_min=20)
    assert fit.k_cross == 300
    assert fit.k_max == 299
    assert fit.L == pytest.approx(300.0, rel=1e-10)


def test_fit_exact_form():
    k = np.arange(1, 501)
    fit = estimate.fit_lambda_L(_curve(-0.02 * np.log((k + 1) / 1000.0)), form="exact")
    assert fit.lambda2 == pytest.approx(0.02, rel=1e-10)
    assert fit.L == pytest.approx(1000.0, rel=1e-10)
    assert fit.form == "exact"


def test_fit_needs_eight_lags():
    with pytest.raises(EstimationError):
        estimate.fit_lambda_L(_curve(-0.02 * np.log(np.arange(1, 26) / 1000.0)), k_min=20)


def test_fit_clamps_rising_curve():
    k = np.arange(1, 201)
    fit = estimate.fit_lambda_L(_curve(1.0 + 0.01 * np.log(k)), k_min=20)
    assert fit.lambda2 == 0.0
    assert fit.L is None
    assert fit.var_omega == 0.0
    assert fit.flag == "degenerate"


def test_fit_uses_coarse_minutes():
    k = np.arange(1, 501)
    curve = estimate.CovCurve(k, -0.02 * np.log(8 * k / 4096.0), np.full(500, 1000), dt=8)
    fit = estimate.fit_lambda_L(curve)
    assert fit.dt == 8
    assert fit.L == pytest.approx(4096.0, rel=1e-10)
    assert fit.var_omega == pytest.approx(0.02 * np.log(4096.0 / 8), rel=1e-10)


def test_theoretical_curve_round_trip():
    params = MrwParams(lambda2=0.03, L=2000.0, dt=2)
    lags = np.arange(1, 3001)
    cov = estimate.theoretical_log_abs_cov(params, lags)
    curve = estimate.CovCurve(lags, cov, np.full(3000, 500), dt=2)
    fit = estimate.fit_lambda_L(curve)
    assert fit.lambda2 == pytest.approx(0.03, rel=1e-10)
    assert fit.L == pytest.approx(2000.0, rel=1e-10)
    assert fit.k_cross == 1000


def test_fit_range_invariant():
    with pytest.raises(ValidationError):
        estimate.MrwFit(lambda2=0.02, L=10.0, var_omega=0.1, k_min=30, k_max=20, n_lags=5)
    failed = estimate.MrwFit.failed(dt=1, k_min=20)
    assert failed.flag == "unfit"


def test_cov_curve_invariants():
    with pytest.raises(EstimationError):
        estimate.CovCurve([2, 1], [0.1, 0.1], [10, 10])
    with pytest.raises(EstimationError):
        estimate.CovCurve([1, 2], [0.1, 0.1], [10, 0])


@pytest.mark.parametrize(
    "q, lambda2, expected",
    [
        pytest.param(2, 0.3, 1.0, id="q=2 pinned"),
        pytest.param(1, 0.018, 0.509, id="q=1"),
        pytest.param(5, 0.0, 2.5, id="monofractal"),
    ],
)
def test_zeta_theoretical(q, lambda2, expected):
    assert estimate.zeta_theoretical(q, lambda2) == pytest.approx(expected)


def test_zeroth_moment_is_one(white_noise):
    table = estimate.moment_scaling(white_noise(4096), [0, 2], [1, 2, 4])
    assert np.all(table.moments[0] == 1.0)


def test_second_moment_scales_with_dt(white_noise):
    dts = [1, 2, 4, 8, 16, 32, 64, 128, 256]
    table = estimate.moment_scaling(white_noise(2**16), [2], dts)
    for j, dt in enumerate(dts):
        assert abs(table.moments[0, j] - dt) <= 4 * table.stderr[0, j]


def test_sparse_cells_are_omitted(white_noise):
    table = estimate.moment_scaling(white_noise(1000), [1, 2], [1, 16, 32])
    assert np.isfinite(table.moments[:, 1]).all()
    assert np.isnan(table.moments[:, 2]).all()
    assert len(table.to_frame()) == 4


def test_moment_blocks_stay_in_sessions(calendar):
    s = Series(np.ones(len(calendar)), calendar)
    table = estimate.moment_scaling(s, [1], [1, 8], min_samples=1)
    # 60-minute sessions hold seven complete 8-minute blocks each
    assert table.counts.tolist() == [300, 35]
    assert table.cell(1, 8) == 8.0


def test_heavy_tail_flag():
    x = np.ones(1000)
    x[0] = 1e6
    table = estimate.moment_scaling(Series.from_array(x), [1, 2], [1])
    assert table.heavy[:, 0].tolist() == [True, True]


@pytest.mark.parametrize(
    "q_list, dt_list",
    [
        pytest.param([1, 6], [1, 2], id="q above cap"),
        pytest.param([1, 2], [1, 3], id="non-dyadic"),
        pytest.param([1, 2], [8192], id="too long"),
    ],
)
def test_moment_scaling_domain(white_noise, q_list, dt_list):
    with pytest.raises(ValueError):
        estimate.moment_scaling(white_noise(100), q_list, dt_list)


def _exact_table(lambda2, q=(1, 2, 3, 4, 5), dts=(1, 2, 4, 8, 16)):
    q = np.asarray(q, dtype=float)
    dts = np.asarray(dts)
    moments = dts[None, :] ** estimate.zeta_theoretical(q, lambda2)[:, None]
    shape = moments.shape
    return estimate.MomentTable(q, dts, moments, np.zeros(shape), np.full(len(dts), 100), np.zeros(shape, bool))


def test_fit_zeta_exact():
    spectrum = estimate.fit_zeta(_exact_table(0.018))
    assert spectrum.lambda2 == pytest.approx(0.018, rel=1e-10)
    assert spectrum[4] == pytest.approx(1.928, rel=1e-10)
    assert np.all(spectrum.concavity() < 0)
    assert (spectrum.dt_min, spectrum.dt_max) == (1, 16)
    assert list(spectrum.to_frame().columns) == ["q", "zeta", "se"]


def test_fit_zeta_needs_cells_and_orders():
    with pytest.raises(EstimationError):
        estimate.fit_zeta(_exact_table(0.02, q=(3,)))
    with pytest.raises(EstimationError):
        estimate.fit_zeta(_exact_table(0.02, dts=(1, 2, 4)))
    with pytest.raises(EstimationError):
        estimate.fit_zeta(_exact_table(0.02, q=(0, 2)))


def test_white_noise_spectrum(white_noise):
    table = estimate.moment_scaling(white_noise(2**17), [1, 2, 3, 4], [1, 2, 4, 8, 16, 32, 64])
    spectrum = estimate.fit_zeta(table)
    for q in (1, 2, 3, 4):
        assert abs(spectrum[q] - q / 2) <= 4 * spectrum.se(q) + 0.03
    assert spectrum.lambda2 < 0.02


@pytest.mark.slow
def test_covariance_route_recovery():
    params = MrwParams(lambda2=0.02, L=4096.0)
    hits = 0
    for seed in range(100):
        x = simulate.simulate_mrw(params, 2**18, seed)
        fit = estimate.fit_lambda_L(estimate.log_abs_cov(x, 8192), k_min=20)
        hits += 0.014 <= fit.lambda2 <= 0.026 and fit.L is not None and 2048 <= fit.L <= 8192
    assert hits >= 90


@pytest.mark.slow
def test_spectrum_pins_and_agrees_with_covariance_route():
    params = MrwParams(lambda2=0.018, L=4096.0)
    zeta2, spectral, covariance = [], [], []
    for seed in range(20):
        x = Series.from_array(simulate.simulate_mrw(params, 2**18, seed))
        spectrum = estimate.fit_zeta(estimate.moment_scaling(x, [1, 2, 3, 4, 5], [2**j for j in range(9)]))
        zeta2.append(spectrum[2])
        spectral.append(spectrum.lambda2)
        covariance.append(estimate.fit_lambda_L(estimate.log_abs_cov(x, 8192)).lambda2)
    zeta2 = np.asarray(zeta2)
    # pinned against the spread over seeds
    assert np.all(np.abs(zeta2 - 1.0) <= 0.1)
    assert zeta2.mean() == pytest.approx(1.0, abs=3 * zeta2.std(ddof=1) / np.sqrt(len(zeta2)))
    spectral_band = np.percentile(spectral, [5, 95])
    covariance_band = np.percentile(covariance, [5, 95])
    assert max(spectral_band[0], covariance_band[0]) <= min(spectral_band[1], covariance_band[1])
    assert spectral_band[0] <= np.median(covariance) <= spectral_band[1]
