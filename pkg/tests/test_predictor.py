import numpy as np
import pytest

from dcsm.channel import LinkBudgetParams, snr_from_sky_temp, snr_pipeline
from dcsm.predictor import (
    Ar1Params,
    BitSnrSeries,
    DegenerateSeriesError,
    PredictionState,
    ar1_forecast,
    fit_ar1,
    pacf,
    predict_pass,
    preliminary_predict,
    range_prediction_matrix,
    sky_temp_series,
    sliding_sky_mean,
    sliding_sky_means,
)
from dcsm.traces import SynthProfile, synth_trace

PARAMS = LinkBudgetParams()


def ar1_series(coef, n, mean=0.0, seed=0):
    rng = np.random.default_rng(seed)
    x = np.empty(n)
    x[0] = mean
    eps = rng.standard_normal(n)
    for i in range(1, n):
        x[i] = mean + coef * (x[i - 1] - mean) + eps[i]
    return x


# ---------------------------------------------------------------- preliminary


def test_sliding_mean_examples():
    assert sliding_sky_mean(np.full(20, 7.0), 10) == 7.0
    assert sliding_sky_mean([1.0, 2.0, 9.0], 1) == 9.0
    assert sliding_sky_mean(np.arange(1, 11), 10) == 5.5


def test_sliding_means_match_scalar_version():
    x = np.random.default_rng(1).random(50)
    means = sliding_sky_means(x, 7)
    for t in range(50):
        assert means[t] == pytest.approx(sliding_sky_mean(x[:t + 1], 7))


def test_preliminary_uses_window_one_rtt_old():
    tr = synth_trace(2, SynthProfile(duration=1800))
    rtt, n = 300, 10
    prelim = preliminary_predict(tr, PARAMS, rtt, n)
    sky = sky_temp_series(tr, PARAMS)
    s = 1000
    expected = snr_from_sky_temp(PARAMS, sky[s - rtt - n + 1:s - rtt + 1].mean(), tr.elevation[s], tr.distance[s])
    assert prelim[s] == pytest.approx(expected, rel=1e-12)
    assert prelim.shape == tr.wet_delay.shape


def test_preliminary_exact_on_constant_weather():
    prof = SynthProfile(duration=1800, wet_volatility=0.0, wet_drift=0.0, storm_probability=0.0)
    tr = synth_trace(0, prof)
    actual = snr_pipeline(PARAMS, tr.wet_delay, tr.elevation, tr.distance)
    assert np.allclose(preliminary_predict(tr, PARAMS, 600), actual, rtol=0, atol=1e-12)


# ---------------------------------------------------------------- AR(1)


def test_fit_ar1_recovers_coefficient():
    p = fit_ar1(ar1_series(0.9, 10_000, mean=5.0, seed=2))
    assert 0.85 <= p.coef <= 0.95
    assert p.mean == pytest.approx(5.0, abs=0.5)


def test_fit_ar1_white_noise():
    p = fit_ar1(np.random.default_rng(3).standard_normal(10_000))
    assert abs(p.coef) < 0.05


def test_fit_ar1_constant_is_error():
    with pytest.raises(DegenerateSeriesError):
        fit_ar1(np.full(100, 2.0))
    with pytest.raises(DegenerateSeriesError):
        fit_ar1(np.arange(5.0))


def test_ar1_forecast_examples():
    p = Ar1Params(mean=10.0, reversion=0.1)
    assert ar1_forecast(20.0, p, 0) == 20.0
    assert ar1_forecast(20.0, p, 2) == pytest.approx(18.1)
    assert ar1_forecast(20.0, p, 10_000) == pytest.approx(10.0)


# ---------------------------------------------------------------- correction


def test_predict_pass_cells_before_rtt_keep_preliminary():
    rng = np.random.default_rng(0)
    prelim = rng.standard_normal(2000)
    actual = prelim + ar1_series(0.99, 2000, seed=1) * 0.01
    out = predict_pass(actual, prelim, rtt=300)
    assert np.array_equal(out[:300], prelim[:300])


def test_predict_pass_removes_constant_bias():
    prelim = np.sin(np.arange(3000) / 200.0)
    actual = prelim + 0.4 + 0.01 * np.random.default_rng(4).standard_normal(3000)
    out = predict_pass(actual, prelim, rtt=300)
    err_before = np.abs(actual[600:] - prelim[600:]).mean()
    err_after = np.abs(actual[600:] - out[600:]).mean()
    assert err_after < 0.1 * err_before


def test_prediction_state_is_causal():
    prelim = np.zeros(1500)
    actual = ar1_series(0.995, 1500, seed=7) * 0.05
    full = predict_pass(actual, prelim, rtt=200)
    tampered = actual.copy()
    tampered[1000:] += 5.0
    again = predict_pass(tampered, prelim, rtt=200)
    # a forecast for t is made at t - rtt, so only cells >= 1000 + rtt may change
    assert np.array_equal(full[:1200], again[:1200])


def test_prediction_state_feed_updates_flag():
    prelim = np.zeros(800)
    actual = ar1_series(0.99, 800, seed=8) * 0.05
    a = PredictionState(prelim, 100, feed_updates=False)
    b = PredictionState(prelim, 100, feed_updates=True)
    for x in actual:
        a.observe(float(x))
        b.observe(float(x))
    assert not np.array_equal(a.corrected, b.corrected)


# ---------------------------------------------------------------- evaluation


def test_range_matrix_identity():
    x = np.linspace(-1, 2, 301)
    beta, acc = range_prediction_matrix(x, x)
    assert acc == 100.0
    assert np.count_nonzero(beta - np.diag(np.diag(beta))) == 0
    assert beta.sum() == pytest.approx(1.0)


def test_range_matrix_half_shifted():
    actual = np.full(100, 1.0)  # Range E
    pred = actual.copy()
    pred[:50] = 0.5  # Range D
    beta, acc = range_prediction_matrix(actual, pred)
    assert acc == 50.0
    assert beta[4, 3] == 0.5 and beta[4, 4] == 0.5


def test_range_matrix_brute_force_tally():
    rng = np.random.default_rng(9)
    a, p = rng.uniform(-1, 2, 1000), rng.uniform(-1, 2, 1000)
    edges = [-0.5, -0.1, 0.15, 0.85]

    def cls(v):
        return sum(v >= e for e in edges)

    counts = np.zeros((5, 5))
    for x, y in zip(a, p):
        counts[cls(x), cls(y)] += 1
    beta, acc = range_prediction_matrix(a, p)
    assert np.allclose(beta, counts / 1000)
    assert acc == pytest.approx(np.trace(counts) / 10)


def test_bit_snr_series_ranges():
    s = BitSnrSeries(np.array([-1.0, 0.0, 1.0]))
    assert list(s.ranges) == [0, 2, 4]
    assert np.asarray(s).shape == (3,)


def test_pacf_ar1():
    vals = pacf(ar1_series(0.8, 10_000, seed=5), 5)
    assert 0.75 <= vals[1] <= 0.85
    assert np.all(np.abs(vals[2:]) < 0.05)


def test_pacf_white_noise():
    vals = pacf(np.random.default_rng(6).standard_normal(10_000), 10)
    assert np.all(np.abs(vals[1:]) < 0.05)


def test_pacf_matches_statsmodels():
    sm = pytest.importorskip("statsmodels.tsa.stattools")
    x = ar1_series(0.6, 3000, seed=12) + 0.3 * np.random.default_rng(13).standard_normal(3000)
    ours = pacf(x, 12)
    ref = sm.pacf(x, nlags=12, method="ldb")
    assert np.allclose(ours, ref, atol=1e-10)
