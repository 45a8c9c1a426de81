"""
Two-phase bit-SNR prediction.

1. *Preliminary*: the sky temperature averaged over the last ``N`` seconds
   is pushed through the link budget with the elevation and range one RTT
   ahead, giving ``X_hat[t + RTT]``.
2. *Real-time correction*: the error ``e_t = X_t - X_hat_t`` between the
   measured and the preliminary SNR is modelled as AR(1) on a rolling
   window, and its forecast RTT steps ahead is added to the preliminary
   value.

Also provides the actual-vs-predicted range matrix and a PACF estimator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import LinkBudgetParams, opacity_from_wet_delay, sky_temp_from_opacity, snr_from_sky_temp
from .coding import classify_range
from .traces import PassTrace

MIN_FIT_SAMPLES = 30


class DegenerateSeriesError(ValueError):
    """Series too short or constant for a regression."""


@dataclass(frozen=True)
class BitSnrSeries:
    """Per-second bit-SNR (dB) with its range classification."""

    values: np.ndarray

    @property
    def ranges(self) -> np.ndarray:
        return classify_range(self.values)

    def __len__(self):
        return len(self.values)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


# --------------------------------------------------------------------------
# preliminary prediction


def sliding_sky_mean(history, n: int = 10) -> float:
    """Mean of the last ``min(n, len(history))`` sky-temperature samples."""
    if n < 1:
        raise ValueError("window length must be >= 1")
    history = np.asarray(history, dtype=float)
    if history.size == 0:
        raise ValueError("empty history")
    return float(history[-n:].mean())


def sliding_sky_means(series, n: int = 10) -> np.ndarray:
    """Causal trailing means for every index (shorter windows at the start)."""
    if n < 1:
        raise ValueError("window length must be >= 1")
    series = np.asarray(series, dtype=float)
    csum = np.concatenate(([0.0], np.cumsum(series)))
    idx = np.arange(1, len(series) + 1)
    lo = np.maximum(idx - n, 0)
    return (csum[idx] - csum[lo]) / (idx - lo)


def sky_temp_series(trace: PassTrace, params: LinkBudgetParams) -> np.ndarray:
    tau = opacity_from_wet_delay(trace.wet_delay, params.opacity_offset, params.opacity_slope)
    return np.asarray(sky_temp_from_opacity(tau))


def preliminary_predict(trace: PassTrace, params: LinkBudgetParams, rtt: int, n: int = 10) -> np.ndarray:
    """A-priori SNR forecast ``X_hat`` aligned with the trace.

    ``X_hat[s]`` uses the sky-temperature window ending at ``s - rtt`` and
    the geometry of ``s``.  Cells ``s < rtt`` have no window that old and
    reuse the first one.
    """
    if rtt < 0:
        raise ValueError("rtt must be non-negative")
    smooth = sliding_sky_means(sky_temp_series(trace, params), n)
    src = np.maximum(np.arange(len(smooth)) - int(rtt), 0)
    return np.asarray(snr_from_sky_temp(params, smooth[src], trace.elevation, trace.distance))


# --------------------------------------------------------------------------
# AR(1)


@dataclass(frozen=True)
class Ar1Params:
    """``X_t = c + coef * X_{t-1} + eps``, reported as long-term mean and
    reversion rate ``1 - coef``."""

    mean: float
    reversion: float
    noise_var: float = 0.0

    @property
    def coef(self) -> float:
        return 1.0 - self.reversion


def fit_ar1(series) -> Ar1Params:
    """Lag-1 least-squares AR(1) fit."""
    x = np.asarray(series, dtype=float)
    if x.size < MIN_FIT_SAMPLES:
        raise DegenerateSeriesError(f"need at least {MIN_FIT_SAMPLES} samples")
    prev, cur = x[:-1], x[1:]
    pm, cm = prev.mean(), cur.mean()
    sxx = np.dot(prev - pm, prev - pm)
    if sxx <= 1e-12 * max(1.0, pm * pm) * prev.size:
        raise DegenerateSeriesError("constant series")
    coef = float(np.dot(prev - pm, cur - cm) / sxx)
    c = cm - coef * pm
    resid = cur - c - coef * prev
    if abs(1.0 - coef) > 1e-9:
        mean = c / (1.0 - coef)
    else:
        mean = float(x.mean())
    return Ar1Params(mean=float(mean), reversion=1.0 - coef, noise_var=float(resid.var()))


def ar1_forecast(x_t: float, params: Ar1Params, n: int) -> float:
    """Conditional mean ``n`` steps ahead: ``mu (1 - (1-phi)^n) + x_t (1-phi)^n``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    keep = params.coef ** n
    return params.mean * (1.0 - keep) + x_t * keep


# --------------------------------------------------------------------------
# real-time correction


class PredictionState:
    """Online error-correction state for one pass.

    Feed measured SNRs in time order with :meth:`observe`; each call emits
    the corrected forecast for ``t + rtt``.

    Parameters
    ----------
    preliminary : array
        Preliminary forecast ``X_hat`` for the whole pass.
    rtt : int
        Prediction horizon in seconds.
    window, refit_every : int
        Rolling AR(1) fit window and refit cadence (seconds).
    feed_updates : bool
        If true, the one-step correction ``X_hat[t+1] += e_hat[t+1]`` is fed
        back into the next error sample.  Off by default: the error is then
        measured against the untouched preliminary forecast.
    """

    def __init__(self, preliminary, rtt: int, window: int = 600, refit_every: int = 60,
                 feed_updates: bool = False):
        self.rtt = int(rtt)
        self.window = int(window)
        self.refit_every = int(refit_every)
        self.feed_updates = feed_updates
        self.x_hat = np.array(preliminary, dtype=float)
        self.corrected = self.x_hat.copy()
        self.errors = np.empty(len(self.x_hat))
        self.params: Ar1Params | None = None
        self.t = 0

    def _refit(self):
        hist = self.errors[max(0, self.t + 1 - self.window):self.t + 1]
        if hist.size < MIN_FIT_SAMPLES:
            return
        try:
            self.params = fit_ar1(hist)
        except DegenerateSeriesError:
            self.params = Ar1Params(mean=float(hist[-1]), reversion=1.0)
        # keep the fitted model stationary and non-oscillating
        r = min(max(self.params.reversion, 0.0), 1.0)
        if r != self.params.reversion:
            self.params = Ar1Params(self.params.mean, r, self.params.noise_var)

    def observe(self, x_t: float) -> float | None:
        """Record the measured SNR at the current second; return the forecast
        for ``t + rtt`` (``None`` past the end of the pass)."""
        t = self.t
        e = x_t - self.x_hat[t]
        self.errors[t] = e
        if t % self.refit_every == 0:
            self._refit()
        out = None
        if self.params is not None:
            if self.feed_updates and t + 1 < len(self.x_hat):
                self.x_hat[t + 1] += ar1_forecast(e, self.params, 1)
            h = t + self.rtt
            if h < len(self.x_hat):
                self.corrected[h] = self.x_hat[h] + ar1_forecast(e, self.params, self.rtt)
                out = self.corrected[h]
        elif t + self.rtt < len(self.x_hat):
            out = self.corrected[t + self.rtt]
        self.t += 1
        return out


def predict_pass(actual, preliminary, rtt: int, window: int = 600, refit_every: int = 60,
                 feed_updates: bool = False) -> np.ndarray:
    """Run the real-time correction over a whole pass; returns ``X_hat_pred``.

    Cells before ``rtt`` cannot be corrected and keep the preliminary value.
    """
    actual = np.asarray(actual, dtype=float)
    if len(actual) != len(preliminary):
        raise ValueError("actual and preliminary series must be aligned")
    state = PredictionState(preliminary, rtt, window, refit_every, feed_updates)
    for x in actual:
        state.observe(float(x))
    return state.corrected


# --------------------------------------------------------------------------
# evaluation


def range_prediction_matrix(actual, predicted) -> tuple[np.ndarray, float]:
    """Joint actual x predicted range proportions (5x5, A..E) and accuracy %."""
    a = classify_range(np.asarray(actual, dtype=float))
    p = classify_range(np.asarray(predicted, dtype=float))
    if np.shape(a) != np.shape(p):
        raise ValueError("series must have equal length")
    if np.size(a) == 0:
        raise ValueError("empty series")
    counts = np.bincount(np.ravel(a) * 5 + np.ravel(p), minlength=25).reshape(5, 5)
    beta = counts / counts.sum()
    return beta, float(np.trace(beta) / beta.sum() * 100.0)


def pacf(series, max_lag: int) -> np.ndarray:
    """Partial autocorrelation up to ``max_lag`` via Durbin-Levinson on the
    biased sample autocovariance; ``pacf[0] == 1``."""
    x = np.asarray(series, dtype=float)
    if x.size <= max_lag + 10:
        raise ValueError("series too short for the requested lag")
    x = x - x.mean()
    n = x.size
    acov = np.array([np.dot(x[:n - k], x[k:]) / n for k in range(max_lag + 1)])
    if acov[0] <= 0:
        raise DegenerateSeriesError("constant series")
    rho = acov / acov[0]
    out = np.zeros(max_lag + 1)
    out[0] = 1.0
    phi = np.zeros(max_lag + 1)
    var = 1.0
    for k in range(1, max_lag + 1):
        a = (rho[k] - np.dot(phi[1:k], rho[k - 1:0:-1])) / var
        new = phi.copy()
        new[k] = a
        new[1:k] = phi[1:k] - a * phi[k - 1:0:-1]
        phi = new
        var *= 1.0 - a * a
        out[k] = a
    return out
