"""
Pass traces: CSV ingest, cubic B-spline resampling to 1 s, synthetic generation.

CSV format (UTF-8, header required)::

    time_s,wet_delay_cm,elevation_deg,azimuth_deg

Archive traces come at ~30 s spacing; everything downstream works on a
contiguous 1 s grid (:class:`PassTrace`).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import make_interp_spline

CSV_HEADER = ("time_s", "wet_delay_cm", "elevation_deg", "azimuth_deg")
MIN_SAMPLES = 4
DEFAULT_DISTANCE = 18e10  # m


class TraceError(ValueError):
    """Base class for trace problems."""


class TraceParseError(TraceError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class TraceValidationError(TraceError):
    pass


class InsufficientDataError(TraceError):
    pass


@dataclass(frozen=True)
class RawTrace:
    """Irregular archive samples; columns are aligned numpy arrays."""

    time: np.ndarray
    wet_delay: np.ndarray
    elevation: np.ndarray
    azimuth: np.ndarray
    nominal_period: float = 30.0

    def __post_init__(self):
        n = len(self.time)
        if not all(len(a) == n for a in (self.wet_delay, self.elevation, self.azimuth)):
            raise TraceValidationError("trace columns have different lengths")
        if n < MIN_SAMPLES:
            raise InsufficientDataError(f"need at least {MIN_SAMPLES} samples, got {n}")
        if np.any(np.diff(self.time) <= 0):
            raise TraceValidationError("sample times must be strictly increasing")
        if np.any(self.elevation <= 0) or np.any(self.elevation > 90):
            raise TraceValidationError("elevation must lie in (0, 90] degrees")
        if np.any(self.wet_delay < 0):
            raise TraceValidationError("wet delay must be non-negative")

    def __len__(self):
        return len(self.time)


@dataclass(frozen=True)
class PassTrace:
    """One pass on a contiguous 1 s grid.

    ``time`` holds absolute seconds; index ``t`` (0..T_e) is the position in
    the arrays.  ``distance`` is Earth-spacecraft range per second.
    """

    time: np.ndarray
    wet_delay: np.ndarray
    elevation: np.ndarray
    distance: np.ndarray
    azimuth: np.ndarray | None = None
    period: float = 1.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        n = len(self.time)
        for name in ("wet_delay", "elevation", "distance"):
            if len(getattr(self, name)) != n:
                raise TraceValidationError(f"{name} is not aligned with time")
        if n > 1 and not np.allclose(np.diff(self.time), self.period, rtol=0, atol=1e-9 * self.period):
            raise TraceValidationError(f"pass trace must sit on a contiguous {self.period} s grid")

    @property
    def duration(self) -> int:
        """Pass duration T_e in seconds (the grid spans 0..T_e)."""
        return int(round(max(len(self.time) - 1, 0) * self.period))

    def __len__(self):
        return len(self.time)


# --------------------------------------------------------------------------
# CSV


def parse_trace(data: bytes | str, nominal_period: float = 30.0) -> RawTrace:
    """Parse the archive CSV format into a validated :class:`RawTrace`."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise TraceParseError(f"not UTF-8: {exc}") from None
    reader = csv.reader(io.StringIO(data))
    try:
        header = next(reader)
    except StopIteration:
        raise InsufficientDataError("empty trace") from None
    if tuple(h.strip() for h in header) != CSV_HEADER:
        raise TraceParseError(f"expected header {','.join(CSV_HEADER)}", line=1)
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(CSV_HEADER):
            raise TraceParseError(f"expected {len(CSV_HEADER)} fields, got {len(row)}", line=lineno)
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise TraceParseError(f"non-numeric field in {row!r}", line=lineno) from None
        if not all(math.isfinite(v) for v in vals):
            raise TraceParseError("non-finite value", line=lineno)
        rows.append(vals)
    if len(rows) < MIN_SAMPLES:
        raise InsufficientDataError(f"need at least {MIN_SAMPLES} samples, got {len(rows)}")
    arr = np.asarray(rows, dtype=float)
    return RawTrace(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], nominal_period=nominal_period)


def format_trace_csv(trace: PassTrace | RawTrace) -> str:
    """Serialise a trace in the archive CSV format (``repr`` floats round-trip)."""
    az = trace.azimuth if trace.azimuth is not None else np.zeros(len(trace.time))
    out = io.StringIO()
    out.write(",".join(CSV_HEADER) + "\n")
    for row in zip(trace.time, trace.wet_delay, trace.elevation, az):
        out.write(",".join(repr(float(v)) for v in row) + "\n")
    return out.getvalue()


# --------------------------------------------------------------------------
# resampling

SPLINE_BOUNDARIES = ("not-a-knot", "natural", "clamped")


def bspline_resample(raw: RawTrace, period: float = 1.0, distance: float = DEFAULT_DISTANCE,
                     bc_type: str = "not-a-knot") -> PassTrace:
    """Cubic B-spline interpolation of every channel onto a regular grid.

    The grid starts at the first sample time and covers ``[t_first, t_last]``.
    ``not-a-knot`` end conditions keep the interpolant exact on cubic
    polynomials; ``natural`` is available for comparison.

    Resampled elevation is clipped into (0, 90] and wet delay to >= 0 so
    that spline overshoot cannot leave the channel-model domain.
    """
    if not period > 0:
        raise ValueError("period must be positive")
    if bc_type not in SPLINE_BOUNDARIES:
        raise ValueError(f"bc_type must be one of {SPLINE_BOUNDARIES}")
    t0, t1 = float(raw.time[0]), float(raw.time[-1])
    n = int(math.floor((t1 - t0) / period + 1e-9)) + 1
    grid = t0 + period * np.arange(n)
    bc = None if bc_type == "not-a-knot" else bc_type

    def fit(y):
        return make_interp_spline(raw.time, y, k=3, bc_type=bc)(grid)

    wet = np.maximum(fit(raw.wet_delay), 0.0)
    elev = np.clip(fit(raw.elevation), 1e-6, 90.0)
    az = fit(raw.azimuth)
    return PassTrace(grid, wet, elev, np.full(n, float(distance)), az, period=float(period))


# --------------------------------------------------------------------------
# synthetic traces


@dataclass(frozen=True)
class SynthProfile:
    """Parameters of the synthetic pass generator.

    Wet delay is an Ornstein-Uhlenbeck process sampled exactly at 1 s::

        dX = reversion * (mu(t) - X) dt + volatility dW

    where ``mu(t)`` is ``wet_mean`` plus a per-pass linear drift (slope drawn
    from N(0, ``wet_drift``) cm/h, centred on mid-pass) plus ``storm_extra``
    during a storm.  A pass contains one storm with probability
    ``storm_probability``; its length is uniform in ``storm_duration`` (capped at the pass).  Elevation is a sinusoidal
    half-arc from ``min_elevation`` up to ``peak_elevation`` and back.
    """

    duration: int = 21600  # s
    peak_elevation: float = 60.0  # deg
    min_elevation: float = 10.0  # deg
    wet_mean: float = 10.0  # cm
    wet_reversion: float = 1.0 / 1800.0  # 1/s
    wet_volatility: float = 0.003  # cm / sqrt(s)
    wet_drift: float = 2.5  # cm/h, standard deviation of the per-pass trend
    storm_probability: float = 0.1
    storm_extra: float = 25.0  # cm
    storm_duration: tuple[float, float] = (600.0, 1800.0)  # s
    distance: float = DEFAULT_DISTANCE  # m

    def __post_init__(self):
        if not isinstance(self.duration, (int, np.integer)) or self.duration < 600:
            raise ValueError("duration must be an integer number of seconds >= 600")
        if not 0 < self.peak_elevation <= 90:
            raise ValueError("peak_elevation must lie in (0, 90]")
        if not 0 < self.min_elevation <= 90:
            raise ValueError("min_elevation must lie in (0, 90]")
        if min(self.wet_mean, self.wet_volatility, self.wet_drift, self.storm_extra) < 0:
            raise ValueError("wet-delay parameters must be non-negative")
        if not self.wet_reversion > 0:
            raise ValueError("wet_reversion must be positive")
        if not 0 <= self.storm_probability <= 1:
            raise ValueError("storm_probability must lie in [0, 1]")
        lo, hi = self.storm_duration
        if not 0 < lo <= hi:
            raise ValueError("storm_duration must satisfy 0 < lo <= hi")
        if self.distance <= 0:
            raise ValueError("distance must be positive")


def elevation_arc(duration: int, peak: float, low: float = 10.0) -> np.ndarray:
    """Rise-peak-set elevation profile on 0..duration (inclusive)."""
    low = min(low, peak)
    t = np.arange(duration + 1, dtype=float)
    return low + (peak - low) * np.sin(np.pi * t / duration)


def synth_trace(seed: int, profile: SynthProfile = SynthProfile()) -> PassTrace:
    """Generate a reproducible synthetic pass."""
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    n = profile.duration + 1

    t = np.arange(n, dtype=float)
    slope = rng.standard_normal() * profile.wet_drift / 3600.0
    mu = profile.wet_mean + slope * (t - profile.duration / 2.0)
    storm = None
    if rng.random() < profile.storm_probability:
        length = min(int(round(rng.uniform(*profile.storm_duration))), n)
        start = int(rng.integers(0, max(n - length, 1)))
        mu[start:start + length] += profile.storm_extra
        storm = (start, start + length)

    decay = math.exp(-profile.wet_reversion)
    step_sd = profile.wet_volatility * math.sqrt((1.0 - decay ** 2) / (2.0 * profile.wet_reversion))
    stat_sd = profile.wet_volatility / math.sqrt(2.0 * profile.wet_reversion)
    noise = rng.standard_normal(n)
    wet = np.empty(n)
    x = mu[0] + stat_sd * noise[0]
    for i in range(n):
        if i:
            x = mu[i] + (x - mu[i]) * decay + step_sd * noise[i]
        wet[i] = x
    wet = np.maximum(wet, 0.0)

    elev = elevation_arc(profile.duration, profile.peak_elevation, profile.min_elevation)
    az = 90.0 + 180.0 * np.arange(n) / profile.duration
    return PassTrace(
        time=t,
        wet_delay=wet,
        elevation=elev,
        distance=np.full(n, profile.distance),
        azimuth=az,
        meta={"seed": int(seed), "storm": storm},
    )
