"""
Link-budget pipeline from 31.4 GHz zenith wet path delay to Ka-band bit-SNR.

Every stage is a pure function that accepts scalars or numpy arrays.  The
stages compose as::

    wet delay -> opacity -> sky temperature -> T_atm(31.4) -> T_atm(32)
              -> atmospheric attenuation -> operating noise temperature
              -> received power -> Eb/N0

Angles are in degrees at the interface.  Temperatures are kelvin.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

SPEED_OF_LIGHT = 3e8  # m/s
BOLTZMANN = 1.380622e-23  # W/(Hz K)
T_PHYSICAL = 275.0  # physical temperature of the atmosphere, K
T_CMB = 2.725  # cosmic microwave background, K

ATTENUATION_MODES = ("paper", "physical")


class ChannelDomainError(ValueError):
    """An input lies outside the domain of a link-budget stage."""


class AtmosphereSaturated(ChannelDomainError):
    """Atmospheric noise temperature reached the physical temperature (blackout)."""


@dataclass(frozen=True)
class LinkBudgetParams:
    """Static link parameters.

    Defaults are the MRO high-gain antenna to DSS-25 Ka-band link.
    ``t1``, ``t2`` and ``decay`` describe the antenna-microwave noise
    contribution ``t1 + t2 * exp(-decay * elevation_deg)``.

    ``attenuation_interpretation`` selects how the zenith atmospheric
    noise temperature becomes a loss in dB:

    * ``"paper"``: ``(T_p / (T_p - T_atm)) / sin(el)`` read directly as dB.
    * ``"physical"``: ``10 log10(T_p / (T_p - T_atm)) / sin(el)``.
    """

    transmit_power: float = 34.0  # W
    transmit_gain_dbi: float = 56.4
    receive_gain_dbi: float = 79.0
    modulation_index_deg: float = 21.09375
    channel_rate: float = 3e6  # symbols/s, equal to bits/s for BPSK
    carrier_freq: float = 32e9  # Hz
    distance: float = 18e10  # m
    t1: float = 14.0  # K
    t2: float = 10.0  # K
    decay: float = 0.1  # 1/degree
    cd: float = 0.5
    crc_enabled: bool = False
    attenuation_interpretation: str = "physical"
    opacity_offset: float = 0.035  # nepers
    opacity_slope: float = 0.004  # nepers/cm

    def __post_init__(self):
        if self.transmit_power <= 0:
            raise ChannelDomainError("transmit_power must be positive")
        if self.channel_rate <= 0:
            raise ChannelDomainError("channel_rate must be positive")
        if self.carrier_freq <= 0:
            raise ChannelDomainError("carrier_freq must be positive")
        if self.distance <= 0:
            raise ChannelDomainError("distance must be positive")
        if not 0 < self.modulation_index_deg < 90:
            raise ChannelDomainError("modulation index must lie in (0, 90) degrees")
        if not 0 <= self.cd <= 0.99:
            raise ChannelDomainError("cumulative distribution must lie in [0, 0.99]")
        if self.attenuation_interpretation not in ATTENUATION_MODES:
            raise ChannelDomainError(
                f"attenuation_interpretation must be one of {ATTENUATION_MODES}"
            )
        if self.opacity_slope < 0 or self.opacity_offset < 0:
            raise ChannelDomainError("opacity coefficients must be non-negative")

    @property
    def mean_radiating_temp(self) -> float:
        """Atmosphere mean effective radiating temperature T_M."""
        return 255.0 + 25.0 * self.cd

    def replace(self, **changes) -> "LinkBudgetParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class AtmosphereState:
    """Intermediate values of the pipeline for one sample (or aligned arrays)."""

    wet_delay: float | np.ndarray
    opacity: float | np.ndarray
    sky_temp: float | np.ndarray
    atm_temp_31: float | np.ndarray
    atm_temp_32: float | np.ndarray
    attenuation_db: float | np.ndarray
    operating_temp: float | np.ndarray


def _db_to_linear(db):
    return np.power(10.0, np.divide(db, 10.0))


def _scalar_or_array(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def opacity_from_wet_delay(wet_delay, offset: float = 0.035, slope: float = 0.004):
    """Water vapour opacity (nepers) from zenith wet path delay (cm).

    Affine stand-in for a measured opacity-vs-delay curve.
    """
    wet_delay = np.asarray(wet_delay, dtype=float)
    if np.any(wet_delay < 0) or np.any(np.isnan(wet_delay)):
        raise ChannelDomainError("wet delay must be non-negative")
    return _scalar_or_array(offset + slope * wet_delay)


def sky_temp_from_opacity(opacity):
    """Zenith sky brightness temperature at 31.4 GHz."""
    opacity = np.asarray(opacity, dtype=float)
    if np.any(opacity < 0) or np.any(np.isnan(opacity)):
        raise ChannelDomainError("opacity must be non-negative")
    return _scalar_or_array(275.0 - 272.0 * np.exp(-opacity))


def atm_temp_31(sky_temp):
    """Zenith atmospheric noise temperature at 31.4 GHz from sky temperature."""
    sky_temp = np.asarray(sky_temp, dtype=float)
    if np.any(sky_temp < T_CMB) or np.any(np.isnan(sky_temp)):
        raise ChannelDomainError(f"sky temperature must be at least {T_CMB} K")
    return _scalar_or_array(T_PHYSICAL * (sky_temp - T_CMB) / (T_PHYSICAL - T_CMB))


def atm_temp_32(t_atm_31):
    """Translate the 31.4 GHz atmospheric noise temperature to 32 GHz."""
    t_atm_31 = np.asarray(t_atm_31, dtype=float)
    if np.any(t_atm_31 < 0) or np.any(np.isnan(t_atm_31)):
        raise ChannelDomainError("atmospheric temperature must be non-negative")
    return _scalar_or_array(t_atm_31 + 5.0 * (1.0 - np.exp(-0.008 * t_atm_31)))


def atm_attenuation(t_atm, elevation_deg, interpretation: str = "paper"):
    """Atmospheric attenuation in dB at the given elevation."""
    t_atm = np.asarray(t_atm, dtype=float)
    elevation_deg = np.asarray(elevation_deg, dtype=float)
    if np.any(elevation_deg <= 0) or np.any(elevation_deg > 90):
        raise ChannelDomainError("elevation must lie in (0, 90] degrees")
    if np.any(t_atm < 0):
        raise ChannelDomainError("atmospheric temperature must be non-negative")
    if np.any(t_atm >= T_PHYSICAL):
        raise AtmosphereSaturated("atmospheric temperature reached 275 K")
    ratio = T_PHYSICAL / (T_PHYSICAL - t_atm)
    if interpretation == "paper":
        zenith = ratio
    elif interpretation == "physical":
        zenith = 10.0 * np.log10(ratio)
    else:
        raise ChannelDomainError(f"unknown attenuation interpretation {interpretation!r}")
    return _scalar_or_array(zenith / np.sin(np.radians(elevation_deg)))


def operating_noise_temp(params: LinkBudgetParams, attenuation_db, elevation_deg):
    """System operating noise temperature T_op (K)."""
    attenuation_db = np.asarray(attenuation_db, dtype=float)
    if np.any(attenuation_db < 0):
        raise ChannelDomainError("attenuation must be non-negative dB")
    loss = _db_to_linear(attenuation_db)
    antenna = params.t1 + params.t2 * np.exp(-params.decay * np.asarray(elevation_deg, dtype=float))
    sky = params.mean_radiating_temp * (1.0 - 1.0 / loss) + T_CMB / loss
    return _scalar_or_array(antenna + sky)


def received_power(params: LinkBudgetParams, attenuation_db, distance=None):
    """Received power P_R (W) after free-space and atmospheric loss."""
    attenuation_db = np.asarray(attenuation_db, dtype=float)
    if np.any(attenuation_db < 0):
        raise ChannelDomainError("attenuation must be non-negative dB")
    d = params.distance if distance is None else np.asarray(distance, dtype=float)
    if np.any(np.asarray(d) <= 0):
        raise ChannelDomainError("distance must be positive")
    path = (SPEED_OF_LIGHT / (4.0 * np.pi * params.carrier_freq * d)) ** 2
    gains = _db_to_linear(params.transmit_gain_dbi) * _db_to_linear(params.receive_gain_dbi)
    return _scalar_or_array(params.transmit_power * gains * path / _db_to_linear(attenuation_db))


def bit_snr(params: LinkBudgetParams, power, operating_temp):
    """Eb/N0 in dB for BPSK data power ``P_R sin^2(theta_m)``."""
    power = np.asarray(power, dtype=float)
    operating_temp = np.asarray(operating_temp, dtype=float)
    if np.any(power <= 0):
        raise ChannelDomainError("received power must be positive")
    if np.any(operating_temp <= 0):
        raise ChannelDomainError("operating temperature must be positive")
    data_power = power * np.sin(np.radians(params.modulation_index_deg)) ** 2
    ebn0 = data_power / (BOLTZMANN * operating_temp * params.channel_rate)
    return _scalar_or_array(10.0 * np.log10(ebn0))


def atmosphere_from_sky_temp(params: LinkBudgetParams, sky_temp, elevation_deg, wet_delay=np.nan,
                             opacity=np.nan) -> AtmosphereState:
    t31 = atm_temp_31(sky_temp)
    t32 = atm_temp_32(t31)
    att = atm_attenuation(t32, elevation_deg, params.attenuation_interpretation)
    top = operating_noise_temp(params, att, elevation_deg)
    return AtmosphereState(
        wet_delay=wet_delay,
        opacity=opacity,
        sky_temp=sky_temp,
        atm_temp_31=t31,
        atm_temp_32=t32,
        attenuation_db=att,
        operating_temp=top,
    )


def atmosphere(params: LinkBudgetParams, wet_delay, elevation_deg) -> AtmosphereState:
    """Run the atmospheric stages for wet delay samples."""
    tau = opacity_from_wet_delay(wet_delay, params.opacity_offset, params.opacity_slope)
    sky = sky_temp_from_opacity(tau)
    return atmosphere_from_sky_temp(params, sky, elevation_deg, wet_delay=wet_delay, opacity=tau)


def snr_from_sky_temp(params: LinkBudgetParams, sky_temp, elevation_deg, distance=None):
    """Bit-SNR (dB) given zenith sky temperature; used by the a-priori predictor."""
    atm = atmosphere_from_sky_temp(params, sky_temp, elevation_deg)
    power = received_power(params, atm.attenuation_db, distance)
    return bit_snr(params, power, atm.operating_temp)


def snr_pipeline(params: LinkBudgetParams, wet_delay, elevation_deg, distance=None):
    """Per-sample bit-SNR (dB) for aligned wet-delay / elevation series.

    ``distance`` may be a scalar, an aligned array, or ``None`` to use
    ``params.distance``.
    """
    wet_delay = np.asarray(wet_delay, dtype=float)
    elevation_deg = np.asarray(elevation_deg, dtype=float)
    if wet_delay.shape != elevation_deg.shape:
        raise ChannelDomainError("wet delay and elevation series must be aligned")
    tau = opacity_from_wet_delay(wet_delay, params.opacity_offset, params.opacity_slope)
    return snr_from_sky_temp(params, sky_temp_from_opacity(tau), elevation_deg, distance)
