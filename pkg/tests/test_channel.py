import math

import numpy as np
import pytest

from dcsm.channel import (
    AtmosphereSaturated,
    ChannelDomainError,
    LinkBudgetParams,
    atm_attenuation,
    atm_temp_31,
    atm_temp_32,
    atmosphere,
    bit_snr,
    opacity_from_wet_delay,
    operating_noise_temp,
    received_power,
    sky_temp_from_opacity,
    snr_pipeline,
)

PARAMS = LinkBudgetParams()


# ---------------------------------------------------------------- stages


def test_opacity_zero_delay_is_dry_baseline():
    assert opacity_from_wet_delay(0.0) == pytest.approx(0.035)


def test_opacity_affine():
    assert opacity_from_wet_delay(10.0) == pytest.approx(0.075)


def test_opacity_rejects_negative_delay():
    with pytest.raises(ChannelDomainError):
        opacity_from_wet_delay(-1.0)


def test_sky_temp_limits_and_value():
    assert sky_temp_from_opacity(0.0) == pytest.approx(3.0)
    assert sky_temp_from_opacity(1e3) == pytest.approx(275.0)
    assert sky_temp_from_opacity(0.05) == pytest.approx(275 - 272 * math.exp(-0.05))
    assert sky_temp_from_opacity(0.05) == pytest.approx(16.266, abs=5e-4)


def test_sky_temp_rejects_negative_opacity():
    with pytest.raises(ChannelDomainError):
        sky_temp_from_opacity(-0.1)


def test_atm_temp_31_values():
    assert atm_temp_31(2.725) == pytest.approx(0.0, abs=1e-12)
    assert atm_temp_31(275.0) == pytest.approx(275.0)
    assert atm_temp_31(16.266) == pytest.approx(13.676, abs=1e-3)  # value printed truncated to 3 d.p.


def test_atm_temp_31_below_cmb_is_error():
    with pytest.raises(ChannelDomainError):
        atm_temp_31(2.0)


def test_atm_temp_32_values():
    assert atm_temp_32(0.0) == 0.0
    assert atm_temp_32(13.676) == pytest.approx(14.194, abs=5e-4)
    assert atm_temp_32(1e5) - 1e5 == pytest.approx(5.0)


def test_atm_attenuation_paper_examples():
    assert atm_attenuation(0.0, 90.0, "paper") == pytest.approx(1.0)
    assert atm_attenuation(137.5, 90.0, "paper") == pytest.approx(2.0)
    assert atm_attenuation(0.0, 30.0, "paper") == pytest.approx(2.0)


def test_atm_attenuation_physical_is_db_of_ratio():
    assert atm_attenuation(0.0, 90.0, "physical") == pytest.approx(0.0)
    assert atm_attenuation(137.5, 90.0, "physical") == pytest.approx(10 * math.log10(2.0))


def test_atm_attenuation_errors():
    with pytest.raises(AtmosphereSaturated):
        atm_attenuation(275.0, 45.0)
    with pytest.raises(ChannelDomainError):
        atm_attenuation(10.0, 0.0)
    with pytest.raises(ChannelDomainError):
        atm_attenuation(-1.0, 45.0)


@pytest.mark.parametrize("mode", ["paper", "physical"])
def test_attenuation_increases_as_elevation_drops(mode):
    el = np.linspace(90, 5, 50)
    att = atm_attenuation(20.0, el, mode)
    assert np.all(np.diff(att) > 0)


def test_operating_temp_clear_sky():
    p = LinkBudgetParams(t1=14.0, t2=0.0)
    assert operating_noise_temp(p, 0.0, 30.0) == pytest.approx(16.725)


def test_operating_temp_term_by_term():
    p = LinkBudgetParams(t1=14.0, t2=10.0, decay=0.1, cd=0.5)
    loss = 10 ** 0.1
    expected = 14 + 10 * math.exp(-3) + 267.5 * (1 - 1 / loss) + 2.725 / loss
    assert operating_noise_temp(p, 1.0, 30.0) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(71.6796, abs=1e-4)


def test_received_power_table_defaults():
    assert received_power(PARAMS, 0.0) == pytest.approx(2.025e-14, rel=1e-3)


def test_bit_snr_example():
    snr = bit_snr(PARAMS, 2.025e-14, 40.0)
    assert 10 ** (snr / 10) == pytest.approx(1.583, abs=1e-3)
    assert snr == pytest.approx(1.996, abs=1e-3)


def test_bit_snr_full_data_power_at_90_degrees():
    p = LinkBudgetParams(modulation_index_deg=89.999999)
    lin = 10 ** (bit_snr(p, 1e-14, 30.0) / 10)
    assert lin == pytest.approx(1e-14 / (1.380622e-23 * 30.0 * 3e6), rel=1e-9)


def test_bit_snr_affine_in_power():
    base = bit_snr(PARAMS, 1e-14, 40.0)
    assert bit_snr(PARAMS, 1e-14 * 10 ** 0.37, 40.0) - base == pytest.approx(3.7, abs=1e-12)


def test_params_validation():
    with pytest.raises(ChannelDomainError):
        LinkBudgetParams(transmit_power=0)
    with pytest.raises(ChannelDomainError):
        LinkBudgetParams(attenuation_interpretation="linear")
    with pytest.raises(ChannelDomainError):
        LinkBudgetParams(cd=1.0)


# ---------------------------------------------------------------- pipeline


def test_pipeline_constant_in_constant_out():
    out = snr_pipeline(PARAMS, np.full(20, 8.0), np.full(20, 40.0))
    assert out.shape == (20,)
    assert np.all(out == out[0])


def test_pipeline_equals_manual_composition():
    rng = np.random.default_rng(3)
    wet = rng.uniform(0, 30, 200)
    el = rng.uniform(5, 90, 200)
    out = snr_pipeline(PARAMS, wet, el)
    for w, e, got in zip(wet, el, out):
        tau = opacity_from_wet_delay(w)
        t32 = atm_temp_32(atm_temp_31(sky_temp_from_opacity(tau)))
        att = atm_attenuation(t32, e, PARAMS.attenuation_interpretation)
        top = operating_noise_temp(PARAMS, att, e)
        assert got == pytest.approx(bit_snr(PARAMS, received_power(PARAMS, att), top), rel=1e-13)


def test_pipeline_shape_mismatch():
    with pytest.raises(ChannelDomainError):
        snr_pipeline(PARAMS, np.zeros(3), np.full(4, 30.0))


def test_stage_invariants():
    wet = np.linspace(0, 200, 500)
    atm = atmosphere(PARAMS, wet, np.full(500, 45.0))
    assert np.all((atm.sky_temp >= 3.0) & (atm.sky_temp < 275.0))
    excess = atm.atm_temp_32 - atm.atm_temp_31
    assert np.all((excess >= 0) & (excess < 5))


def test_snr_decreases_with_wet_delay():
    out = snr_pipeline(PARAMS, np.linspace(0, 40, 100), np.full(100, 45.0))
    assert np.all(np.diff(out) < 0)
