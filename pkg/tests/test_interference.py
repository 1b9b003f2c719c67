import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from raltsim.altimeter import NO_INTERFERENCE, ChirpConfig, EchoChannel, ReceiverConfig, synthesize_dechirped
from raltsim.constants import SPEED_OF_LIGHT, db_to_linear, linear_to_db
from raltsim.errors import ConfigurationError, DomainError
from raltsim.interference import (
    EU_EIRP_SCALE,
    FREE_SPACE,
    FUNDAMENTAL,
    SPURIOUS,
    FixedDistance,
    FlatNoisePSD,
    GroundBelow,
    InterfererSpec,
    PropagationModel,
    SpurTone,
    SpurTones,
    baseband_for_altitude,
    blocking_degradation,
    fspl,
    inband_injection,
    injection_components,
    received_power,
)
from raltsim.spectrum import DEFAULT_FILTER, RALT_BAND, US_5G_BAND, FilterSpec, FrequencyBand, filter_attenuation

CHIRP = ChirpConfig()
RX = ReceiverConfig()
CARRIER_38 = PropagationModel(carrier_for_loss=3.8e9)


def fundamental(eirp=60.0, distance=300.0, duty=1.0, band=US_5G_BAND, **kw):
    return InterfererSpec(band, FUNDAMENTAL, eirp, duty, FixedDistance(distance), **kw)


def spur_tone(freq, eirp, baseband=None, distance=300.0):
    return InterfererSpec(
        US_5G_BAND, SPURIOUS, geometry=FixedDistance(distance), spurious=SpurTones((SpurTone(freq, eirp, baseband),))
    )


def test_fspl_examples():
    hand = 20 * math.log10(4 * math.pi * 300 * 3.8e9 / 2.99792458e8)
    assert fspl(300, 3.8e9) == pytest.approx(hand, rel=1e-12)
    assert fspl(300, 3.8e9) == pytest.approx(93.6, abs=0.05)
    assert fspl(600, 3.8e9) - fspl(300, 3.8e9) == pytest.approx(20 * math.log10(2), abs=1e-12)
    assert fspl(SPEED_OF_LIGHT / (4 * math.pi), 1.0) == pytest.approx(0.0, abs=1e-12)
    for d, f in ((0, 1e9), (1, 0), (-1, 1e9)):
        with pytest.raises(DomainError):
            fspl(d, f)


def test_received_power_examples():
    p = received_power(fundamental(60.0), 100.0, CARRIER_38)
    assert p == pytest.approx(60 - fspl(300, 3.8e9), abs=1e-12)
    assert p == pytest.approx(-33.6, abs=0.05)
    half = received_power(fundamental(60.0, duty=0.5), 100.0, CARRIER_38)
    assert p - half == pytest.approx(-10 * math.log10(0.5), abs=1e-12)


def test_ground_below_geometry():
    spec = InterfererSpec(US_5G_BAND, FUNDAMENTAL, 60.0, geometry=GroundBelow())
    assert received_power(spec, 100.0) > received_power(spec, 200.0)
    with pytest.raises(DomainError):
        received_power(spec, 0.0)


def test_eu_scale():
    base = fundamental(62.0)
    eu = fundamental(62.0, eirp_scale=EU_EIRP_SCALE)
    assert eu.total_eirp_dbm - base.total_eirp_dbm == pytest.approx(10 * math.log10(1.5))
    assert eu.total_eirp_dbm - base.total_eirp_dbm == pytest.approx(1.76, abs=0.005)


def test_blocking_degradation_examples():
    t = RX.blocking_threshold_dbm
    assert blocking_degradation(t - 10, RX) == 0.0
    assert blocking_degradation(t, RX) == 0.0
    assert blocking_degradation(t + 6, RX) == pytest.approx(6.0)
    assert blocking_degradation(-math.inf, RX) == 0.0
    assert blocking_degradation(t + 6, ReceiverConfig(desensitization_slope=0.5)) == pytest.approx(3.0)


def test_class_separation_invariants():
    with pytest.raises(ConfigurationError):
        fundamental(band=FrequencyBand(4.1e9, 4.25e9))
    with pytest.raises(ConfigurationError):
        InterfererSpec(US_5G_BAND, SPURIOUS)
    with pytest.raises(ConfigurationError):
        spur_tone(6.0e9, 0.0)  # outside the receiver front-end window
    with pytest.raises(ConfigurationError):
        InterfererSpec(US_5G_BAND, FUNDAMENTAL, spurious=SpurTones((SpurTone(4.3e9, 0.0),)))
    with pytest.raises(ConfigurationError):
        fundamental(duty=0.0)
    with pytest.raises(ConfigurationError):
        InterfererSpec(US_5G_BAND, "harmonic")


def test_no_interferers_is_identity():
    bundle = inband_injection((), DEFAULT_FILTER, CHIRP, 100.0)
    assert bundle.is_empty and bundle == NO_INTERFERENCE
    clean = synthesize_dechirped(CHIRP, EchoChannel(100.0), RX, NO_INTERFERENCE, seed=8)
    again = synthesize_dechirped(CHIRP, EchoChannel(100.0), RX, bundle, seed=8)
    assert clean.tobytes() == again.tobytes()


def test_fundamental_at_39ghz_filter_difference():
    narrow = FrequencyBand(3.899e9, 3.901e9)
    intf = (fundamental(62.0, band=narrow),)
    off = inband_injection(intf, None, CHIRP, 100.0)
    on = inband_injection(intf, DEFAULT_FILTER, CHIRP, 100.0)
    assert off.blocking_power_dbm - on.blocking_power_dbm == pytest.approx(filter_attenuation(DEFAULT_FILTER, 3.9e9))
    assert off.blocking_power_dbm - on.blocking_power_dbm == pytest.approx(40.0)
    assert on.tones == () and on.spread_power_dbm == -math.inf


def test_spurious_tone_midband_differs_by_insertion_loss():
    intf = (spur_tone(4.3e9, 10.0),)
    off = inband_injection(intf, None, CHIRP, 100.0)
    on = inband_injection(intf, DEFAULT_FILTER, CHIRP, 100.0)
    assert off.spread_power_dbm - on.spread_power_dbm == pytest.approx(DEFAULT_FILTER.insertion_loss, abs=1e-9)
    assert on.blocking_power_dbm == -math.inf


def test_coherent_tone_lands_on_requested_baseband():
    bb = baseband_for_altitude(500.0, CHIRP)
    bundle = inband_injection((spur_tone(3.9e9, 10.0, bb),), DEFAULT_FILTER, CHIRP, 100.0)
    ((freq, power),) = bundle.tones
    assert freq == bb
    expected = 10.0 - fspl(300.0, US_5G_BAND.center) - 40.0
    assert power == pytest.approx(expected)
    with pytest.raises(ConfigurationError):
        inband_injection((spur_tone(3.9e9, 10.0, 5e6),), None, CHIRP, 100.0)


def test_filter_off_equals_unit_gain_filter():
    intfs = (
        spur_tone(4.3e9, 10.0),
        spur_tone(3.9e9, 5.0, 1e5),
        InterfererSpec(US_5G_BAND, SPURIOUS, spurious=FlatNoisePSD(-60.0, FrequencyBand(4.25e9, 4.35e9))),
        fundamental(62.0),
    )
    assert inband_injection(intfs, None, CHIRP, 50.0) == inband_injection(intfs, FilterSpec.unit_gain(), CHIRP, 50.0)


# ---- properties ----------------------------------------------------------

rf_in_window = st.floats(min_value=3.4e9, max_value=4.9e9)
eirps = st.floats(min_value=-40.0, max_value=80.0)


@st.composite
def interferer_sets(draw):
    out = []
    for _ in range(draw(st.integers(1, 4))):
        if draw(st.booleans()):
            out.append(fundamental(draw(eirps), draw(st.floats(10.0, 5000.0)), draw(st.floats(0.05, 1.0))))
        else:
            tones = tuple(SpurTone(draw(rf_in_window), draw(eirps)) for _ in range(draw(st.integers(1, 3))))
            out.append(InterfererSpec(US_5G_BAND, SPURIOUS, geometry=FixedDistance(draw(st.floats(10.0, 5000.0))), spurious=SpurTones(tones)))
    return tuple(out)


@settings(max_examples=80, deadline=None)
@given(interferer_sets(), st.sampled_from([None, DEFAULT_FILTER]), st.floats(1.0, 700.0))
def test_power_accounting(intfs, filt, alt):
    inband, blocking = injection_components(intfs, filt, alt, FREE_SPACE)
    bundle = inband_injection(intfs, filt, CHIRP, alt)
    expected = 0.0
    for intf in intfs:
        if intf.kind != SPURIOUS:
            continue
        for tone in intf.spurious.tones:
            att = filter_attenuation(filt, tone.frequency_hz) if filt else 0.0
            single = InterfererSpec(intf.emission_band, SPURIOUS, geometry=intf.geometry, spurious=SpurTones((tone,)))
            expected += db_to_linear(received_power(single, alt) - att)
    got = db_to_linear(bundle.spread_power_dbm)
    if expected == 0.0:
        assert got == 0.0
    else:
        assert abs(linear_to_db(got) - linear_to_db(expected)) <= 0.01
    # class separation is exact
    assert all(c.interferer for c in inband)
    n_fund = sum(i.kind == FUNDAMENTAL for i in intfs)
    assert len(blocking) == n_fund
    assert len(inband) == sum(len(i.spurious.tones) for i in intfs if i.kind == SPURIOUS)


@settings(max_examples=80, deadline=None)
@given(interferer_sets(), st.integers(0, 3), st.floats(0.0, 20.0), st.sampled_from([None, DEFAULT_FILTER]))
def test_monotone_in_eirp(intfs, which, bump, filt):
    import dataclasses

    which = which % len(intfs)
    target = intfs[which]
    if target.kind == FUNDAMENTAL:
        louder = dataclasses.replace(target, eirp_dbm=target.eirp_dbm + bump)
    else:
        tones = tuple(SpurTone(t.frequency_hz, t.eirp_dbm + bump) for t in target.spurious.tones)
        louder = dataclasses.replace(target, spurious=SpurTones(tones))
    more = intfs[:which] + (louder,) + intfs[which + 1 :]
    a_in, a_blk = injection_components(intfs, filt, 100.0)
    b_in, b_blk = injection_components(more, filt, 100.0)
    for x, y in zip(a_in, b_in):
        assert y.power_dbm >= x.power_dbm
    for x, y in zip(a_blk, b_blk):
        assert y.power_dbm >= x.power_dbm
    assert inband_injection(more, filt, CHIRP, 100.0).blocking_power_dbm >= inband_injection(intfs, filt, CHIRP, 100.0).blocking_power_dbm


def test_ralt_band_constant_is_victim_default():
    assert fundamental().victim_band == RALT_BAND
