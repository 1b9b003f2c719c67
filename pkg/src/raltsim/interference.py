"""5G emitters, free-space propagation, and their effect on the receiver.

Two interferer classes are kept strictly apart:

* ``fundamental`` emitters radiate in their own allocation, outside the
  altimeter band; after the filter their power only matters as front-end
  blocking (noise-floor rise).
* ``spurious`` emitters put energy inside the receiver's RF window; after the
  filter it reaches the dechirped baseband either spread as noise or, in
  coherent mode, as a fixed baseband tone (a would-be false altitude).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .altimeter import BasebandInterference, ChirpConfig, ReceiverConfig
from .constants import FOUR_PI, SPEED_OF_LIGHT, power_sum_dbm
from .errors import ConfigurationError, DomainError
from .spectrum import (
    RALT_BAND,
    RX_FRONT_END_BAND,
    FilterSpec,
    FrequencyBand,
    band_attenuation,
    band_overlap,
    filter_attenuation,
)

FUNDAMENTAL = "fundamental"
SPURIOUS = "spurious"
DEFAULT_5G_EIRP_DBM = 62.0
EU_EIRP_SCALE = 1.5


@dataclass(frozen=True)
class FixedDistance:
    distance_m: float

    def __post_init__(self):
        if not self.distance_m > 0:
            raise ConfigurationError(f"fixed distance must be > 0 m, got {self.distance_m}")

    def resolve(self, altitude_m: float) -> float:
        return self.distance_m


@dataclass(frozen=True)
class GroundBelow:
    """Emitter directly under the aircraft; range equals current altitude."""

    def resolve(self, altitude_m: float) -> float:
        if not altitude_m > 0:
            raise DomainError("ground_below geometry needs altitude > 0")
        return altitude_m


Geometry = Union[FixedDistance, GroundBelow]


@dataclass(frozen=True)
class SpurTone:
    """One spurious CW line. ``baseband_hz`` set means coherent mode."""

    frequency_hz: float
    eirp_dbm: float
    baseband_hz: Optional[float] = None


@dataclass(frozen=True)
class SpurTones:
    tones: tuple[SpurTone, ...]

    def components(self):
        for tone in self.tones:
            yield tone.eirp_dbm, None, tone


@dataclass(frozen=True)
class FlatNoisePSD:
    psd_dbm_hz: float
    band: FrequencyBand

    def components(self):
        yield self.psd_dbm_hz + 10.0 * math.log10(self.band.width), self.band, None


SpuriousShape = Union[SpurTones, FlatNoisePSD]


@dataclass(frozen=True)
class InterfererSpec:
    emission_band: FrequencyBand
    kind: str = FUNDAMENTAL
    eirp_dbm: float = DEFAULT_5G_EIRP_DBM
    duty_cycle: float = 1.0
    geometry: Geometry = FixedDistance(300.0)
    spurious: Optional[SpuriousShape] = None
    eirp_scale: float = 1.0
    name: str = ""
    victim_band: FrequencyBand = RALT_BAND
    front_end_band: FrequencyBand = RX_FRONT_END_BAND

    def __post_init__(self):
        if self.kind not in (FUNDAMENTAL, SPURIOUS):
            raise ConfigurationError(f"interferer class must be fundamental or spurious, got {self.kind!r}")
        if not (0.0 < self.duty_cycle <= 1.0):
            raise ConfigurationError(f"duty_cycle must lie in (0, 1], got {self.duty_cycle}")
        if not self.eirp_scale > 0.0:
            raise ConfigurationError("eirp_scale must be > 0")
        if self.kind == FUNDAMENTAL:
            if band_overlap(self.emission_band, self.victim_band) is not None:
                raise ConfigurationError(
                    f"fundamental interferer {self.name or self.emission_band} overlaps the altimeter band"
                )
            if self.spurious is not None:
                raise ConfigurationError("spurious_shape is only allowed on spurious interferers")
        else:
            if self.spurious is None:
                raise ConfigurationError("spurious interferer needs a spurious_shape")
            for _, band, tone in self.spurious.components():
                inside = (
                    self.front_end_band.contains(tone.frequency_hz)
                    if tone is not None
                    else self.front_end_band.contains_band(band)
                )
                if not inside:
                    where = f"{tone.frequency_hz:.6g} Hz" if tone is not None else f"[{band.low:.6g}, {band.high:.6g}] Hz"
                    raise ConfigurationError(
                        f"spurious component at {where} lies outside the receiver front-end window"
                    )
            if isinstance(self.spurious, SpurTones) and not self.spurious.tones:
                raise ConfigurationError("spurious tone list is empty")

    @property
    def scale_db(self) -> float:
        return 10.0 * math.log10(self.eirp_scale)

    @property
    def total_eirp_dbm(self) -> float:
        """Radiated power: the fundamental EIRP, or the sum of spurious components."""
        if self.kind == FUNDAMENTAL:
            return self.eirp_dbm + self.scale_db
        return power_sum_dbm(level for level, _, _ in self.spurious.components()) + self.scale_db


@dataclass(frozen=True)
class PropagationModel:
    model: str = "free_space"
    carrier_for_loss: Optional[float] = None  # None -> emission band centre

    def __post_init__(self):
        if self.model != "free_space":
            raise ConfigurationError(f"unsupported propagation model {self.model!r}")

    def carrier(self, intf: InterfererSpec) -> float:
        return self.carrier_for_loss if self.carrier_for_loss is not None else intf.emission_band.center


FREE_SPACE = PropagationModel()


def fspl(distance: float, f: float) -> float:
    """Free-space path loss 20*log10(4*pi*d*f/c) in dB."""
    if not (distance > 0 and f > 0):
        raise DomainError(f"fspl needs positive distance and frequency, got d={distance}, f={f}")
    return 20.0 * math.log10(FOUR_PI * distance * f / SPEED_OF_LIGHT)


def _path_gain_db(intf: InterfererSpec, altitude: float, prop: PropagationModel) -> float:
    distance = intf.geometry.resolve(altitude)
    return -fspl(distance, prop.carrier(intf)) + 10.0 * math.log10(intf.duty_cycle)


def received_power(intf: InterfererSpec, altitude: float, prop: PropagationModel = FREE_SPACE) -> float:
    """Average power (dBm) at the antenna, before any filtering."""
    return intf.total_eirp_dbm + _path_gain_db(intf, altitude, prop)


def blocking_degradation(out_of_band_power_after_filter: float, rx: ReceiverConfig) -> float:
    """Noise-floor rise (dB) from front-end blocking, piecewise linear in dB."""
    excess = out_of_band_power_after_filter - rx.blocking_threshold_dbm
    if excess <= 0.0 or rx.desensitization_slope == 0.0:
        return 0.0
    return rx.desensitization_slope * excess


@dataclass(frozen=True)
class InjectedComponent:
    """Audit record for one injected component (used by power-accounting checks)."""

    interferer: str
    received_dbm: float
    attenuation_db: float
    baseband_hz: Optional[float]

    @property
    def power_dbm(self) -> float:
        return self.received_dbm - self.attenuation_db


def injection_components(
    intfs: Sequence[InterfererSpec],
    filt: Optional[FilterSpec],
    altitude: float,
    prop: PropagationModel = FREE_SPACE,
) -> tuple[list[InjectedComponent], list[InjectedComponent]]:
    """Split interferers into (in-band components, blocking components)."""
    inband: list[InjectedComponent] = []
    blocking: list[InjectedComponent] = []
    for i, intf in enumerate(intfs):
        label = intf.name or f"interferer[{i}]"
        gain = _path_gain_db(intf, altitude, prop)
        if intf.kind == FUNDAMENTAL:
            atten = band_attenuation(filt, intf.emission_band)
            blocking.append(InjectedComponent(label, intf.total_eirp_dbm + gain, atten, None))
            continue
        for level, band, tone in intf.spurious.components():
            if tone is not None:
                atten = filter_attenuation(filt, tone.frequency_hz) if filt is not None else 0.0
                baseband = tone.baseband_hz
            else:
                atten = band_attenuation(filt, band)
                baseband = None
            inband.append(InjectedComponent(label, level + intf.scale_db + gain, atten, baseband))
    return inband, blocking


def inband_injection(
    intfs: Sequence[InterfererSpec],
    filt: Optional[FilterSpec],
    chirp: ChirpConfig,
    altitude: float,
    prop: PropagationModel = FREE_SPACE,
    seed: int = 0,
) -> BasebandInterference:
    """Convert interferers into the synthesizer's baseband bundle.

    Non-coherent spurious energy is spread uniformly over the analysis
    bandwidth; coherent tones land at their configured baseband frequency.
    The result is deterministic, ``seed`` is accepted for interface symmetry
    with the other per-trial stages.
    """
    inband, blocking = injection_components(intfs, filt, altitude, prop)
    tones = []
    spread = []
    nyquist = 0.5 * chirp.sample_rate
    for comp in inband:
        if comp.baseband_hz is not None:
            if not 0.0 <= comp.baseband_hz < nyquist:
                raise ConfigurationError(
                    f"coherent tone baseband frequency {comp.baseband_hz} Hz outside [0, {nyquist}) Hz"
                )
            tones.append((comp.baseband_hz, comp.power_dbm))
        else:
            spread.append(comp.power_dbm)
    return BasebandInterference(
        tones=tuple(tones),
        spread_power_dbm=power_sum_dbm(spread),
        blocking_power_dbm=power_sum_dbm(c.power_dbm for c in blocking),
    )


def baseband_for_altitude(altitude_m: float, chirp: ChirpConfig) -> float:
    """Baseband frequency a coherent tone needs to impersonate ``altitude_m``."""
    return chirp.beat_slope * altitude_m
