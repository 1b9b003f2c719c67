"""Frequency bands, the receiver bandpass mask, and attenuation queries.

The filter is modelled as a power mask in the frequency domain: every query
returns a non-negative attenuation in dB that is subtracted from the power of
whatever component sits at that frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, DomainError


@dataclass(frozen=True)
class FrequencyBand:
    low: float
    high: float

    def __post_init__(self):
        if not (self.low > 0.0 and self.high > 0.0):
            raise ConfigurationError(
                f"band edges must be strictly positive, got [{self.low}, {self.high}]"
            )
        if not self.low < self.high:
            raise ConfigurationError(f"band low edge {self.low} must be below high edge {self.high}")

    @property
    def center(self) -> float:
        return 0.5 * (self.low + self.high)

    @property
    def width(self) -> float:
        return self.high - self.low

    def contains(self, f: float) -> bool:
        return self.low <= f <= self.high

    def contains_band(self, other: "FrequencyBand") -> bool:
        return self.low <= other.low and other.high <= self.high

    def as_list(self) -> list[float]:
        return [self.low, self.high]


RALT_BAND = FrequencyBand(4.2e9, 4.4e9)
US_5G_BAND = FrequencyBand(3.7e9, 3.98e9)
EU_5G_BAND = FrequencyBand(3.4e9, 3.8e9)
FILTER_PASSBAND = FrequencyBand(4.0e9, 4.6e9)
# Window over which a legacy (unfiltered) front end still couples RF energy
# into the dechirped baseband; spurious content must fall inside it.
RX_FRONT_END_BAND = FrequencyBand(3.3e9, 5.0e9)


@dataclass(frozen=True)
class BandPlan:
    """Named registry of the bands every other module refers to."""

    ralt: FrequencyBand = RALT_BAND
    us_5g: FrequencyBand = US_5G_BAND
    eu_5g: FrequencyBand = EU_5G_BAND
    filter_passband: FrequencyBand = FILTER_PASSBAND
    rx_front_end: FrequencyBand = RX_FRONT_END_BAND

    def __getitem__(self, name: str) -> FrequencyBand:
        try:
            return getattr(self, name)
        except AttributeError:
            raise KeyError(name) from None

    def names(self) -> tuple[str, ...]:
        return ("ralt", "us_5g", "eu_5g", "filter_passband", "rx_front_end")


DEFAULT_BAND_PLAN = BandPlan()

TRANSITION_SHAPES = ("linear_db", "polynomial_db")


@dataclass(frozen=True)
class FilterSpec:
    """Parametric bandpass mask.

    ``passband_ripple`` is realised as ``ripple * sin^2(2*pi*u)`` with ``u`` the
    normalised position inside the passband, so the response equals the
    insertion loss at both passband edges and at mid-band and never exceeds
    ``insertion_loss + ripple``. ``polynomial_db`` transitions follow
    ``t ** transition_order`` where ``t`` runs from 0 at the passband edge to 1
    at the stopband edge.
    """

    passband: FrequencyBand = FILTER_PASSBAND
    lower_stopband_edge: float = 3.98e9
    upper_stopband_edge: float = 4.8e9
    stopband_attenuation: float = 40.0
    passband_ripple: float = 0.5
    insertion_loss: float = 1.5
    transition_shape: str = "linear_db"
    transition_order: int = 1

    def __post_init__(self):
        if not (self.lower_stopband_edge < self.passband.low < self.passband.high < self.upper_stopband_edge):
            raise ConfigurationError(
                "filter edges must satisfy lower_stopband_edge < passband.low < passband.high"
                " < upper_stopband_edge"
            )
        for name in ("stopband_attenuation", "passband_ripple", "insertion_loss"):
            value = getattr(self, name)
            if not (value >= 0.0 and math.isfinite(value)):
                raise ConfigurationError(f"{name} must be a finite value >= 0, got {value}")
        if self.transition_shape not in TRANSITION_SHAPES:
            raise ConfigurationError(
                f"transition_shape must be one of {TRANSITION_SHAPES}, got {self.transition_shape!r}"
            )
        if int(self.transition_order) != self.transition_order or self.transition_order < 1:
            raise ConfigurationError(f"transition_order must be an integer >= 1, got {self.transition_order}")

    @classmethod
    def unit_gain(cls) -> "FilterSpec":
        """A mask that attenuates nothing anywhere (0 dB everywhere)."""
        return cls(stopband_attenuation=0.0, passband_ripple=0.0, insertion_loss=0.0)

    def _transition(self, t: float) -> float:
        if self.transition_shape == "polynomial_db":
            t = t ** self.transition_order
        return self.insertion_loss + (self.stopband_attenuation - self.insertion_loss) * t


DEFAULT_FILTER = FilterSpec()


def filter_attenuation(filt: FilterSpec, f: float) -> float:
    """Attenuation in dB (positive, to be subtracted) of ``filt`` at ``f`` Hz."""
    if not f > 0.0:
        raise DomainError(f"frequency must be positive, got {f}")
    pb = filt.passband
    if f <= filt.lower_stopband_edge or f >= filt.upper_stopband_edge:
        return filt.stopband_attenuation
    if f < pb.low:
        t = (pb.low - f) / (pb.low - filt.lower_stopband_edge)
        return filt._transition(t)
    if f > pb.high:
        t = (f - pb.high) / (filt.upper_stopband_edge - pb.high)
        return filt._transition(t)
    u = (f - pb.low) / pb.width
    return filt.insertion_loss + filt.passband_ripple * math.sin(2.0 * math.pi * u) ** 2


def band_attenuation(filt: Optional[FilterSpec], band: FrequencyBand, points: int = 513) -> float:
    """Attenuation of a flat-PSD signal occupying ``band``.

    Averages the linear power gain over an evenly spaced grid, which is what a
    filter does to noise-like energy spread uniformly across the band.
    """
    if filt is None:
        return 0.0
    grid = np.linspace(band.low, band.high, points)
    gains = np.array([10.0 ** (-filter_attenuation(filt, f) / 10.0) for f in grid])
    return -10.0 * math.log10(float(gains.mean()))


def guard_band(victim: FrequencyBand, interferer: FrequencyBand) -> float:
    """Signed frequency margin between two bands (Hz); negative when they overlap."""
    return max(victim.low - interferer.high, interferer.low - victim.high)


def band_overlap(a: FrequencyBand, b: FrequencyBand) -> Optional[FrequencyBand]:
    """Intersection of two bands, or ``None`` when they share no interior."""
    low = max(a.low, b.low)
    high = min(a.high, b.high)
    if low >= high:
        return None
    return FrequencyBand(low, high)
