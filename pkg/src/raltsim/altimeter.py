"""FMCW altimeter signal chain in dechirped (post-mixer) baseband form.

One sweep of complex baseband samples is synthesised per trial: the terrain
echo appears as a tone at the beat frequency, thermal noise (plus any blocking
induced rise) is white, and in-band interference arrives pre-attenuated from
:mod:`raltsim.interference`. The estimator is a Hann-windowed FFT with a
log-parabolic peak refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .constants import FOOT, SPEED_OF_LIGHT, db_to_linear, linear_to_db
from .errors import ConfigurationError, ContractError, DomainError
from .spectrum import RALT_BAND, FilterSpec, FrequencyBand

VALID = "valid"
NO_COMPUTED_DATA = "no_computed_data"

# Path length floor for the echo spreading loss; keeps h = 0 finite.
MIN_ECHO_PATH_M = 1.0


@dataclass(frozen=True)
class ChirpConfig:
    center_frequency: float = 4.3e9
    sweep_bandwidth: float = 150e6
    sweep_period: float = 1e-3
    tx_power_dbm: float = 20.0
    sample_rate: float = 2e6
    fft_length: int = 4096
    altitude_ceiling_m: float = 2500 * FOOT
    operating_band: FrequencyBand = RALT_BAND

    def __post_init__(self):
        if self.sweep_bandwidth <= 0 or self.sweep_period <= 0 or self.sample_rate <= 0:
            raise ConfigurationError("sweep_bandwidth, sweep_period and sample_rate must be positive")
        if not self.operating_band.contains_band(self.swept_band):
            raise ConfigurationError(
                f"swept band [{self.swept_band.low:.6g}, {self.swept_band.high:.6g}] Hz leaves the"
                f" operating band [{self.operating_band.low:.6g}, {self.operating_band.high:.6g}] Hz"
            )
        if self.altitude_ceiling_m <= 0:
            raise ConfigurationError("altitude_ceiling_m must be positive")
        check_nyquist(self)
        if int(self.fft_length) != self.fft_length or self.fft_length < self.sweep_samples:
            raise ConfigurationError(
                f"fft_length {self.fft_length} must be an integer >= samples per sweep {self.sweep_samples}"
            )

    @property
    def swept_band(self) -> FrequencyBand:
        half = 0.5 * self.sweep_bandwidth
        return FrequencyBand(self.center_frequency - half, self.center_frequency + half)

    @property
    def sweep_samples(self) -> int:
        return int(round(self.sweep_period * self.sample_rate))

    @property
    def bin_width(self) -> float:
        return self.sample_rate / self.fft_length

    @property
    def beat_slope(self) -> float:
        """Beat frequency per metre of altitude (Hz/m)."""
        return 2.0 * self.sweep_bandwidth / (SPEED_OF_LIGHT * self.sweep_period)


def check_nyquist(chirp: ChirpConfig) -> None:
    f_max = beat_frequency_oracle(chirp.altitude_ceiling_m, chirp)
    if not chirp.sample_rate > 2.0 * f_max:
        raise ConfigurationError(
            f"sample rate {chirp.sample_rate:.6g} Hz must exceed twice the ceiling beat frequency"
            f" {f_max:.6g} Hz"
        )


@dataclass(frozen=True)
class EchoChannel:
    """Single specular ground return. ``reflectivity_loss_db = inf`` removes the echo."""

    altitude_m: float
    reflectivity_loss_db: float = 12.0

    def __post_init__(self):
        if not self.altitude_m >= 0.0:
            raise ConfigurationError(f"altitude must be >= 0 m, got {self.altitude_m}")
        if not self.reflectivity_loss_db >= 0.0:
            raise ConfigurationError("reflectivity_loss_db must be >= 0")

    def two_way_spreading_loss(self, frequency: float) -> float:
        # mirror-image geometry: free-space loss over the 2h round trip
        path = max(2.0 * self.altitude_m, MIN_ECHO_PATH_M)
        return 20.0 * math.log10(4.0 * math.pi * path * frequency / SPEED_OF_LIGHT)


@dataclass(frozen=True)
class ReceiverConfig:
    noise_figure_db: float = 5.0
    thermal_noise_density_dbm_hz: float = -174.0
    blocking_threshold_dbm: float = -30.0
    desensitization_slope: float = 1.0
    detection_snr_threshold_db: float = 13.0
    gain_compensation_db: float = 0.0

    def __post_init__(self):
        if not self.desensitization_slope >= 0.0:
            raise ConfigurationError("desensitization_slope must be >= 0")
        if not self.detection_snr_threshold_db > 0.0:
            raise ConfigurationError("detection_snr_threshold_db must be > 0")


@dataclass(frozen=True)
class BasebandInterference:
    """Everything the interference model hands to the synthesizer.

    ``tones`` are coherent baseband tones as ``(frequency_hz, power_dbm)``;
    ``spread_power_dbm`` is interference energy spread uniformly across the
    analysis bandwidth; ``blocking_power_dbm`` is the post-filter out-of-band
    power seen by the front end.
    """

    tones: tuple[tuple[float, float], ...] = ()
    spread_power_dbm: float = -math.inf
    blocking_power_dbm: float = -math.inf

    @property
    def is_empty(self) -> bool:
        return not self.tones and self.spread_power_dbm == -math.inf and self.blocking_power_dbm == -math.inf


NO_INTERFERENCE = BasebandInterference()


@dataclass(frozen=True)
class AltimeterOutput:
    altitude_estimate_m: Optional[float]
    snr_db: float
    validity: str
    peak_bin: int
    interpolated_offset: float
    peak_frequency_hz: float = field(default=0.0)

    def __post_init__(self):
        if (self.validity == VALID) != (self.altitude_estimate_m is not None):
            raise ContractError("altitude estimate must be present exactly when the output is valid")

    @property
    def valid(self) -> bool:
        return self.validity == VALID

    @property
    def altitude_estimate_ft(self) -> Optional[float]:
        if self.altitude_estimate_m is None:
            return None
        return self.altitude_estimate_m / FOOT


def beat_frequency_oracle(h: float, chirp: ChirpConfig) -> float:
    """Closed-form beat frequency 2*B*h / (c*T) for altitude ``h`` metres."""
    if h < 0:
        raise DomainError(f"altitude must be >= 0, got {h}")
    return 2.0 * chirp.sweep_bandwidth * h / (SPEED_OF_LIGHT * chirp.sweep_period)


def altitude_resolution(chirp: ChirpConfig) -> float:
    return SPEED_OF_LIGHT / (2.0 * chirp.sweep_bandwidth)


def trial_rng(seed: int, *coords: int) -> np.random.Generator:
    """Independent generator for one trial, keyed by ``(seed, *coords)``.

    Keyed derivation makes every trial reproducible no matter which order (or
    which worker) runs it.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, coords)])))


def echo_power_dbm(
    chirp: ChirpConfig, channel: EchoChannel, rx: ReceiverConfig, filt: Optional[FilterSpec] = None
) -> float:
    """Echo power entering the dechirp stage (after filter and software gain)."""
    if math.isinf(channel.reflectivity_loss_db):
        return -math.inf
    filter_loss = filt.insertion_loss if filt is not None else 0.0
    return (
        chirp.tx_power_dbm
        - channel.two_way_spreading_loss(chirp.center_frequency)
        - channel.reflectivity_loss_db
        - filter_loss
        + rx.gain_compensation_db
    )


def noise_floor_dbm(chirp: ChirpConfig, rx: ReceiverConfig, rise_db: float = 0.0) -> float:
    """Per-sample complex noise power over the full baseband bandwidth."""
    density = rx.thermal_noise_density_dbm_hz
    if density == -math.inf:
        return -math.inf
    return density + rx.noise_figure_db + rise_db + 10.0 * math.log10(chirp.sample_rate)


def synthesize_dechirped(
    chirp: ChirpConfig,
    channel: EchoChannel,
    rx: ReceiverConfig,
    injected: BasebandInterference = NO_INTERFERENCE,
    seed: int = 0,
    *,
    filt: Optional[FilterSpec] = None,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """One sweep of dechirped complex baseband, zero-padded to ``fft_length``.

    Sample amplitudes are in sqrt(mW) so ``|x|^2`` reads directly as power.
    Random draws happen in a fixed order (noise, echo phase, tone phases) so
    two scenarios differing only in their tones share the same noise.
    """
    from .interference import blocking_degradation

    check_nyquist(chirp)
    if rng is None:
        rng = trial_rng(seed)
    n = chirp.sweep_samples

    rise = blocking_degradation(injected.blocking_power_dbm, rx)
    noise_mw = db_to_linear(noise_floor_dbm(chirp, rx, rise))
    if injected.spread_power_dbm != -math.inf:
        noise_mw += db_to_linear(injected.spread_power_dbm)
    noise_std = math.sqrt(noise_mw / 2.0)
    noise = rng.standard_normal((2, n))

    amplitudes = []
    frequencies = []
    echo_dbm = echo_power_dbm(chirp, channel, rx, filt)
    echo_phase = rng.uniform(0.0, 2.0 * math.pi)
    phases = []
    if echo_dbm != -math.inf:
        amplitudes.append(math.sqrt(db_to_linear(echo_dbm)))
        frequencies.append(beat_frequency_oracle(channel.altitude_m, chirp))
        phases.append(echo_phase)
    for freq, power in injected.tones:
        phase = rng.uniform(0.0, 2.0 * math.pi)
        if power == -math.inf:
            continue
        amplitudes.append(math.sqrt(db_to_linear(power)))
        frequencies.append(freq)
        phases.append(phase)

    return _kernels.render_sweep(
        n,
        int(chirp.fft_length),
        float(chirp.sample_rate),
        np.asarray(amplitudes, dtype=np.float64),
        np.asarray(frequencies, dtype=np.float64),
        np.asarray(phases, dtype=np.float64),
        noise,
        noise_std,
    )


_WINDOWS: dict[tuple[int, int], np.ndarray] = {}


def _padded_window(n: int, length: int) -> np.ndarray:
    key = (n, length)
    w = _WINDOWS.get(key)
    if w is None:
        w = np.zeros(length)
        w[:n] = np.hanning(n)
        w.setflags(write=False)
        _WINDOWS[key] = w
    return w


def estimate_altitude(samples: np.ndarray, chirp: ChirpConfig, rx: ReceiverConfig) -> AltimeterOutput:
    """Spectral altitude estimate from one zero-padded sweep."""
    samples = np.asarray(samples)
    if samples.ndim != 1 or samples.shape[0] != chirp.fft_length:
        raise ContractError(f"expected {chirp.fft_length} samples, got shape {samples.shape}")
    spectrum = np.fft.fft(samples * _padded_window(chirp.sweep_samples, chirp.fft_length))
    spectrum = np.ascontiguousarray(spectrum, dtype=np.complex128)
    k, peak, offset, floor = _kernels.analyze_spectrum(spectrum, chirp.fft_length // 2)

    if floor > 0.0:
        snr = linear_to_db(peak / floor)
    else:
        snr = math.inf if peak > 0.0 else -math.inf
    f_peak = (k + offset) * chirp.bin_width
    if snr >= rx.detection_snr_threshold_db:
        altitude = max(0.0, f_peak / chirp.beat_slope)
        return AltimeterOutput(altitude, snr, VALID, int(k), float(offset), f_peak)
    return AltimeterOutput(None, snr, NO_COMPUTED_DATA, int(k), float(offset), f_peak)
