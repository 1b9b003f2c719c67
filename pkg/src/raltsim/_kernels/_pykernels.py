"""Reference numpy implementation of the per-trial hot loop.

Kept semantically identical to ``_ckernels.pyx``; the compiled module is a
fused single-pass version of the same arithmetic.
"""

import math

import numpy as np

LN2 = math.log(2.0)


def render_sweep(n, fft_length, sample_rate, amplitudes, frequencies, phases, noise, noise_std):
    """One zero-padded sweep: scaled complex noise plus a sum of complex tones.

    ``noise`` is a float64 array of shape (2, n) holding the real and imaginary
    standard-normal draws.
    """
    out = np.zeros(fft_length, dtype=np.complex128)
    idx = np.arange(n, dtype=np.float64)
    sweep = noise_std * noise[0] + 1j * (noise_std * noise[1])
    for amp, freq, phase in zip(amplitudes, frequencies, phases):
        omega = 2.0 * math.pi * freq / sample_rate
        theta = omega * idx + phase
        sweep = sweep + amp * (np.cos(theta) + 1j * np.sin(theta))
    out[:n] = sweep
    return out


def analyze_spectrum(spectrum, search_stop):
    """Peak pick, log-parabolic refinement and median noise floor.

    Returns ``(peak_bin, peak_power, offset, floor_power)``. The peak is the
    first maximum in ``[0, search_stop)`` so equal peaks resolve to the lower
    frequency. Neighbours wrap circularly (bin -1 is the top negative bin).
    The floor is the median bin power divided by ln 2, which is the mean of an
    exponentially distributed (complex Gaussian) power.
    """
    power = spectrum.real * spectrum.real + spectrum.imag * spectrum.imag
    n = power.shape[0]
    k = int(np.argmax(power[:search_stop]))
    peak = float(power[k])
    floor = float(np.median(power)) / LN2
    offset = _parabolic_offset(float(power[(k - 1) % n]), peak, float(power[(k + 1) % n]))
    return k, peak, offset, floor


def _parabolic_offset(left, center, right):
    if left <= 0.0 or center <= 0.0 or right <= 0.0:
        return 0.0
    a = math.log(left)
    b = math.log(center)
    c = math.log(right)
    denom = a - 2.0 * b + c
    if denom >= 0.0:
        return 0.0
    offset = 0.5 * (a - c) / denom
    if offset > 0.5:
        return 0.5
    if offset < -0.5:
        return -0.5
    return offset
