# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-trial kernels; see _pykernels.py for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, log, M_PI
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double LN2 = log(2.0)


def render_sweep(Py_ssize_t n, Py_ssize_t fft_length, double sample_rate,
                 amplitudes, frequencies, phases,
                 const double[:, ::1] noise, double noise_std):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.zeros(fft_length, dtype=np.complex128)
    cdef double[::1] amp = np.ascontiguousarray(amplitudes, dtype=np.float64)
    cdef double[::1] freq = np.ascontiguousarray(frequencies, dtype=np.float64)
    cdef double[::1] ph = np.ascontiguousarray(phases, dtype=np.float64)
    cdef Py_ssize_t ntones = amp.shape[0]
    cdef double* re = <double*> malloc(n * sizeof(double))
    cdef double* im = <double*> malloc(n * sizeof(double))
    cdef Py_ssize_t i, k
    cdef double omega, theta, a
    if re == NULL or im == NULL:
        free(re)
        free(im)
        raise MemoryError()
    try:
        for i in range(n):
            re[i] = noise_std * noise[0, i]
            im[i] = noise_std * noise[1, i]
        for k in range(ntones):
            a = amp[k]
            omega = 2.0 * M_PI * freq[k] / sample_rate
            for i in range(n):
                theta = omega * <double> i + ph[k]
                re[i] = re[i] + a * cos(theta)
                im[i] = im[i] + a * sin(theta)
        for i in range(n):
            out[i] = re[i] + 1j * im[i]
    finally:
        free(re)
        free(im)
    return out


cdef inline void _swap(double* v, Py_ssize_t i, Py_ssize_t j) noexcept nogil:
    cdef double t = v[i]
    v[i] = v[j]
    v[j] = t


cdef double _select(double* v, Py_ssize_t n, Py_ssize_t kth) noexcept nogil:
    # Hoare quickselect, median-of-three pivot; partially reorders v.
    cdef Py_ssize_t lo = 0, hi = n - 1, i, j, mid
    cdef double pivot
    while lo < hi:
        mid = lo + (hi - lo) // 2
        if v[mid] < v[lo]:
            _swap(v, mid, lo)
        if v[hi] < v[lo]:
            _swap(v, hi, lo)
        if v[hi] < v[mid]:
            _swap(v, hi, mid)
        pivot = v[mid]
        i = lo
        j = hi
        while i <= j:
            while v[i] < pivot:
                i += 1
            while v[j] > pivot:
                j -= 1
            if i <= j:
                _swap(v, i, j)
                i += 1
                j -= 1
        if kth <= j:
            hi = j
        elif kth >= i:
            lo = i
        else:
            return v[kth]
    return v[kth]


cdef double _parabolic_offset(double left, double center, double right) noexcept nogil:
    cdef double a, b, c, denom, offset
    if left <= 0.0 or center <= 0.0 or right <= 0.0:
        return 0.0
    a = log(left)
    b = log(center)
    c = log(right)
    denom = a - 2.0 * b + c
    if denom >= 0.0:
        return 0.0
    offset = 0.5 * (a - c) / denom
    if offset > 0.5:
        return 0.5
    if offset < -0.5:
        return -0.5
    return offset


def analyze_spectrum(const double complex[::1] spectrum, Py_ssize_t search_stop):
    cdef Py_ssize_t n = spectrum.shape[0]
    cdef Py_ssize_t i, k = 0
    cdef double p, peak = -1.0, lo_mid, hi_mid, median, left, right
    cdef double* power = <double*> malloc(n * sizeof(double))
    cdef double* scratch = <double*> malloc(n * sizeof(double))
    if power == NULL or scratch == NULL:
        free(power)
        free(scratch)
        raise MemoryError()
    try:
        if search_stop > n:
            search_stop = n
        for i in range(n):
            p = spectrum[i].real * spectrum[i].real + spectrum[i].imag * spectrum[i].imag
            power[i] = p
            scratch[i] = p
            if i < search_stop and p > peak:
                peak = p
                k = i
        hi_mid = _select(scratch, n, n // 2)
        if n % 2 == 0:
            # lower middle is the max of the left partition
            lo_mid = scratch[0]
            for i in range(1, n // 2):
                if scratch[i] > lo_mid:
                    lo_mid = scratch[i]
            median = 0.5 * (lo_mid + hi_mid)
        else:
            median = hi_mid
        left = power[(k - 1 + n) % n]
        right = power[(k + 1) % n]
        return k, peak, _parabolic_offset(left, peak, right), median / LN2
    finally:
        free(power)
        free(scratch)
