"""Waveform synthesis, colored-noise generation, and 1-bit quantization.

The simulation runs directly at the receiver sampling rate.  The noiseless
waveform is the upsampled symbol stream convolved with the combined pulse;
noise is white Gaussian passed through the receive filter, which realizes
exactly the covariance ``noise_variance * G G^T`` implied by the channel's
autocorrelation.  The quantizer keeps the sign only, mapping 0 to +1.
"""

from __future__ import annotations

import numpy as np

from .pulses import upsample


def mean_waveform(channel, symbols):
    """Noiseless receive-filter output, M samples per symbol.

    Sample ``k * M + m`` belongs to symbol k; the last sample of each block
    coincides with the combined-response peak for that symbol.  Symbols
    outside the sequence are taken as zero.
    """
    x = np.asarray(symbols, dtype=float)
    if x.ndim != 1:
        raise ValueError("symbols must be a 1-d sequence")
    if x.size == 0:
        return np.zeros(0)
    m = channel.samples_per_symbol
    full = np.convolve(upsample(x, m), channel.combined)
    lo = channel.peak - m + 1
    pad = m + len(channel.combined)
    full = np.pad(full, (pad, pad))
    return full[pad + lo : pad + lo + len(x) * m]


def quantize(samples, samples_per_symbol):
    """1-bit quantization into per-symbol blocks of +-1, with sign(0) = +1."""
    z = np.asarray(samples, dtype=float)
    if z.ndim != 1:
        raise ValueError("samples must be a 1-d sequence")
    if z.size % samples_per_symbol:
        raise ValueError("sample count is not a whole number of symbol blocks")
    bits = np.where(z >= 0.0, 1, -1).astype(np.int8)
    return bits.reshape(-1, samples_per_symbol)


def sample_noise(channel, n_samples, rng):
    """Colored noise at the receive-filter output, length ``n_samples``.

    White driving noise of variance ``noise_variance`` is filtered by the
    receive taps, so any window of the returned vector has covariance
    ``block_covariance`` of the matching width.
    """
    if channel.noise_variance == 0.0:
        return np.zeros(n_samples)
    g = channel.receive_filter.taps
    white = rng.standard_normal(n_samples + len(g) - 1)
    return np.sqrt(channel.noise_variance) * np.convolve(white, g, mode="valid")


def transmit(channel, symbols, rng):
    """Quantized receiver output blocks for a symbol sequence.

    Parameters
    ----------
    rng : int, SeedSequence or np.random.Generator
        Noise randomness; a fixed value reproduces the transmission exactly.

    Returns
    -------
    np.ndarray
        Array of shape (n_symbols, M) with entries +-1.
    """
    rng = np.random.default_rng(rng)
    z = mean_waveform(channel, symbols)
    z = z + sample_noise(channel, len(z), rng)
    return quantize(z, channel.samples_per_symbol)
