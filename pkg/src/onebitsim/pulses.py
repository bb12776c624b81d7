"""Pulse shaping and the sampled-domain description of the oversampled link.

Everything downstream works at the receiver sampling rate of M samples per
symbol interval.  A pulse is a unit-energy tap vector on that grid.  The
convolution of transmit pulse and receive filter, together with the
receive-filter autocorrelation that colors the sampled noise, fully
describes the discrete channel seen by the 1-bit quantizer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RECTANGULAR = "rect"
ROOT_RAISED_COSINE = "rrc"
GAUSSIAN = "gauss"

PULSE_KINDS = (RECTANGULAR, ROOT_RAISED_COSINE, GAUSSIAN)


@dataclass(frozen=True)
class PulseShape:
    """Unit-energy pulse taps sampled at Ts/M.

    Attributes
    ----------
    kind : str
        One of ``rect``, ``rrc``, ``gauss``.
    samples_per_symbol : int
        Oversampling factor M of the tap grid.
    taps : np.ndarray
        Tap values, normalized so that ``sum(taps**2) == 1``.
    beta : float or None
        Roll-off of a root-raised-cosine pulse.
    bandwidth_time : float or None
        3-dB bandwidth-symbol-time product of a Gaussian pulse.
    """

    kind: str
    samples_per_symbol: int
    taps: np.ndarray
    beta: float | None = None
    bandwidth_time: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "taps", np.asarray(self.taps, dtype=float))


def _rrc_amplitude(t, beta):
    """Root-raised-cosine impulse response at times ``t`` in symbol units."""
    t = np.asarray(t, dtype=float)
    if beta == 0.0:
        return np.sinc(t)
    out = np.empty_like(t)
    quarter = 1.0 / (4.0 * beta)
    at_zero = np.isclose(t, 0.0, atol=1e-12, rtol=0.0)
    at_quarter = np.isclose(np.abs(t), quarter, atol=1e-12, rtol=0.0)
    regular = ~(at_zero | at_quarter)
    x = t[regular]
    num = np.sin(np.pi * x * (1.0 - beta)) + 4.0 * beta * x * np.cos(np.pi * x * (1.0 + beta))
    den = np.pi * x * (1.0 - (4.0 * beta * x) ** 2)
    out[regular] = num / den
    out[at_zero] = 1.0 - beta + 4.0 * beta / np.pi
    out[at_quarter] = (beta / np.sqrt(2.0)) * (
        (1.0 + 2.0 / np.pi) * np.sin(np.pi / (4.0 * beta))
        + (1.0 - 2.0 / np.pi) * np.cos(np.pi / (4.0 * beta))
    )
    return out


def make_pulse(kind, samples_per_symbol, span=8, beta=0.5, bandwidth_time=0.5):
    """Build a unit-energy pulse on the Ts/M tap grid.

    Parameters
    ----------
    kind : str
        ``rect`` for a rectangle of one symbol duration, ``rrc`` for a
        root-raised-cosine with roll-off ``beta``, ``gauss`` for a Gaussian
        with 3-dB bandwidth-symbol-time product ``bandwidth_time``.
    samples_per_symbol : int
        Oversampling factor M, at least 1.
    span : int
        Truncation length in symbol intervals for the infinite-support
        shapes.  Ignored by ``rect``, whose support is one interval.
    """
    m = int(samples_per_symbol)
    if m < 1:
        raise ValueError("samples_per_symbol must be at least 1")
    if kind == RECTANGULAR:
        taps = np.ones(m)
        beta = None
        bandwidth_time = None
    elif kind in (ROOT_RAISED_COSINE, GAUSSIAN):
        span = int(span)
        if span < 1:
            raise ValueError("span must be at least 1 symbol")
        n = span * m + 1
        t = (np.arange(n) - (n - 1) / 2.0) / m
        if kind == ROOT_RAISED_COSINE:
            if not 0.0 <= beta <= 1.0:
                raise ValueError("roll-off beta must lie in [0, 1]")
            taps = _rrc_amplitude(t, float(beta))
            bandwidth_time = None
        else:
            if bandwidth_time <= 0.0:
                raise ValueError("bandwidth_time must be positive")
            taps = np.exp(-2.0 * np.pi**2 * (float(bandwidth_time) * t) ** 2 / np.log(2.0))
            beta = None
    else:
        raise ValueError(f"unknown pulse kind {kind!r}")
    taps = taps / np.linalg.norm(taps)
    return PulseShape(kind, m, taps, beta, bandwidth_time)


def combine(transmit_pulse, receive_filter):
    """Taps of the cascade transmit pulse -> receive filter (their convolution)."""
    if transmit_pulse.samples_per_symbol != receive_filter.samples_per_symbol:
        raise ValueError("pulses must share the same tap grid")
    return np.convolve(transmit_pulse.taps, receive_filter.taps)


@dataclass(frozen=True)
class DiscreteChannel:
    """Sampled-domain model: combined response, alignment, noise correlation.

    ``peak`` is the index of the combined-response maximum.  Symbol k owns M
    consecutive output samples aligned so that the last of them sits on that
    peak; for a matched rectangle this makes the block of symbol k
    ``[(2 x_{k-1} + x_k)/3, (x_{k-1} + 2 x_k)/3, x_k]`` at M = 3.

    ``noise_autocorr[d]`` is the receive-filter autocorrelation at lag d, so
    white noise of variance ``noise_variance`` entering the receive filter
    produces sampled noise with covariance
    ``noise_variance * noise_autocorr[|i - j|]``.
    """

    transmit_pulse: PulseShape
    receive_filter: PulseShape
    combined: np.ndarray
    samples_per_symbol: int
    memory: int
    noise_variance: float
    peak: int
    noise_autocorr: np.ndarray


def build_channel(transmit_pulse, receive_filter, memory=1, noise_variance=0.0):
    """Assemble the discrete channel for a transmit pulse / receive filter pair.

    ``memory`` is the number of past symbols the finite-state receiver model
    conditions on; the true combined response may extend further, and the
    excess is simply not modeled by the per-symbol likelihoods.
    """
    if int(memory) < 1:
        raise ValueError("memory must be at least 1 symbol")
    if noise_variance < 0.0:
        raise ValueError("noise_variance must be nonnegative")
    h = combine(transmit_pulse, receive_filter)
    mag = np.abs(h)
    near_max = np.flatnonzero(mag >= mag.max() * (1.0 - 1e-12))
    centre = (len(h) - 1) / 2.0
    peak = int(near_max[np.argmin(np.abs(near_max - centre))])
    g = receive_filter.taps
    autocorr = np.correlate(g, g, mode="full")[len(g) - 1 :]
    return DiscreteChannel(
        transmit_pulse=transmit_pulse,
        receive_filter=receive_filter,
        combined=h,
        samples_per_symbol=transmit_pulse.samples_per_symbol,
        memory=int(memory),
        noise_variance=float(noise_variance),
        peak=peak,
        noise_autocorr=autocorr,
    )


def block_covariance(channel, width):
    """Covariance of ``width`` consecutive noise samples after the receive filter."""
    r = np.zeros(width)
    take = min(width, len(channel.noise_autocorr))
    r[:take] = channel.noise_autocorr[:take]
    idx = np.abs(np.arange(width)[:, None] - np.arange(width)[None, :])
    return channel.noise_variance * r[idx]


def convolution_operator(taps, n_in):
    """Explicit Toeplitz matrix of the convolution ``y = taps * x`` for length-n_in x.

    Mostly useful for tests and small examples; the simulation paths apply
    the same operator through np.convolve.
    """
    taps = np.asarray(taps, dtype=float)
    out = np.zeros((n_in + len(taps) - 1, n_in))
    for j in range(n_in):
        out[j : j + len(taps), j] = taps
    return out


def upsample(symbols, samples_per_symbol):
    """Insert M - 1 zeros after every symbol (without trailing zeros)."""
    x = np.asarray(symbols, dtype=float)
    if x.size == 0:
        return np.zeros(0)
    up = np.zeros((len(x) - 1) * samples_per_symbol + 1)
    up[:: samples_per_symbol] = x
    return up
