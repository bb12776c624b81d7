"""Conditional probabilities of quantized output patterns.

The receiver model is a finite-state channel: the distribution of the
current output block depends on the current unit and the ``memory`` units
before it.  Tables of P(pattern | unit history) are built either
analytically, as Gaussian orthant probabilities of the block mean and the
colored-noise covariance, or by counting patterns on a transmitted pilot
sequence.  Tables round-trip exactly through a self-describing text format
so expensive builds can be reused.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import mean_waveform, quantize, transmit
from .gaussian import GaussianSpec, orthant_probability
from .pulses import block_covariance

_ROW_TOL = 1e-6


# ---------------------------------------------------------------------------
# pattern indexing: sample 0 is the most significant bit, +1 -> bit 1


def pattern_index(blocks):
    """Pack rows of +-1 into pattern integers."""
    b = np.atleast_2d(np.asarray(blocks))
    weights = 1 << np.arange(b.shape[1])[::-1]
    return ((b > 0) @ weights).astype(np.int64)


def pattern_bits(index, width):
    """Inverse of pattern_index for a single pattern."""
    bits = (int(index) >> np.arange(width)[::-1]) & 1
    return np.where(bits > 0, 1, -1).astype(np.int8)


def pattern_string(index, width):
    return "".join("+" if b > 0 else "-" for b in pattern_bits(index, width))


def parse_pattern(text):
    if set(text) - {"+", "-"}:
        raise ValueError(f"bad pattern {text!r}")
    return pattern_index(np.array([[1 if c == "+" else -1 for c in text]]))[0]


def as_units(units_or_alphabet):
    """Normalize an Alphabet or an (A, q) array to unit amplitude rows."""
    levels = getattr(units_or_alphabet, "levels", None)
    if levels is not None:
        return np.asarray(levels, dtype=float)[:, None]
    u = np.asarray(units_or_alphabet, dtype=float)
    if u.ndim != 2:
        raise ValueError("units must be an (A, q) array of amplitude rows")
    return u


def _state_units(state, n_units, memory):
    """Mixed-radix decode of a state index into its unit indices, oldest first."""
    digits = []
    for _ in range(memory):
        digits.append(state % n_units)
        state //= n_units
    return digits[::-1]


@dataclass
class LikelihoodTable:
    """P(pattern | unit history) for every (state, unit, pattern) triple.

    ``probs[s, u, p]`` conditions on the state s (the previous ``memory``
    units in mixed-radix order, oldest most significant) and current unit u.
    Rows are probability distributions over all 2^(q*M) patterns.
    ``coverage[s, u]`` counts pilot visits for estimated tables.
    """

    units: np.ndarray
    samples_per_symbol: int
    memory: int
    noise_variance: float
    probs: np.ndarray
    method: str
    meta: dict = field(default_factory=dict)
    coverage: np.ndarray | None = None

    def __post_init__(self):
        self.units = np.asarray(self.units, dtype=float)
        self.probs = np.asarray(self.probs, dtype=float)
        a, q = self.units.shape
        width = q * self.samples_per_symbol
        expect = (a**self.memory, a, 1 << width)
        if self.probs.shape != expect:
            raise ValueError(f"probs shape {self.probs.shape} does not match {expect}")
        if np.any(self.probs < 0.0):
            raise ValueError("probabilities must be nonnegative")
        rows = self.probs.sum(axis=2)
        if np.abs(rows - 1.0).max() > _ROW_TOL:
            raise ValueError("pattern rows must sum to one")

    @property
    def width(self):
        return self.units.shape[1] * self.samples_per_symbol


def _history_mean(channel, unit_rows, width):
    """Block mean of the newest unit given the whole unit history."""
    wave = mean_waveform(channel, unit_rows.ravel())
    return wave[len(wave) - width :]


def analytic_table(channel, units_or_alphabet, accuracy=1e-5, seed=0):
    """Exact-model table from Gaussian orthant probabilities.

    Every entry integrates N(block mean, block covariance) over the orthant
    selected by the pattern, with the block mean taken from the
    ``memory + 1`` conditioning units and zero symbols elsewhere.  With zero
    noise variance the rows collapse to indicator distributions through the
    sign(0) = +1 convention.
    """
    u = as_units(units_or_alphabet)
    a, q = u.shape
    memory = channel.memory
    width = q * channel.samples_per_symbol
    n_patterns = 1 << width
    cov = block_covariance(channel, width)
    probs = np.zeros((a**memory, a, n_patterns))
    noiseless = channel.noise_variance == 0.0
    for s in range(a**memory):
        history = _state_units(s, a, memory)
        for cur in range(a):
            mu = _history_mean(channel, u[history + [cur]], width)
            if noiseless:
                probs[s, cur, pattern_index(np.where(mu >= 0.0, 1, -1)[None, :])[0]] = 1.0
                continue
            spec = GaussianSpec(mu, cov)
            for p in range(n_patterns):
                probs[s, cur, p], _ = orthant_probability(
                    spec, pattern_bits(p, width), accuracy=accuracy, seed=(seed, s, cur, p)
                )
    row_sums = probs.sum(axis=2)
    probs /= row_sums[..., None]
    meta = _channel_meta(channel)
    meta.update(
        method="analytic",
        accuracy=accuracy,
        seed=seed,
        max_row_defect=float(np.abs(row_sums - 1.0).max()),
    )
    return LikelihoodTable(
        u, channel.samples_per_symbol, memory, channel.noise_variance, probs, "analytic", meta
    )


def _edge_skip(channel, q):
    """Units at each end of a pilot whose blocks feel the zero padding."""
    m = channel.samples_per_symbol
    lead_lags = int(np.ceil(channel.peak / (q * m)))
    tail_lags = int(np.ceil((len(channel.combined) - 1 - channel.peak) / (q * m)))
    return max(channel.memory, lead_lags), max(1, tail_lags)


def estimate_table(channel, units_or_alphabet, pilot_len=100_000, seed=0, smoothing=1.0):
    """Table estimated by counting patterns on an i.u.d. pilot transmission.

    The pilot draws units uniformly so every conditioning row is reachable
    even when the payload source forbids some transitions.  Counts get
    additive smoothing: (count + smoothing) / (row + smoothing * 2^width).
    Rows never visited come out exactly uniform and are reported through
    ``coverage`` and ``meta['uncovered_rows']``.
    """
    u = as_units(units_or_alphabet)
    a, q = u.shape
    memory = channel.memory
    width = q * channel.samples_per_symbol
    n_patterns = 1 << width
    rng = np.random.default_rng(seed)
    n_units = max(int(pilot_len) // q, memory + 2)
    draws = rng.integers(0, a, size=n_units)
    blocks = transmit(channel, u[draws].ravel(), rng)
    patterns = pattern_index(blocks.reshape(n_units, width))
    lead, tail = _edge_skip(channel, q)
    counts = np.zeros((a**memory, a, n_patterns))
    radix = a ** np.arange(memory)[::-1]
    steps = np.arange(lead, n_units - tail)
    states = np.zeros(len(steps), dtype=np.int64)
    for offset in range(memory):
        states += draws[steps - memory + offset] * radix[offset]
    np.add.at(counts, (states, draws[steps], patterns[steps]), 1.0)
    rows = counts.sum(axis=2, keepdims=True)
    probs = (counts + smoothing) / (rows + smoothing * n_patterns)
    coverage = rows[..., 0]
    meta = _channel_meta(channel)
    meta.update(
        method="estimated",
        pilot_len=int(pilot_len),
        seed=seed,
        smoothing=smoothing,
        uncovered_rows=int((coverage == 0).sum()),
    )
    return LikelihoodTable(
        u,
        channel.samples_per_symbol,
        memory,
        channel.noise_variance,
        probs,
        "estimated",
        meta,
        coverage,
    )


# ---------------------------------------------------------------------------
# super-symbol windows for symbol-by-symbol detection


@dataclass
class WindowTable:
    """P(window pattern | unit) marginalized over the unknown neighbors.

    The ``full`` window spans a unit's own samples plus one adjacent sample
    on each side; ``center`` keeps the inner samples only, dropping the
    first and last of the unit's own block.
    """

    units: np.ndarray
    samples_per_symbol: int
    mode: str
    noise_variance: float
    probs: np.ndarray
    method: str
    meta: dict = field(default_factory=dict)
    coverage: np.ndarray | None = None

    def __post_init__(self):
        self.units = np.asarray(self.units, dtype=float)
        self.probs = np.asarray(self.probs, dtype=float)
        expect = (self.units.shape[0], 1 << self.width)
        if self.probs.shape != expect:
            raise ValueError(f"probs shape {self.probs.shape} does not match {expect}")
        if np.any(self.probs < 0.0):
            raise ValueError("probabilities must be nonnegative")
        if np.abs(self.probs.sum(axis=1) - 1.0).max() > _ROW_TOL:
            raise ValueError("pattern rows must sum to one")

    @property
    def width(self):
        base = self.units.shape[1] * self.samples_per_symbol
        return base + 2 if self.mode == "full" else base - 2


def _window_slice(mode, m, q):
    if mode == "full":
        return m - 1, q * m + 2
    if mode == "center":
        return m + 1, q * m - 2
    raise ValueError(f"unknown window mode {mode!r}")


def _neighbor_weights(u):
    """Distribution of the adjacent symbol levels under uniform neighbor units."""
    lv, counts = np.unique(u, return_counts=True)
    return lv, counts / counts.sum()


def supersymbol_window_table(
    channel,
    units_or_alphabet,
    mode="full",
    method="analytic",
    accuracy=1e-4,
    pilot_len=100_000,
    seed=0,
    smoothing=1.0,
):
    """Window-pattern likelihoods for symbol-by-symbol unit detection.

    The analytic route mixes orthant probabilities over the neighbor
    symbols that may border the window, weighting them by their frequency
    among the candidate units; the estimated route counts windows on an
    i.u.d. unit pilot.
    """
    u = as_units(units_or_alphabet)
    a, q = u.shape
    m = channel.samples_per_symbol
    start, width = _window_slice(mode, m, q)
    n_patterns = 1 << width
    meta = _channel_meta(channel)
    meta.update(method=method, mode=mode, seed=seed)
    if method == "analytic":
        last_lv, last_w = _neighbor_weights(u[:, -1])
        first_lv, first_w = _neighbor_weights(u[:, 0])
        cov = block_covariance(channel, width)
        noiseless = channel.noise_variance == 0.0
        probs = np.zeros((a, n_patterns))
        for cur in range(a):
            for prev, w_prev in zip(last_lv, last_w):
                for nxt, w_next in zip(first_lv, first_w):
                    ctx = np.concatenate([[prev], u[cur], [nxt]])
                    mu = mean_waveform(channel, ctx)[start : start + width]
                    weight = w_prev * w_next
                    if noiseless:
                        probs[cur, pattern_index(np.where(mu >= 0.0, 1, -1)[None, :])[0]] += weight
                        continue
                    spec = GaussianSpec(mu, cov)
                    for p in range(n_patterns):
                        val, _ = orthant_probability(
                            spec, pattern_bits(p, width), accuracy=accuracy, seed=(seed, cur, p)
                        )
                        probs[cur, p] += weight * val
        probs /= probs.sum(axis=1, keepdims=True)
        meta.update(accuracy=accuracy)
        return WindowTable(u, m, mode, channel.noise_variance, probs, method, meta)
    if method != "estimated":
        raise ValueError(f"unknown method {method!r}")
    rng = np.random.default_rng(seed)
    n_units = max(int(pilot_len) // q, 4)
    draws = rng.integers(0, a, size=n_units)
    samples = transmit(channel, u[draws].ravel(), rng).ravel()
    lead, tail = _edge_skip(channel, q)
    steps = np.arange(max(lead, 1), n_units - max(tail, 1))
    idx = steps[:, None] * (q * m) + start - m + np.arange(width)[None, :]
    patterns = pattern_index(samples[idx])
    counts = np.zeros((a, n_patterns))
    np.add.at(counts, (draws[steps], patterns), 1.0)
    rows = counts.sum(axis=1, keepdims=True)
    probs = (counts + smoothing) / (rows + smoothing * n_patterns)
    meta.update(pilot_len=int(pilot_len), smoothing=smoothing, uncovered_rows=int((rows == 0).sum()))
    return WindowTable(
        u, m, mode, channel.noise_variance, probs, method, meta, rows[:, 0]
    )


# ---------------------------------------------------------------------------
# persistence: self-describing text files with exact decimal round-trip


def _channel_meta(channel):
    pulse = channel.transmit_pulse
    meta = {
        "pulse": pulse.kind,
        "samples_per_symbol": channel.samples_per_symbol,
        "memory": channel.memory,
        "noise_variance": channel.noise_variance,
    }
    if pulse.beta is not None:
        meta["pulse_beta"] = pulse.beta
    if pulse.bandwidth_time is not None:
        meta["pulse_bandwidth_time"] = pulse.bandwidth_time
    if pulse.kind != "rect":
        meta["pulse_span"] = (len(pulse.taps) - 1) // channel.samples_per_symbol
    return meta


def table_key(table):
    """Short parameter fingerprint, usable as a cache file stem."""
    meta = table.meta
    bits = [meta.get("pulse", "?"), f"m{table.samples_per_symbol}"]
    if isinstance(table, LikelihoodTable):
        bits.append(f"l{table.memory}")
    else:
        bits.append(table.mode)
    bits.append(f"var{table.noise_variance:.6g}")
    bits.append(table.method)
    if table.method == "estimated":
        bits.append(f"pilot{meta.get('pilot_len', 0)}")
    bits.append(f"seed{meta.get('seed', 0)}")
    return "-".join(str(b) for b in bits)


def _format_value(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def save_table(table, path):
    """Write a table as text: a header of build parameters, then one line
    per (conditioning units, pattern, probability) with repr precision."""
    is_window = isinstance(table, WindowTable)
    a, q = table.units.shape
    width = table.width
    lines = ["# quantized-output likelihood table", "format = onebitsim-table-1"]
    lines.append(f"kind = {'window' if is_window else 'conditional'}")
    lines.append(f"method = {table.method}")
    lines.append(f"samples_per_symbol = {table.samples_per_symbol}")
    if is_window:
        lines.append(f"window_mode = {table.mode}")
    else:
        lines.append(f"memory = {table.memory}")
    lines.append(f"noise_variance = {_format_value(table.noise_variance)}")
    lines.append("units = " + ";".join(",".join(repr(float(x)) for x in row) for row in table.units))
    for key in sorted(table.meta):
        if key in ("pulse", "pulse_beta", "pulse_bandwidth_time", "pulse_span", "pilot_len",
                   "smoothing", "accuracy", "seed", "uncovered_rows", "max_row_defect"):
            lines.append(f"{key} = {_format_value(table.meta[key])}")
    if table.coverage is not None:
        lines.append("coverage = " + ",".join(repr(float(c)) for c in table.coverage.ravel()))
    lines.append("records = state/unit pattern probability")
    if is_window:
        for cur in range(a):
            for p in range(1 << width):
                lines.append(f"{cur} {pattern_string(p, width)} {repr(float(table.probs[cur, p]))}")
    else:
        for s in range(a**table.memory):
            state = ",".join(str(d) for d in _state_units(s, a, table.memory))
            for cur in range(a):
                for p in range(1 << width):
                    lines.append(
                        f"{state},{cur} {pattern_string(p, width)} {repr(float(table.probs[s, cur, p]))}"
                    )
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_table(path):
    """Read back a table written by save_table, bit-exact."""
    header = {}
    records = []
    with open(path, encoding="ascii") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if " = " in line:
                key, _, value = line.partition("=")
                header[key.strip()] = value.strip()
                continue
            records.append(line.split())
    if header.get("format") != "onebitsim-table-1":
        raise ValueError(f"{path} is not a likelihood table file")
    units = np.array(
        [[float(x) for x in row.split(",")] for row in header["units"].split(";")]
    )
    a, q = units.shape
    m = int(header["samples_per_symbol"])
    var = float(header["noise_variance"])
    meta = {}
    for key in ("pulse",):
        if key in header:
            meta[key] = header[key]
    for key in ("pulse_beta", "pulse_bandwidth_time", "smoothing", "accuracy", "max_row_defect"):
        if key in header:
            meta[key] = float(header[key])
    for key in ("pulse_span", "pilot_len", "uncovered_rows"):
        if key in header:
            meta[key] = int(header[key])
    if "seed" in header:
        try:
            meta["seed"] = int(header["seed"])
        except ValueError:
            meta["seed"] = header["seed"]
    meta["samples_per_symbol"] = m
    meta["noise_variance"] = var
    coverage = None
    if "coverage" in header:
        coverage = np.array([float(x) for x in header["coverage"].split(",")])
    if header["kind"] == "window":
        mode = header["window_mode"]
        width = q * m + (2 if mode == "full" else -2)
        probs = np.zeros((a, 1 << width))
        for state_txt, pattern_txt, value in records:
            probs[int(state_txt), parse_pattern(pattern_txt)] = float(value)
        meta["mode"] = mode
        meta["method"] = header["method"]
        return WindowTable(units, m, mode, var, probs, header["method"], meta, coverage)
    memory = int(header["memory"])
    meta["memory"] = memory
    meta["method"] = header["method"]
    width = q * m
    probs = np.zeros((a**memory, a, 1 << width))
    radix = a ** np.arange(memory)[::-1]
    for state_txt, pattern_txt, value in records:
        parts = [int(x) for x in state_txt.split(",")]
        s = int(np.dot(parts[:-1], radix))
        probs[s, parts[-1], parse_pattern(pattern_txt)] = float(value)
    if coverage is not None:
        coverage = coverage.reshape(a**memory, a)
    return LikelihoodTable(units, m, memory, var, probs, header["method"], meta, coverage)
