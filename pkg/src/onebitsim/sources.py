"""Symbol alphabets and the information sources driving the link.

Three source families are used.  Independent uniformly distributed symbols
carry the full alphabet entropy but their sign patterns collide at the
1-bit receiver.  A first-order Markov chain forbids amplitude changes
inside a sign run, which keeps consecutive blocks distinguishable at the
cost of rate.  Super symbols restrict transmissions to a searched set of
eight symbol pairs whose quantized output windows never coincide.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .channel import mean_waveform

_ENUM_LIMIT = 6_000_000


@dataclass(frozen=True)
class Alphabet:
    """Sorted real amplitude levels, symmetric about zero, unit mean square."""

    levels: tuple[float, ...]

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=float)
        if lv.ndim != 1 or len(lv) < 2:
            raise ValueError("alphabet needs at least two levels")
        if np.any(np.diff(lv) <= 0.0):
            raise ValueError("levels must be strictly increasing")
        if np.abs(lv + lv[::-1]).max() > 1e-12:
            raise ValueError("levels must be symmetric about zero")
        if abs(np.mean(lv**2) - 1.0) > 1e-9:
            raise ValueError("levels must have unit mean square")
        object.__setattr__(self, "levels", tuple(float(v) for v in lv))

    def __len__(self):
        return len(self.levels)

    @property
    def amplitudes(self):
        return np.asarray(self.levels, dtype=float)


def ask(order=4):
    """Amplitude-shift-keying alphabet with ``order`` equispaced levels."""
    if order < 2 or order % 2:
        raise ValueError("order must be an even integer of at least 2")
    raw = np.arange(-(order - 1), order, 2, dtype=float)
    return Alphabet(tuple(raw / np.sqrt(np.mean(raw**2))))


@dataclass(frozen=True)
class IUDSource:
    """Independent, uniformly distributed symbols."""

    alphabet: Alphabet


@dataclass(frozen=True)
class MarkovSource:
    """First-order chain over the alphabet; transitions[j][i] = P(i | j)."""

    alphabet: Alphabet
    transitions: tuple[tuple[float, ...], ...]
    start_state: int = 0

    def __post_init__(self):
        t = np.asarray(self.transitions, dtype=float)
        n = len(self.alphabet)
        if t.shape != (n, n):
            raise ValueError("transition matrix must be square over the alphabet")
        if np.any(t < 0.0) or np.abs(t.sum(axis=1) - 1.0).max() > 1e-9:
            raise ValueError("transition rows must be probability distributions")
        if not 0 <= self.start_state < n:
            raise ValueError("start_state out of range")

    @property
    def matrix(self):
        return np.asarray(self.transitions, dtype=float)


@dataclass(frozen=True)
class SuperSymbolSource:
    """Uniform choice among a fixed set of ordered symbol pairs."""

    alphabet: Alphabet
    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        n = len(self.alphabet)
        seen = set()
        for pair in self.pairs:
            if len(pair) != 2 or not all(0 <= p < n for p in pair):
                raise ValueError("pairs must index the alphabet")
            seen.add(tuple(pair))
        if len(seen) != len(self.pairs):
            raise ValueError("pairs must be distinct")


def default_markov(alphabet, start_state=0):
    """Constrained chain: from level a the one forbidden successor is the
    same-sign level of the other magnitude, the remaining three are
    equiprobable.  Same-sign runs therefore keep a constant amplitude."""
    if len(alphabet) != 4:
        raise ValueError("the default constrained chain is defined for 4 levels")
    partner = {0: 1, 1: 0, 2: 3, 3: 2}
    rows = []
    for j in range(4):
        row = [0.0 if i == partner[j] else 1.0 / 3.0 for i in range(4)]
        rows.append(tuple(row))
    return MarkovSource(alphabet, tuple(rows), start_state)


def units(source):
    """Detection units as an (A, q) array of amplitude rows.

    q = 1 for symbol-wise sources and q = 2 for super symbols.
    """
    lv = np.asarray(source.alphabet.levels)
    if isinstance(source, SuperSymbolSource):
        return lv[np.asarray(source.pairs, dtype=int)]
    return lv[:, None]


def unit_prior(source):
    """P(next unit | previous unit), an (A, A) row-stochastic matrix."""
    if isinstance(source, MarkovSource):
        return source.matrix
    n = len(units(source))
    return np.full((n, n), 1.0 / n)


def _markov_path(matrix, start, n, rng):
    cum = np.cumsum(matrix, axis=1)
    draws = rng.random(n)
    out = np.empty(n, dtype=np.int64)
    state = start
    for k in range(n):
        state = int(np.searchsorted(cum[state], draws[k], side="right"))
        out[k] = state
    return out


def generate_units(source, n_units, rng, initial=None):
    """Unit-index sequence of length ``n_units``.

    ``initial`` conditions a Markov chain on a previous symbol; it defaults
    to the source's start state.  The other sources draw i.u.d. units.
    """
    rng = np.random.default_rng(rng)
    if isinstance(source, MarkovSource):
        start = source.start_state if initial is None else int(initial)
        return _markov_path(source.matrix, start, n_units, rng)
    return rng.integers(0, len(units(source)), size=n_units)


def generate(source, n, rng):
    """Sequence of ``n`` alphabet symbols, returned as level indices.

    Super-symbol sequences are concatenations of pairs, so ``n`` must be
    even for that source.
    """
    if isinstance(source, SuperSymbolSource):
        if n % 2:
            raise ValueError("super-symbol sequences have even length")
        pairs = np.asarray(source.pairs, dtype=int)
        return pairs[generate_units(source, n // 2, rng)].ravel()
    return generate_units(source, n, rng)


def stationary_distribution(source):
    """Exact stationary distribution of a Markov source."""
    t = source.matrix
    n = t.shape[0]
    a = np.vstack([t.T - np.eye(n), np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(a, b, rcond=None)
    return np.clip(pi, 0.0, None) / pi.sum()


def entropy(source):
    """Entropy rate in bits per alphabet symbol."""
    if isinstance(source, IUDSource):
        return float(np.log2(len(source.alphabet)))
    if isinstance(source, SuperSymbolSource):
        return float(np.log2(len(source.pairs)) / 2.0)
    t = source.matrix
    pi = stationary_distribution(source)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(t > 0.0, np.log2(np.where(t > 0.0, t, 1.0)), 0.0)
    return float(-(pi[:, None] * t * logs).sum())


# ---------------------------------------------------------------------------
# unique decodability of the noiseless quantized output


@dataclass(frozen=True)
class DecodabilityResult:
    decodable: bool
    witness: tuple[tuple[float, ...], tuple[float, ...]] | None = None


def _lag_response(channel, n_symbols):
    """Matrix B with waveform[:, j*M+m] = sum_j' x[:, j'] B[j', j*M+m]."""
    m = channel.samples_per_symbol
    h = channel.combined
    base = channel.peak + 1 - m
    b = np.zeros((n_symbols, n_symbols * m))
    for j_in in range(n_symbols):
        for j_out in range(n_symbols):
            idx = base + np.arange(m) + (j_out - j_in) * m
            ok = (idx >= 0) & (idx < len(h))
            b[j_in, j_out * m : (j_out + 1) * m][ok] = h[idx[ok]]
    return b


def _pattern_bytes(channel, level_rows):
    signs = level_rows @ _lag_response(channel, level_rows.shape[1]) >= 0.0
    return np.packbits(signs, axis=1)


def _first_collision(byte_rows):
    """Indices (i, j) of the lexicographically smallest colliding row pair."""
    _, inverse, counts = np.unique(byte_rows, axis=0, return_inverse=True, return_counts=True)
    if counts.max(initial=0) < 2:
        return None
    order = np.argsort(inverse, kind="stable")
    grouped = np.split(order, np.cumsum(counts)[:-1])
    pairs = [(int(g[0]), int(g[1])) for g in grouped if len(g) >= 2]
    return min(pairs)


def _legal_sequences(allowed, first_allowed, n):
    seqs = np.flatnonzero(first_allowed)[:, None].astype(np.int8)
    for _ in range(n - 1):
        a = allowed.shape[0]
        ext = np.repeat(seqs, a, axis=0)
        nxt = np.tile(np.arange(a, dtype=np.int8), len(seqs))
        keep = allowed[ext[:, -1], nxt]
        seqs = np.column_stack([ext[keep], nxt[keep]])
        if len(seqs) > _ENUM_LIMIT:
            raise ValueError("enumeration horizon too large")
    return seqs


def verify_unique_decodability(source, channel, horizon=10):
    """Brute-force check that distinct legal sequences give distinct outputs.

    All source-legal sequences up to ``horizon`` alphabet symbols are
    transmitted noiselessly and their quantized outputs compared.  Markov
    sequences are conditioned on the known start state, which is prepended
    as context.  On failure the lexicographically smallest colliding pair
    (ordered by length, then by the sequences themselves) is returned as
    amplitude tuples.
    """
    if not 1 <= horizon <= 12:
        raise ValueError("horizon must lie in 1..12 (brute-force bound)")
    u = units(source)
    n_units_count, q = u.shape
    prior = unit_prior(source)
    allowed = prior > 0.0
    if isinstance(source, MarkovSource):
        prefix = np.asarray([source.start_state])
        first_allowed = allowed[source.start_state]
    else:
        prefix = np.zeros(0, dtype=int)
        first_allowed = np.ones(n_units_count, dtype=bool)
    for n in range(1, horizon // q + 1):
        seqs = _legal_sequences(allowed, first_allowed, n)
        rows = np.hstack([np.broadcast_to(prefix, (len(seqs), len(prefix))), seqs])
        levels = u[rows].reshape(len(seqs), -1)
        hit = _first_collision(_pattern_bytes(channel, levels))
        if hit is not None:
            a, b = (tuple(float(v) for v in u[seqs[i]].ravel()) for i in hit)
            return DecodabilityResult(False, (a, b))
    return DecodabilityResult(True)


# ---------------------------------------------------------------------------
# super-symbol set search


@dataclass(frozen=True)
class RankedPairSet:
    pairs: tuple[tuple[int, int], ...]
    min_distance: float


def _unit_windows(channel, alphabet):
    """Noiseless sign patterns of every pair's output window, per left context.

    Context 0 is the sequence start (zero padding); context c >= 1 means the
    preceding symbol was alphabet level c - 1.  Patterns are packed into
    integers, one per (context, pair).
    """
    lv = np.asarray(alphabet.levels)
    m = channel.samples_per_symbol
    pair_list = list(itertools.product(range(len(lv)), repeat=2))
    patterns = {}
    means = {}
    for pi, (c, d) in enumerate(pair_list):
        for ctx in range(len(lv) + 1):
            if ctx == 0:
                wave = mean_waveform(channel, [lv[c], lv[d]])[: 2 * m]
            else:
                wave = mean_waveform(channel, [lv[ctx - 1], lv[c], lv[d]])[m : 3 * m]
            bits = wave >= 0.0
            patterns[ctx, pi] = int(np.packbits(bits).tobytes().hex(), 16)
            if ctx == 0:
                means[pi] = wave
    return pair_list, patterns, means


def search_supersymbol_sets(channel, alphabet, set_size=8):
    """Rank the symbol-pair subsets whose windows identify every pair.

    A candidate set is kept when no two of its pairs can produce the same
    quantized window under any legal left context (any last symbol occurring
    in the set, or the sequence start).  Kept sets are ranked by the minimum
    pairwise Euclidean distance between their noiseless mean windows, larger
    first; ties fall back to the lexicographic order of the pair indices.
    The top set is the recommended default and should be persisted in run
    configs rather than rebuilt implicitly.
    """
    pair_list, patterns, means = _unit_windows(channel, alphabet)
    ranked = []
    for combo in itertools.combinations(range(len(pair_list)), set_size):
        contexts = {0} | {pair_list[pi][1] + 1 for pi in combo}
        owner = {}
        ok = True
        for pi in combo:
            for ctx in contexts:
                pat = patterns[ctx, pi]
                if owner.setdefault(pat, pi) != pi:
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            continue
        dmin = min(
            float(np.linalg.norm(means[a] - means[b]))
            for a, b in itertools.combinations(combo, 2)
        )
        ranked.append(RankedPairSet(tuple(pair_list[pi] for pi in combo), dmin))
    ranked.sort(key=lambda r: (-r.min_distance, r.pairs))
    return ranked


def default_supersymbol(channel, alphabet, set_size=8):
    """Source built from the top-ranked decodable pair set for this channel."""
    ranked = search_supersymbol_sets(channel, alphabet, set_size)
    if not ranked:
        raise ValueError("no uniquely decodable pair set exists for this channel")
    return SuperSymbolSource(alphabet, ranked[0].pairs)
