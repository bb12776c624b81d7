"""Monte Carlo sweeps of symbol error rate over SNR.

A sweep point transmits framed payload units at one noise level, detects
them, and reports the error fraction per detection unit together with a
normal-approximation 95% confidence half-width.  Every random stream is
derived from the sweep seed, the point index and the frame index, so a
finished run regenerates bit for bit from its echoed configuration, and
sweeps sharing a seed see identical payloads regardless of detector or
oversampling factor.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import sources as src
from .channel import transmit
from .detect import forward_backward, map_decide, window_detect
from .likelihood import (
    analytic_table,
    estimate_table,
    pattern_index,
    supersymbol_window_table,
)
from .pulses import build_channel, make_pulse

_BATCH_FRAMES = 32
_PILOT_TAG = {"bcjr": 101, "window-full": 102, "window-center": 103}


@dataclass(frozen=True)
class SweepConfig:
    """Everything needed to reproduce a sweep, serialized into the sidecar."""

    snr_db: tuple[float, ...]
    source: str = "iud"  # iud | markov | supersymbol
    detector: str = "bcjr"  # bcjr | window-full | window-center
    table: str = "estimated"  # estimated | analytic
    pulse: str = "rect"
    samples_per_symbol: int = 3
    memory: int = 1
    alphabet_order: int = 4
    frame_len: int = 500
    max_symbols: int = 100_000
    min_errors: int = 0
    pilot_len: int = 100_000
    accuracy: float = 1e-4
    seed: int = 0
    beta: float = 0.5
    bandwidth_time: float = 0.5
    span: int = 8
    supersymbol_pairs: tuple[tuple[int, int], ...] | None = None


@dataclass(frozen=True)
class SerPoint:
    snr_db: float
    symbols: int
    errors: int
    ser: float
    ci95: float


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    points: tuple[SerPoint, ...]


def _noise_variance(snr_db):
    return float(10.0 ** (-float(snr_db) / 10.0))


def _channel(cfg, noise_variance):
    pulse = make_pulse(
        cfg.pulse,
        cfg.samples_per_symbol,
        span=cfg.span,
        beta=cfg.beta,
        bandwidth_time=cfg.bandwidth_time,
    )
    return build_channel(pulse, pulse, memory=cfg.memory, noise_variance=noise_variance)


def resolve_config(cfg):
    """Fill in derived fields that must be pinned for reproducibility.

    The super-symbol pair set is searched once here and echoed into the
    sidecar, so a rerun never depends on the search being repeated.
    """
    if cfg.detector != "bcjr" and cfg.source == "markov":
        raise ValueError(
            "window detectors marginalize neighbors as independent units; "
            "the markov source needs the bcjr detector"
        )
    if cfg.source == "supersymbol" and cfg.supersymbol_pairs is None:
        alphabet = src.ask(cfg.alphabet_order)
        ranked = src.search_supersymbol_sets(_channel(cfg, 0.0), alphabet)
        if not ranked:
            raise ValueError("no admissible super-symbol set for this channel")
        cfg = dataclasses.replace(cfg, supersymbol_pairs=ranked[0].pairs)
    return cfg


def make_source(cfg):
    alphabet = src.ask(cfg.alphabet_order)
    if cfg.source == "iud":
        return src.IUDSource(alphabet)
    if cfg.source == "markov":
        return src.default_markov(alphabet)
    if cfg.source == "supersymbol":
        if cfg.supersymbol_pairs is None:
            raise ValueError("resolve_config must run before make_source")
        return src.SuperSymbolSource(alphabet, cfg.supersymbol_pairs)
    raise ValueError(f"unknown source {cfg.source!r}")


def _detector_table(cfg, channel, units, pt):
    kind = cfg.detector
    pilot_seed = (cfg.seed, _PILOT_TAG[kind], pt)
    if kind == "bcjr":
        if cfg.table == "analytic":
            return analytic_table(channel, units, accuracy=cfg.accuracy, seed=(cfg.seed, pt))
        return estimate_table(channel, units, pilot_len=cfg.pilot_len, seed=pilot_seed)
    mode = "full" if kind == "window-full" else "center"
    if cfg.table == "analytic":
        return supersymbol_window_table(
            channel, units, mode=mode, method="analytic",
            accuracy=cfg.accuracy, seed=(cfg.seed, pt),
        )
    return supersymbol_window_table(
        channel, units, mode=mode, method="estimated",
        pilot_len=cfg.pilot_len, seed=pilot_seed,
    )


def _frame_units(cfg, source, pt, frame, n_units):
    rng = np.random.default_rng((cfg.seed, pt, frame, 0))
    return src.generate_units(source, n_units, rng)


def _run_point(cfg, source, pt):
    """One sweep point; frames are processed in index order so the stop
    rule is independent of batching."""
    sigma2 = _noise_variance(cfg.snr_db[pt])
    channel = _channel(cfg, sigma2)
    units = src.units(source)
    n_unit_syms, q = units.shape
    table = _detector_table(cfg, channel, units, pt)
    prior = src.unit_prior(source)
    memory = cfg.memory
    payload = cfg.frame_len
    n_frame_units = memory + payload + 1
    max_units = max(1, cfg.max_symbols // q)
    width = q * cfg.samples_per_symbol
    radix = n_unit_syms ** np.arange(memory)[::-1]
    known = np.full(payload + 1, -1, dtype=np.int64)

    errors = done = 0
    frame = 0
    while done < max_units and (cfg.min_errors <= 0 or errors < cfg.min_errors):
        batch = [
            _frame_units(cfg, source, pt, frame + i, n_frame_units)
            for i in range(_BATCH_FRAMES)
        ]
        streams = []
        for i, uidx in enumerate(batch):
            rng_noise = np.random.default_rng((cfg.seed, pt, frame + i, 1))
            streams.append(transmit(channel, units[uidx].ravel(), rng_noise))
        if cfg.detector == "bcjr":
            pats = np.stack(
                [pattern_index(s.reshape(n_frame_units, width))[memory:] for s in streams]
            )
            starts = np.array([int(np.dot(u[:memory], radix)) for u in batch])
            tails = np.array([u[-1] for u in batch])
            decided = np.zeros((_BATCH_FRAMES, payload), dtype=np.int64)
            for tail_val in np.unique(tails):
                rows = np.nonzero(tails == tail_val)[0]
                known[-1] = tail_val
                res = forward_backward(table, prior, pats[rows], starts[rows], known)
                decided[rows] = map_decide(res.posteriors[:, :payload], units)
        else:
            decided = np.stack(
                [window_detect(table, s.ravel(), memory, payload) for s in streams]
            )
        for i, uidx in enumerate(batch):
            truth = uidx[memory : memory + payload]
            errors += int((decided[i] != truth).sum())
            done += payload
            frame += 1
            if done >= max_units or (cfg.min_errors > 0 and errors >= cfg.min_errors):
                break
    ser = errors / done
    ci95 = 1.96 * np.sqrt(ser * (1.0 - ser) / done)
    return SerPoint(float(cfg.snr_db[pt]), done, errors, ser, float(ci95))


def run_sweep(cfg):
    """Run every SNR point of a sweep and return the resolved result."""
    cfg = resolve_config(cfg)
    source = make_source(cfg)
    points = tuple(_run_point(cfg, source, pt) for pt in range(len(cfg.snr_db)))
    return SweepResult(cfg, points)


def compare_oversampling(cfg, factors=(3, 6)):
    """Paired sweeps over oversampling factors, sharing seed and payloads."""
    results = {}
    for m in factors:
        results[m] = run_sweep(dataclasses.replace(cfg, samples_per_symbol=int(m)))
    return results


# ---------------------------------------------------------------------------
# persistence: CSV of points, sidecar with the exact configuration


def _format(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def config_to_text(cfg):
    lines = ["# sweep configuration echo", "format = onebitsim-sweep-1"]
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if f.name == "snr_db":
            v = ",".join(repr(float(x)) for x in v)
        elif f.name == "supersymbol_pairs":
            v = "" if v is None else ";".join(f"{c},{d}" for c, d in v)
        lines.append(f"{f.name} = {_format(v)}")
    return "\n".join(lines) + "\n"


def config_from_text(text):
    raw = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        raw[key.strip()] = value.strip()
    if raw.pop("format", None) != "onebitsim-sweep-1":
        raise ValueError("not a sweep configuration echo")
    kwargs = {}
    for f in dataclasses.fields(SweepConfig):
        if f.name not in raw:
            continue
        v = raw[f.name]
        if f.name == "snr_db":
            kwargs[f.name] = tuple(float(x) for x in v.split(","))
        elif f.name == "supersymbol_pairs":
            kwargs[f.name] = (
                tuple(tuple(int(x) for x in p.split(",")) for p in v.split(";"))
                if v
                else None
            )
        elif f.type.startswith("int"):
            kwargs[f.name] = int(v)
        elif f.type.startswith("float"):
            kwargs[f.name] = float(v)
        else:
            kwargs[f.name] = v
    return SweepConfig(**kwargs)


_CSV_HEADER = "snr_db,symbols,errors,ser,ci95"


def points_to_csv(points):
    rows = [_CSV_HEADER]
    for p in points:
        rows.append(
            f"{repr(p.snr_db)},{p.symbols},{p.errors},{repr(p.ser)},{repr(p.ci95)}"
        )
    return "\n".join(rows) + "\n"


def read_results(csv_path):
    with open(csv_path, encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if lines[0] != _CSV_HEADER:
        raise ValueError(f"{csv_path} has an unexpected header")
    points = []
    for ln in lines[1:]:
        snr, n, e, ser, ci = ln.split(",")
        points.append(SerPoint(float(snr), int(n), int(e), float(ser), float(ci)))
    return tuple(points)


def emit_results(result, base_path, label=None, render=True):
    """Write <base>.csv, <base>.config.txt and <base>.png side by side."""
    base = str(base_path)
    csv_path = base + ".csv"
    with open(csv_path, "w", encoding="ascii") as fh:
        fh.write(points_to_csv(result.points))
    with open(base + ".config.txt", "w", encoding="ascii") as fh:
        fh.write(config_to_text(result.config))
    if render:
        from .plotting import render_ser_curves

        name = label or f"{result.config.source} / {result.config.detector}"
        render_ser_curves({name: result.points}, base + ".png")
    return csv_path


def load_config(path):
    with open(path, encoding="ascii") as fh:
        return config_from_text(fh.read())
