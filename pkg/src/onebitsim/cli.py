"""Command line front end.

Subcommands cover the everyday workflows: running an SER sweep, comparing
oversampling factors with paired payloads, checking a source for noiseless
decodability, building and persisting likelihood tables, listing admissible
super-symbol sets, and regenerating a published result from its sidecar.
Sweep outputs are a CSV, a configuration echo and a rendered figure side by
side under the requested base path.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import sources as src
from .detect import DecodingFailure
from .harness import (
    SweepConfig,
    compare_oversampling,
    emit_results,
    load_config,
    run_sweep,
)
from .likelihood import analytic_table, estimate_table, save_table
from .pulses import build_channel, make_pulse


def _parse_snr(text):
    if ":" in text:
        first, last, step = (float(x) for x in text.split(":"))
        return tuple(np.arange(first, last + step / 2, step).tolist())
    return tuple(float(x) for x in text.split(","))


def _add_point_options(sub):
    sub.add_argument("--source", default="iud", choices=["iud", "markov", "supersymbol"])
    sub.add_argument("--table", default="estimated", choices=["estimated", "analytic"])
    sub.add_argument("--pulse", default="rect", choices=["rect", "rrc", "gauss"])
    sub.add_argument("-m", "--samples-per-symbol", type=int, default=3)
    sub.add_argument("--memory", type=int, default=1)
    sub.add_argument("--alphabet-order", type=int, default=4)
    sub.add_argument("--frame-len", type=int, default=500)
    sub.add_argument("--max-symbols", type=int, default=100_000)
    sub.add_argument("--min-errors", type=int, default=0)
    sub.add_argument("--pilot", type=int, default=100_000)
    sub.add_argument("--accuracy", type=float, default=1e-4)
    sub.add_argument("--beta", type=float, default=0.5)
    sub.add_argument("--bandwidth-time", type=float, default=0.5)
    sub.add_argument("--span", type=int, default=8)


def _config_from_args(args, snr, detector):
    return SweepConfig(
        snr_db=snr,
        source=args.source,
        detector=detector,
        table=args.table,
        pulse=args.pulse,
        samples_per_symbol=args.samples_per_symbol,
        memory=args.memory,
        alphabet_order=args.alphabet_order,
        frame_len=args.frame_len,
        max_symbols=args.max_symbols,
        min_errors=args.min_errors,
        pilot_len=args.pilot,
        accuracy=args.accuracy,
        seed=args.seed,
        beta=args.beta,
        bandwidth_time=args.bandwidth_time,
        span=args.span,
    )


def _cmd_sweep(args):
    cfg = _config_from_args(args, _parse_snr(args.snr), args.detector)
    result = run_sweep(cfg)
    csv_path = emit_results(result, args.out, render=not args.no_figure)
    for p in result.points:
        print(f"{p.snr_db:>7.2f} dB  ser {p.ser:.6f} +- {p.ci95:.6f}  ({p.symbols} symbols)")
    print(f"wrote {csv_path}")
    return 0


def _cmd_compare_m(args):
    factors = tuple(int(x) for x in args.factors.split(","))
    cfg = _config_from_args(args, _parse_snr(args.snr), args.detector)
    results = compare_oversampling(cfg, factors)
    curves = {}
    for m, result in results.items():
        emit_results(result, f"{args.out}-m{m}", render=False)
        curves[f"M = {m}"] = result.points
        print(f"M={m}: " + "  ".join(f"{p.ser:.4f}" for p in result.points))
    if not args.no_figure:
        from .plotting import render_ser_curves

        render_ser_curves(curves, args.out + ".png")
    print(f"wrote {args.out}-m{{{','.join(str(m) for m in factors)}}}.csv")
    return 0


def _cmd_rerun(args):
    cfg = load_config(args.config)
    result = run_sweep(cfg)
    csv_path = emit_results(result, args.out, render=not args.no_figure)
    print(f"wrote {csv_path}")
    return 0


def _source_and_channel(args):
    pulse = make_pulse(
        args.pulse,
        args.samples_per_symbol,
        span=args.span,
        beta=args.beta,
        bandwidth_time=args.bandwidth_time,
    )
    channel = build_channel(pulse, pulse, memory=args.memory, noise_variance=0.0)
    alphabet = src.ask(args.alphabet_order)
    if args.source == "iud":
        return src.IUDSource(alphabet), channel
    if args.source == "markov":
        return src.default_markov(alphabet), channel
    return src.default_supersymbol(channel, alphabet), channel


def _cmd_verify_source(args):
    source, channel = _source_and_channel(args)
    report = src.verify_unique_decodability(source, channel, horizon=args.horizon)
    print(f"source = {args.source}")
    print(f"entropy per symbol = {src.entropy(source)!r}")
    print(f"uniquely decodable (horizon {args.horizon}) = {report.decodable}")
    if not report.decodable:
        print(f"colliding inputs: {report.witness[0]} vs {report.witness[1]}")
    return 0 if report.decodable else 2


def _cmd_build_table(args):
    pulse = make_pulse(
        args.pulse,
        args.samples_per_symbol,
        span=args.span,
        beta=args.beta,
        bandwidth_time=args.bandwidth_time,
    )
    sigma2 = float(10.0 ** (-args.snr_db / 10.0))
    channel = build_channel(pulse, pulse, memory=args.memory, noise_variance=sigma2)
    alphabet = src.ask(args.alphabet_order)
    if args.table == "analytic":
        table = analytic_table(channel, alphabet, accuracy=args.accuracy, seed=args.seed)
    else:
        table = estimate_table(channel, alphabet, pilot_len=args.pilot, seed=args.seed)
    save_table(table, args.out)
    print(f"wrote {args.out} ({table.method}, {table.probs.size} entries)")
    return 0


def _cmd_search_supersymbols(args):
    pulse = make_pulse(
        args.pulse,
        args.samples_per_symbol,
        span=args.span,
        beta=args.beta,
        bandwidth_time=args.bandwidth_time,
    )
    channel = build_channel(pulse, pulse, memory=args.memory, noise_variance=0.0)
    alphabet = src.ask(args.alphabet_order)
    ranked = src.search_supersymbol_sets(channel, alphabet, set_size=args.set_size)
    if not ranked:
        print("no admissible set")
        return 2
    for entry in ranked[: args.top]:
        pairs = ";".join(f"{c},{d}" for c, d in entry.pairs)
        print(f"min_distance {entry.min_distance:.6f}  pairs {pairs}")
    print(f"{len(ranked)} admissible sets")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="onebitsim",
        description="link simulations with a 1-bit oversampling receiver",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("sweep", help="run an SER-over-SNR sweep")
    p.add_argument("--snr", required=True, help="comma list or first:last:step, in dB")
    p.add_argument("--detector", default="bcjr", choices=["bcjr", "window-full", "window-center"])
    _add_point_options(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output base path (csv/config/png)")
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=_cmd_sweep)

    p = subs.add_parser("compare-m", help="paired sweeps over oversampling factors")
    p.add_argument("--snr", required=True)
    p.add_argument("--factors", default="3,6")
    p.add_argument("--detector", default="bcjr", choices=["bcjr", "window-full", "window-center"])
    _add_point_options(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=_cmd_compare_m)

    p = subs.add_parser("rerun", help="regenerate a sweep from its sidecar config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=_cmd_rerun)

    p = subs.add_parser("verify-source", help="noiseless unique-decodability check")
    _add_point_options(p)
    p.add_argument("--horizon", type=int, default=10)
    p.set_defaults(func=_cmd_verify_source)

    p = subs.add_parser("build-table", help="build and save a likelihood table")
    _add_point_options(p)
    p.add_argument("--snr-db", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build_table)

    p = subs.add_parser("search-supersymbols", help="rank admissible super-symbol sets")
    _add_point_options(p)
    p.add_argument("--set-size", type=int, default=8)
    p.add_argument("--top", type=int, default=5)
    p.set_defaults(func=_cmd_search_supersymbols)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, DecodingFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
