"""Simulation of communication links with 1-bit oversampled reception.

The package models a real baseband link: pulse-shaped amplitude symbols,
additive white Gaussian noise, a matched receive filter, and a receiver
that keeps only the sign of M samples per symbol interval.  Detection runs
on a finite-state approximation of that channel, with pattern likelihoods
obtained either as Gaussian orthant probabilities or from pilot counts.
"""

from .channel import mean_waveform, quantize, sample_noise, transmit
from .detect import (
    DecodingFailure,
    bcjr,
    brute_force_posteriors,
    forward_backward,
    map_decide,
    window_detect,
    window_posteriors,
)
from .gaussian import GaussianSpec, orthant_probability, sum_over_orthants
from .harness import (
    SerPoint,
    SweepConfig,
    SweepResult,
    compare_oversampling,
    config_from_text,
    config_to_text,
    emit_results,
    load_config,
    read_results,
    run_sweep,
)
from .likelihood import (
    LikelihoodTable,
    WindowTable,
    analytic_table,
    estimate_table,
    load_table,
    pattern_bits,
    pattern_index,
    pattern_string,
    parse_pattern,
    save_table,
    supersymbol_window_table,
    table_key,
)
from .pulses import (
    DiscreteChannel,
    PulseShape,
    block_covariance,
    build_channel,
    combine,
    convolution_operator,
    make_pulse,
    upsample,
)
from .sources import (
    Alphabet,
    IUDSource,
    MarkovSource,
    RankedPairSet,
    SuperSymbolSource,
    ask,
    default_markov,
    default_supersymbol,
    entropy,
    generate,
    generate_units,
    search_supersymbol_sets,
    stationary_distribution,
    unit_prior,
    units,
    verify_unique_decodability,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
