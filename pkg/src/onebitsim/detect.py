"""Sequence and symbol detection from quantized sample patterns.

Payload units are recovered from per-unit pattern streams either by the
forward-backward algorithm on the finite-state channel model, by
exhaustive enumeration over all legal unit sequences (a small-problem
oracle), or unit by unit from windowed patterns.  All detectors return
posterior distributions; hard decisions go through ``map_decide`` with a
deterministic tie rule so repeated runs agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DecodingFailure(RuntimeError):
    """All path probabilities vanished while decoding.

    ``step`` is the payload step at which the forward or backward mass
    underflowed to zero, or -1 when the failure is not tied to a step.
    """

    def __init__(self, step=-1, message="no surviving path"):
        super().__init__(f"{message} (step {step})")
        self.step = int(step)


def expand_prior(prior, n_units, memory):
    """Broadcast a next-unit prior to one row per channel state.

    Accepts either an ``(A, A)`` matrix of P(next unit | previous unit) or
    an already expanded ``(A**memory, A)`` array.  State indices encode the
    last ``memory`` units in mixed radix, oldest unit most significant, so
    the previous unit is the state modulo A.
    """
    p = np.asarray(prior, dtype=float)
    n_states = n_units**memory
    if p.shape == (n_states, n_units):
        return p
    if p.shape != (n_units, n_units):
        raise ValueError(f"prior shape {p.shape} fits neither units nor states")
    return p[np.arange(n_states) % n_units]


def _gammas(table, prior, patterns, known):
    """Per-step transition weights gamma[f, k, s, u] for a batch of frames."""
    probs = table.probs
    n_frames, n_steps = patterns.shape
    gam = probs[:, :, patterns].transpose(2, 3, 0, 1) * prior[None, None]
    if known is not None:
        mask = np.ones((n_steps, probs.shape[1]), dtype=bool)
        fixed = known >= 0
        mask[fixed] = False
        mask[np.nonzero(fixed)[0], known[fixed]] = True
        gam = gam * mask[None, :, None, :]
    return gam


@dataclass
class ForwardBackwardResult:
    """Posteriors plus the renormalized passes, kept for consistency checks.

    ``alphas[f, k]`` is the normalized forward state distribution before
    step k, ``betas[f, k]`` the normalized backward vector after step k-1,
    and the log scale arrays recover the unnormalized passes, so that
    log(sum_s alpha[k, s] beta[k, s]) plus the accumulated scales is the
    frame log evidence at every k.
    """

    posteriors: np.ndarray
    log_evidence: np.ndarray
    alphas: np.ndarray
    betas: np.ndarray
    log_alpha_scales: np.ndarray
    log_beta_scales: np.ndarray


def forward_backward(table, prior, patterns, start_state=0, known=None):
    """Exact per-step unit posteriors for one or many frames.

    ``patterns`` holds one pattern index per decoded step, shaped ``(n,)``
    or ``(n_frames, n)``; every frame shares the ``known`` layout (entries
    >= 0 pin a step to a known unit, -1 leaves it free) but may use its own
    ``start_state``.  Works in the linear domain with per-step
    renormalization and raises DecodingFailure when a step loses all mass.
    """
    pats = np.asarray(patterns, dtype=np.int64)
    squeeze = pats.ndim == 1
    pats = np.atleast_2d(pats)
    n_frames, n_steps = pats.shape
    n_states, n_units, _ = table.probs.shape
    prior = expand_prior(prior, n_units, table.memory)
    if known is not None:
        known = np.asarray(known, dtype=np.int64)
        if known.shape != (n_steps,):
            raise ValueError("known must give one entry per step")
    gam = _gammas(table, prior, pats, known)
    start = np.broadcast_to(np.asarray(start_state, dtype=np.int64), (n_frames,))
    keep = n_units ** (table.memory - 1)

    alphas = np.zeros((n_frames, n_steps + 1, n_states))
    log_a = np.zeros((n_frames, n_steps + 1))
    alphas[np.arange(n_frames), 0, start] = 1.0
    for k in range(n_steps):
        a = alphas[:, k].reshape(n_frames, n_units, keep)
        g = gam[:, k].reshape(n_frames, n_units, keep, n_units)
        nxt = np.einsum("fjr,fjru->fru", a, g).reshape(n_frames, n_states)
        scale = nxt.sum(axis=1)
        if not np.all(scale > 0.0) or not np.all(np.isfinite(scale)):
            raise DecodingFailure(k, "forward mass vanished")
        alphas[:, k + 1] = nxt / scale[:, None]
        log_a[:, k + 1] = log_a[:, k] + np.log(scale)

    betas = np.zeros((n_frames, n_steps + 1, n_states))
    log_b = np.zeros((n_frames, n_steps + 1))
    betas[:, n_steps] = 1.0 / n_states
    for k in range(n_steps - 1, -1, -1):
        b = betas[:, k + 1].reshape(n_frames, keep, n_units)
        g = gam[:, k].reshape(n_frames, n_units, keep, n_units)
        prv = np.einsum("fjru,fru->fjr", g, b).reshape(n_frames, n_states)
        scale = prv.sum(axis=1)
        if not np.all(scale > 0.0) or not np.all(np.isfinite(scale)):
            raise DecodingFailure(k, "backward mass vanished")
        betas[:, k] = prv / scale[:, None]
        log_b[:, k] = log_b[:, k + 1] + np.log(scale)

    post = np.zeros((n_frames, n_steps, n_units))
    for k in range(n_steps):
        a = alphas[:, k].reshape(n_frames, n_units, keep)
        g = gam[:, k].reshape(n_frames, n_units, keep, n_units)
        b = betas[:, k + 1].reshape(n_frames, keep, n_units)
        post[:, k] = np.einsum("fjr,fjru,fru->fu", a, g, b)
    totals = post.sum(axis=2)
    if not np.all(totals > 0.0):
        raise DecodingFailure(int(np.argwhere(totals <= 0.0)[0][1]), "posterior vanished")
    post /= totals[:, :, None]

    evidence = log_a[:, -1] + np.log(
        (alphas[:, -1] * betas[:, -1]).sum(axis=1) * n_states
    )
    result = ForwardBackwardResult(post, evidence, alphas, betas, log_a, log_b)
    if squeeze:
        result.posteriors = post[0]
        result.log_evidence = evidence[0]
    return result


def bcjr(table, prior, patterns, start_state=0, known=None):
    """Unit posteriors from the forward-backward pass; see forward_backward."""
    return forward_backward(table, prior, patterns, start_state, known).posteriors


_ENUM_LIMIT = 1_000_000


def brute_force_posteriors(table, prior, patterns, start_state=0, known=None):
    """Posteriors by summing over every legal unit sequence explicitly.

    Exponential in the frame length (guarded at one million sequences), so
    this is only an independent reference for the recursive detectors.
    """
    pats = np.asarray(patterns, dtype=np.int64)
    if pats.ndim != 1:
        raise ValueError("the enumeration oracle takes a single frame")
    n_steps = len(pats)
    n_states, n_units, _ = table.probs.shape
    if float(n_units) ** n_steps > _ENUM_LIMIT:
        raise ValueError("sequence count exceeds the enumeration limit")
    prior = expand_prior(prior, n_units, table.memory)
    seqs = np.indices((n_units,) * n_steps).reshape(n_steps, -1).T
    keep = n_units ** (table.memory - 1)
    state = np.full(len(seqs), int(start_state), dtype=np.int64)
    weight = np.ones(len(seqs))
    for k in range(n_steps):
        u = seqs[:, k]
        weight *= prior[state, u] * table.probs[state, u, pats[k]]
        if known is not None and known[k] >= 0:
            weight *= u == known[k]
        state = (state % keep) * n_units + u
    total = weight.sum()
    if total <= 0.0:
        raise DecodingFailure(-1, "no sequence survives enumeration")
    post = np.zeros((n_steps, n_units))
    for k in range(n_steps):
        np.add.at(post, (np.full(len(seqs), k), seqs[:, k]), weight)
    return post / post.sum(axis=1, keepdims=True)


def map_decide(posteriors, units, rtol=1e-12):
    """Argmax decisions with exact ties broken toward the weaker unit.

    Candidates within ``rtol`` (relative) of the row maximum count as tied;
    among them the unit with the smallest summed squared amplitude wins,
    and the lowest index settles any remaining tie.  This keeps decisions
    on genuinely ambiguous patterns deterministic across platforms.
    """
    p = np.asarray(posteriors, dtype=float)
    u = np.asarray(units, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    amp = (u**2).sum(axis=1)
    best = p.max(axis=-1, keepdims=True)
    tied = p >= best - rtol * best
    key = np.where(tied, amp, np.inf)
    return np.argmin(key, axis=-1)


def window_posteriors(wtable, samples, first_unit, n_units):
    """Per-unit posteriors from isolated pattern windows, uniform unit prior.

    ``samples`` is the full quantized stream of one frame; windows are cut
    around units ``first_unit .. first_unit + n_units - 1``, which must sit
    far enough from the stream edges for their windows to exist.
    """
    from .likelihood import _window_slice, pattern_index

    flat = np.asarray(samples).ravel()
    a, q = wtable.units.shape
    m = wtable.samples_per_symbol
    start, width = _window_slice(wtable.mode, m, q)
    offset = start - m
    lo = first_unit * q * m + offset
    hi = (first_unit + n_units - 1) * q * m + offset + width
    if lo < 0 or hi > len(flat):
        raise ValueError("window range leaves the sample stream")
    idx = (
        (first_unit + np.arange(n_units))[:, None] * (q * m)
        + offset
        + np.arange(width)[None, :]
    )
    pats = pattern_index(flat[idx])
    post = wtable.probs[:, pats].T
    totals = post.sum(axis=1, keepdims=True)
    if np.any(totals <= 0.0):
        raise DecodingFailure(int(np.argwhere(totals <= 0.0)[0][0]), "window posterior vanished")
    return post / totals


def window_detect(wtable, samples, first_unit, n_units):
    """Hard unit decisions from window_posteriors via map_decide."""
    return map_decide(window_posteriors(wtable, samples, first_unit, n_units), wtable.units)
