"""Rendering of error-rate curves to image files.

Uses the non-interactive Agg backend so figures render identically on
headless machines; every curve is drawn with its 95% confidence bars on a
logarithmic rate axis, with exact zeros clamped to the axis floor.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_FLOOR = 1e-6


def render_ser_curves(curves, path, title=None):
    """Plot one or more ``{label: points}`` SER curves and save to path."""
    fig, ax = plt.subplots(figsize=(6.8, 4.6), layout="constrained")
    for label, points in curves.items():
        snr = [p.snr_db for p in points]
        ser = [max(p.ser, _FLOOR) for p in points]
        bars = [
            (min(p.ci95, max(p.ser - _FLOOR / 2, 0.0)), p.ci95) for p in points
        ]
        low = [b[0] for b in bars]
        high = [b[1] for b in bars]
        ax.errorbar(snr, ser, yerr=[low, high], marker="o", markersize=4, capsize=3, label=label)
    ax.set_yscale("log")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("symbol error rate")
    ax.set_ylim(bottom=_FLOOR / 2)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
