"""Minimal SVG rendering of spectra (no plotting library needed).

Frequency runs right to left, following the usual presentation of NMR
spectra.  Output is a plain string so the CLI can write byte-identical
artifacts.
"""

from __future__ import annotations

import math

import numpy as np

from .spectrometer import Spectrum

__all__ = ["spectrum_svg"]


def _ticks(lo: float, hi: float, target: int = 8) -> list[float]:
    """Round tick positions covering [lo, hi]."""
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        step = mult * mag
        if step >= raw:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(v) < 1e-12 else v)
        v += step
    return ticks


def spectrum_svg(
    spectrum: Spectrum,
    width: int = 900,
    height: int = 360,
    title: str = "",
) -> str:
    """Render amplitude vs frequency as a standalone SVG document."""
    freqs = np.asarray(spectrum.freqs_hz, dtype=float)
    amp = np.asarray(spectrum.amplitude, dtype=float)
    if freqs.size == 0:
        raise ValueError("cannot render an empty spectrum")

    margin_l, margin_r, margin_t, margin_b = 60, 20, 30, 45
    plot_w = width - margin_l - margin_r
    plot_h = height - margin_t - margin_b

    fmin, fmax = float(freqs.min()), float(freqs.max())
    amax = float(np.max(np.abs(amp)))
    if amax == 0.0:
        amax = 1.0
    ymin, ymax = -1.05 * amax, 1.05 * amax

    def x_of(f: float) -> float:
        # high frequency on the left
        frac = (fmax - f) / (fmax - fmin) if fmax > fmin else 0.5
        return margin_l + frac * plot_w

    def y_of(a: float) -> float:
        frac = (ymax - a) / (ymax - ymin)
        return margin_t + frac * plot_h

    pts = " ".join(f"{x_of(f):.2f},{y_of(a):.2f}" for f, a in zip(freqs, amp))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width / 2:.0f}" y="18" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13">{title}</text>'
        )
    zero_y = y_of(0.0)
    parts.append(
        f'<line x1="{margin_l}" y1="{zero_y:.2f}" x2="{margin_l + plot_w}" '
        f'y2="{zero_y:.2f}" stroke="#bbbbbb" stroke-width="1"/>'
    )
    for tick in _ticks(fmin, fmax):
        x = x_of(tick)
        parts.append(
            f'<line x1="{x:.2f}" y1="{margin_t + plot_h}" x2="{x:.2f}" '
            f'y2="{margin_t + plot_h + 5}" stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{margin_t + plot_h + 20}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{tick:g}</text>'
        )
    parts.append(
        f'<text x="{margin_l + plot_w / 2:.0f}" y="{height - 8}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="12">'
        "frequency (Hz)</text>"
    )
    parts.append(
        f'<rect x="{margin_l}" y="{margin_t}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="black" stroke-width="1"/>'
    )
    parts.append(
        f'<polyline points="{pts}" fill="none" stroke="#00308f" stroke-width="1.2"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
