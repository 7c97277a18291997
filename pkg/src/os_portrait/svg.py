"""Static SVG spectral portraits. Output depends only on the input data."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .eigensolve import Spectrum
from .graph import LimitGraph
from .errors import IoError
from .persist import _atomic_write

WIDTH, HEIGHT = 820, 640
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 80, 150, 30, 60
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2")
CURVE_COLOR = "#222222"
VERTEX_COLOR = "#b8860b"


def nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(1, target)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step - 1e-9)
    ticks = []
    k = start
    while k * step <= hi + 1e-9 * step:
        ticks.append(round(k * step, 12) + 0.0)
        k += 1
    return ticks


def _tick_label(v: float) -> str:
    s = f"{v:.6g}"
    return "0" if s in ("-0", "0") else s


def _bounds(points: np.ndarray, window):
    if window is not None:
        return window
    z = np.asarray(points, dtype=complex)
    re0, re1, im0, im1 = z.real.min(), z.real.max(), z.imag.min(), z.imag.max()
    pad_re = 0.05 * (re1 - re0) or 0.1
    pad_im = 0.05 * (im1 - im0) or 0.1
    return (re0 - pad_re, re1 + pad_re, im0 - pad_im, im1 + pad_im)


def render_svg(spectra: Sequence[Spectrum], graph: LimitGraph | None, window=None, conjugate: bool = False) -> str:
    spectra = sorted(spectra or (), key=lambda s: s.reynolds)
    has_graph = graph is not None and not graph.is_empty
    if not spectra and not has_graph:
        raise ValueError("nothing to draw: no spectra and no graph")
    g = graph if has_graph else None
    # the conjugate view mirrors everything into the upper half-plane
    flip = -1.0 if conjugate else 1.0
    if conjugate and window is not None:
        window = (window[0], window[1], -window[3], -window[2])
    spectra_vals = [np.conj(s.values) if conjugate else s.values for s in spectra]
    curves = [] if g is None else [[complex(z.real, flip * z.imag) for z in c.points] for c in g.curves]
    vertices = [] if g is None else [complex(z.real, flip * z.imag) for z in g.vertices]
    everything = np.concatenate([np.asarray(v, dtype=complex) for v in spectra_vals + curves + [vertices]])
    re0, re1, im0, im1 = _bounds(everything, window)
    pw, ph = WIDTH - MARGIN_L - MARGIN_R, HEIGHT - MARGIN_T - MARGIN_B

    def X(x):
        return MARGIN_L + (x - re0) / (re1 - re0) * pw

    def Y(y):
        return MARGIN_T + (im1 - y) / (im1 - im0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" '
        'font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<defs><clipPath id="plot"><rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}"/></clipPath></defs>',
    ]
    # axes and ticks
    out.append(f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for t in nice_ticks(re0, re1):
        x = X(t)
        out.append(f'<line x1="{x:.2f}" y1="{MARGIN_T + ph}" x2="{x:.2f}" y2="{MARGIN_T + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{MARGIN_T + ph + 19}" text-anchor="middle">{_tick_label(t)}</text>')
    for t in nice_ticks(im0, im1):
        y = Y(t)
        out.append(f'<line x1="{MARGIN_L - 5}" y1="{y:.2f}" x2="{MARGIN_L}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN_L - 8}" y="{y + 4:.2f}" text-anchor="end">{_tick_label(t)}</text>')
    out.append(f'<text x="{MARGIN_L + pw / 2:.2f}" y="{HEIGHT - 15}" text-anchor="middle">Re &#955;</text>')
    out.append(
        f'<text x="20" y="{MARGIN_T + ph / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 20 {MARGIN_T + ph / 2:.2f})">Im &#955;</text>'
    )

    out.append('<g clip-path="url(#plot)">')
    if g is not None:
        for c, line in zip(g.curves, curves):
            pts = " ".join(f"{X(z.real):.2f},{Y(z.imag):.2f}" for z in line)
            width = 1.2 * c.multiplicity
            out.append(
                f'<polyline points="{pts}" fill="none" stroke="{CURVE_COLOR}" stroke-width="{width:.1f}">'
                f"<title>{escape(' + '.join(c.condition_ids))}</title></polyline>"
            )
        for v in vertices:
            x, y = X(v.real), Y(v.imag)
            out.append(
                f'<path d="M{x - 5:.2f},{y - 5:.2f}L{x + 5:.2f},{y + 5:.2f}M{x - 5:.2f},{y + 5:.2f}L{x + 5:.2f},{y - 5:.2f}" '
                f'stroke="{VERTEX_COLOR}" stroke-width="2"/>'
            )
    for k, vals in enumerate(spectra_vals):
        color = PALETTE[k % len(PALETTE)]
        out.append(f'<g fill="{color}">')
        for z in vals:
            if re0 <= z.real <= re1 and im0 <= z.imag <= im1:
                out.append(f'<circle cx="{X(z.real):.2f}" cy="{Y(z.imag):.2f}" r="2.2"/>')
        out.append("</g>")
    out.append("</g>")

    # legend
    lx, ly = WIDTH - MARGIN_R + 15, MARGIN_T + 10
    for k, s in enumerate(spectra):
        color = PALETTE[k % len(PALETTE)]
        y = ly + 18 * k
        out.append(f'<circle cx="{lx + 5}" cy="{y}" r="4" fill="{color}"/>')
        out.append(f'<text x="{lx + 15}" y="{y + 4}">R = {_tick_label(s.reynolds)}</text>')
    if g is not None:
        y = ly + 18 * len(spectra)
        out.append(f'<line x1="{lx}" y1="{y}" x2="{lx + 10}" y2="{y}" stroke="{CURVE_COLOR}" stroke-width="1.5"/>')
        out.append(f'<text x="{lx + 15}" y="{y + 4}">limit curves</text>')
        if g.vertices:
            y += 18
            out.append(
                f'<path d="M{lx + 1},{y - 4}L{lx + 9},{y + 4}M{lx + 1},{y + 4}L{lx + 9},{y - 4}" '
                f'stroke="{VERTEX_COLOR}" stroke-width="2"/>'
            )
            out.append(f'<text x="{lx + 15}" y="{y + 4}">vertices</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(spectra: Sequence[Spectrum], graph: LimitGraph | None, out_path, window=None, conjugate: bool = False):
    text = render_svg(spectra, graph, window, conjugate)
    try:
        _atomic_write(Path(out_path), text)
    except OSError as err:
        raise IoError(f"cannot write {out_path}: {err}") from err
