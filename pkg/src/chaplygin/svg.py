"""Three-panel SVG line plot of the shape functions ``f``, ``g``, ``h``.

Written by hand so the bytes depend only on the table: coordinates are
printed with a fixed number of decimals and there is no timestamp, random
id or external reference.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from .errors import DomainError

WIDTH, HEIGHT = 800, 1500
PANEL_HEIGHT = HEIGHT / 3
MARGIN_LEFT, MARGIN_RIGHT = 90, 30
MARGIN_TOP, MARGIN_BOTTOM = 60, 60
TICKS = 10
# polylines longer than this are reduced to a per-pixel min/max envelope
MAX_POINTS = 4 * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)

_PANELS = (("f", 1, "#1f77b4"), ("g", 2, "#d62728"), ("h", 3, "#2ca02c"))


def _nice(x: float, round_: bool) -> float:
    """Nice number (1, 2, 5 times a power of ten) near ``x``."""
    expv = math.floor(math.log10(x))
    frac = x / 10**expv
    if round_:
        nf = 1 if frac < 1.5 else 2 if frac < 3 else 5 if frac < 7 else 10
    else:
        nf = 1 if frac <= 1 else 2 if frac <= 2 else 5 if frac <= 5 else 10
    return nf * 10**expv


def nice_ticks(lo: float, hi: float, count: int = TICKS):
    """Tick positions covering ``[lo, hi]`` with about ``count`` intervals.

    Returns ``(ticks, step)``; the first and last ticks bracket the data.
    """
    # flat or numerically flat data: pad around the midpoint
    if not hi - lo > max(1e-12 * max(abs(lo), abs(hi)), 1e-200):
        mid = 0.5 * (lo + hi)
        pad = abs(mid) * 0.1 if abs(mid) > 1e-200 else 1.0
        lo, hi = mid - pad, mid + pad
    step = _nice(_nice(hi - lo, False) / count, True)
    first = math.floor(lo / step)
    last = math.ceil(hi / step)
    return [i * step for i in range(first, last + 1)], step


def _label(v: float, step: float) -> str:
    digits = max(0, -math.floor(math.log10(step)))
    if abs(v) < step * 1e-9:
        v = 0.0
    if abs(v) >= 1e5 or digits > 4:
        return f"{v:.3g}"
    return f"{v:.{digits}f}"


def _envelope(x, y, px):
    """Keep first, min, max and last sample of every pixel column."""
    col = np.floor(px).astype(np.int64)
    keep = np.zeros(len(x), dtype=bool)
    starts = np.flatnonzero(np.r_[True, col[1:] != col[:-1]])
    ends = np.r_[starts[1:], len(x)]
    for a, b in zip(starts, ends):
        seg = y[a:b]
        keep[a] = keep[b - 1] = True
        keep[a + int(np.argmin(seg))] = True
        keep[a + int(np.argmax(seg))] = True
    return x[keep], y[keep]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render_svg(table, exp=None, eos=None, title: str | None = None) -> str:
    """SVG document with ``f``, ``g``, ``h`` against ``eta`` in stacked panels.

    Parameters
    ----------
    table : SolutionTable
        Needs at least two rows.
    exp, eos : optional
        Used for the title (variant and ``n``).
    title : str, optional
        Overrides the generated title.

    Raises
    ------
    DomainError
        If the table has fewer than two rows or non-finite values.
    """
    rows = np.asarray(table.rows, dtype=float)
    if len(rows) < 2:
        raise DomainError("an SVG plot needs at least two rows")
    if not np.all(np.isfinite(rows[:, :4])):
        raise DomainError("cannot plot non-finite shape values")
    if title is None:
        parts = []
        if exp is not None:
            parts.append(f"variant {exp.variant.value}")
        if eos is not None:
            parts.append(f"n = {float(eos.n):g}")
            parts.append(f"A = {float(eos.A):g}")
        title = "Shape functions" + (" (" + ", ".join(parts) + ")" if parts else "")

    eta = rows[:, 0]
    xt, xstep = nice_ticks(float(eta.min()), float(eta.max()))
    x0, x1 = MARGIN_LEFT, WIDTH - MARGIN_RIGHT

    def sx(v):
        return x0 + (v - xt[0]) / (xt[-1] - xt[0]) * (x1 - x0)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        (f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
         f'viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}">'),
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        (f'<text x="{WIDTH / 2:.0f}" y="28" text-anchor="middle" font-family="sans-serif" '
         f'font-size="20">{escape(title)}</text>'),
    ]
    for k, (name, col, color) in enumerate(_PANELS):
        top = k * PANEL_HEIGHT + MARGIN_TOP
        bottom = (k + 1) * PANEL_HEIGHT - MARGIN_BOTTOM
        y = rows[:, col]
        lo, hi = float(y.min()), float(y.max())
        if name == "f":
            # keep the collapse threshold f = 0 in view
            lo, hi = min(lo, 0.0), max(hi, 0.0)
        yt, ystep = nice_ticks(lo, hi)

        def sy(v, yt=yt, top=top, bottom=bottom):
            return bottom - (v - yt[0]) / (yt[-1] - yt[0]) * (bottom - top)

        out.append(f'<g id="panel-{name}">')
        out.append(f'<path d="M{x0} {_fmt(top)}V{_fmt(bottom)}H{x1}" fill="none" '
                   f'stroke="black" stroke-width="1"/>')
        ticks = []
        for v in xt:
            px = sx(v)
            ticks.append(f"M{_fmt(px)} {_fmt(bottom)}v6")
            out.append(f'<text x="{_fmt(px)}" y="{_fmt(bottom + 22)}" text-anchor="middle" '
                       f'font-family="sans-serif" font-size="12">{_label(v, xstep)}</text>')
        for v in yt:
            py = sy(v)
            ticks.append(f"M{x0} {_fmt(py)}h-6")
            out.append(f'<text x="{x0 - 10}" y="{_fmt(py + 4)}" text-anchor="end" '
                       f'font-family="sans-serif" font-size="12">{_label(v, ystep)}</text>')
        out.append(f'<path d="{"".join(ticks)}" fill="none" stroke="black" stroke-width="1"/>')
        if yt[0] < 0 < yt[-1] or (name == "f" and yt[0] <= 0 <= yt[-1]):
            pz = _fmt(sy(0.0))
            out.append(f'<path class="zero-line" d="M{x0} {pz}H{x1}" fill="none" '
                       f'stroke="gray" stroke-width="1" stroke-dasharray="6 4"/>')
        px = sx(eta)
        xs, ys = (eta, y) if len(eta) <= MAX_POINTS else _envelope(eta, y, px)
        pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(xs, ys))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5"/>')
        out.append(f'<text x="22" y="{_fmt((top + bottom) / 2)}" text-anchor="middle" '
                   f'font-family="serif" font-style="italic" font-size="18" '
                   f'transform="rotate(-90 22 {_fmt((top + bottom) / 2)})">'
                   f'{name}(&#951;)</text>')
        out.append(f'<text x="{(x0 + x1) / 2:.0f}" y="{_fmt(bottom + 44)}" '
                   f'text-anchor="middle" font-family="serif" font-style="italic" '
                   f'font-size="16">&#951;</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
