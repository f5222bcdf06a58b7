"""Minimal SVG line plots: polylines, ticks, legend. No plotting dependency.

Output is deterministic text so plot files can be diffed across runs.
"""

import math

import numpy as np

PALETTE = ("#1f6f8b", "#c0504d", "#5b9a46", "#8064a2", "#e6a23c", "#4c4c4c")

_MARGIN_L = 72
_MARGIN_R = 24
_MARGIN_T = 44
_MARGIN_B = 56


def _fmt_tick(v: float) -> str:
    return f"{v:.4g}"


def _px(v: float) -> str:
    return f"{v:.2f}"


def _linear_ticks(lo: float, hi: float, count: int = 5):
    return list(np.linspace(lo, hi, count))


def _log_ticks(lo: float, hi: float):
    first = math.floor(math.log10(lo) + 1e-12)
    last = math.ceil(math.log10(hi) - 1e-12)
    ticks = [10.0**e for e in range(first, last + 1)]
    if len(ticks) > 8:
        step = (len(ticks) + 7) // 8
        ticks = ticks[::step]
    return ticks


def _axis_range(values, log: bool):
    vals = [v for v in values if math.isfinite(v) and (not log or v > 0)]
    if not vals:
        return (0.1, 1.0) if log else (0.0, 1.0)
    lo, hi = min(vals), max(vals)
    if log:
        if lo == hi:
            lo, hi = lo / 2.0, hi * 2.0
        return lo, hi
    if lo == hi:
        pad = 0.5 if lo == 0 else abs(lo) * 0.1
        return lo - pad, hi + pad
    pad = (hi - lo) * 0.05
    return lo - pad, hi + pad


def line_plot(
    series,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    logx: bool = False,
    logy: bool = False,
    width: int = 720,
    height: int = 480,
) -> str:
    """Render (label, xs, ys) triples to an SVG document string.

    Points that are non-finite, or non-positive on a log axis, split the
    polyline instead of being clamped.
    """
    all_x = [x for _, xs, _ in series for x in np.asarray(xs, dtype=float)]
    all_y = [y for _, _, ys in series for y in np.asarray(ys, dtype=float)]
    x_lo, x_hi = _axis_range(all_x, logx)
    y_lo, y_hi = _axis_range(all_y, logy)

    def tx(v: float) -> float:
        a, b = (math.log10(x_lo), math.log10(x_hi)) if logx else (x_lo, x_hi)
        t = math.log10(v) if logx else v
        return _MARGIN_L + (t - a) / (b - a) * (width - _MARGIN_L - _MARGIN_R)

    def ty(v: float) -> float:
        a, b = (math.log10(y_lo), math.log10(y_hi)) if logy else (y_lo, y_hi)
        t = math.log10(v) if logy else v
        return height - _MARGIN_B - (t - a) / (b - a) * (height - _MARGIN_T - _MARGIN_B)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(
            f'<text x="{width // 2}" y="24" text-anchor="middle" font-size="15">{title}</text>'
        )

    x_ticks = _log_ticks(x_lo, x_hi) if logx else _linear_ticks(x_lo, x_hi)
    y_ticks = _log_ticks(y_lo, y_hi) if logy else _linear_ticks(y_lo, y_hi)
    y0, y1 = height - _MARGIN_B, _MARGIN_T
    x0, x1 = _MARGIN_L, width - _MARGIN_R
    for v in x_ticks:
        px = tx(v)
        out.append(
            f'<line x1="{_px(px)}" y1="{y1}" x2="{_px(px)}" y2="{y0}" stroke="#dddddd"/>'
        )
        out.append(
            f'<text x="{_px(px)}" y="{y0 + 18}" text-anchor="middle">{_fmt_tick(v)}</text>'
        )
    for v in y_ticks:
        py = ty(v)
        out.append(
            f'<line x1="{x0}" y1="{_px(py)}" x2="{x1}" y2="{_px(py)}" stroke="#dddddd"/>'
        )
        out.append(
            f'<text x="{x0 - 6}" y="{_px(py + 4)}" text-anchor="end">{_fmt_tick(v)}</text>'
        )
    out.append(f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" '
               'fill="none" stroke="#333333"/>')
    if xlabel:
        out.append(
            f'<text x="{(x0 + x1) // 2}" y="{height - 14}" text-anchor="middle">{xlabel}</text>'
        )
    if ylabel:
        out.append(
            f'<text x="18" y="{(y0 + y1) // 2}" text-anchor="middle" '
            f'transform="rotate(-90 18 {(y0 + y1) // 2})">{ylabel}</text>'
        )

    for idx, (label, xs, ys) in enumerate(series):
        color = PALETTE[idx % len(PALETTE)]
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        run = []
        segments = [run]
        for xv, yv in zip(xs, ys):
            ok = math.isfinite(xv) and math.isfinite(yv)
            if ok and logx and xv <= 0:
                ok = False
            if ok and logy and yv <= 0:
                ok = False
            if not ok:
                run = []
                segments.append(run)
                continue
            run.append((tx(xv), ty(yv)))
        for seg in segments:
            if len(seg) == 1:
                out.append(
                    f'<circle cx="{_px(seg[0][0])}" cy="{_px(seg[0][1])}" r="3" fill="{color}"/>'
                )
            elif seg:
                pts = " ".join(f"{_px(a)},{_px(b)}" for a, b in seg)
                out.append(
                    f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
                )
        ly = _MARGIN_T + 14 + 16 * idx
        lx = x1 - 150
        out.append(f'<rect x="{lx}" y="{ly - 9}" width="10" height="10" fill="{color}"/>')
        out.append(f'<text x="{lx + 16}" y="{ly}">{label}</text>')

    out.append("</svg>")
    return "\n".join(out) + "\n"


def save_plot(path, series, **kwargs) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(line_plot(series, **kwargs))
