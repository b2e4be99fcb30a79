"""Self-contained SVG line plots and histograms (no plotting library)."""
from __future__ import annotations

import math
import os
from xml.sax.saxutils import escape

import numpy as np

W, H = 640, 400
MARGIN = dict(left=70, right=20, top=40, bottom=50)


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _frame(title: str, xlabel: str, ylabel: str, body: list[str], xr, yr) -> str:
    L, R, Tm, B = MARGIN["left"], W - MARGIN["right"], MARGIN["top"], H - MARGIN["bottom"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
           f'<rect x="{L}" y="{Tm}" width="{R - L}" height="{B - Tm}" fill="none" stroke="black"/>']
    if xr is not None:
        for k in range(5):
            fx = k / 4
            x = L + fx * (R - L)
            y = B - fx * (B - Tm)
            out.append(f'<text x="{x:.2f}" y="{B + 16}" text-anchor="middle" font-size="11">'
                       f"{_fmt(xr[0] + fx * (xr[1] - xr[0]))}</text>")
            out.append(f'<text x="{L - 6}" y="{y + 4:.2f}" text-anchor="end" font-size="11">'
                       f"{_fmt(yr[0] + fx * (yr[1] - yr[0]))}</text>")
    out.append(f'<text x="{(L + R) / 2}" y="{H - 12}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{(Tm + B) / 2}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 16 {(Tm + B) / 2})">{escape(ylabel)}</text>')
    out += body
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _range(lo: float, hi: float) -> tuple[float, float]:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return 0.0, 1.0
    if hi - lo <= 1e-15 * max(1.0, abs(hi)):
        pad = 0.5 if hi == 0 else 0.05 * abs(hi)
        return lo - pad, hi + pad
    pad = 0.04 * (hi - lo)
    return lo - pad, hi + pad


def _mapper(xr, yr):
    L, R, Tm, B = MARGIN["left"], W - MARGIN["right"], MARGIN["top"], H - MARGIN["bottom"]

    def f(x, y):
        return (L + (np.asarray(x) - xr[0]) / (xr[1] - xr[0]) * (R - L),
                B - (np.asarray(y) - yr[0]) / (yr[1] - yr[0]) * (B - Tm))
    return f


def _points(px, py) -> str:
    return " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))


def _decimate(n: int, limit: int = 2000) -> np.ndarray:
    return np.unique(np.linspace(0, n - 1, min(n, limit)).round().astype(int))


def empty_plot(title: str, caption: str) -> str:
    body = [f'<text x="{W / 2}" y="{H / 2}" text-anchor="middle" font-size="13" fill="gray">'
            f"{escape(caption)}</text>"]
    return _frame(title, "", "", body, None, None)


def line_plot(t, y, title: str = "output voltage", xlabel: str = "t [s]", ylabel: str = "v_o [V]") -> str:
    """One trace as a single polyline."""
    t, y = np.asarray(t, dtype=float), np.asarray(y, dtype=float)
    if t.size == 0:
        return empty_plot(title, "no samples")
    xr, yr = _range(t.min(), t.max()), _range(y.min(), y.max())
    f = _mapper(xr, yr)
    i = _decimate(t.size)
    px, py = f(t[i], y[i])
    body = [f'<polyline fill="none" stroke="steelblue" stroke-width="1.2" points="{_points(px, py)}"/>']
    return _frame(title, xlabel, ylabel, body, xr, yr)


def ensemble_plot(t, Y, title: str = "output voltage ensemble", xlabel: str = "t [s]",
                  ylabel: str = "v_o [V]") -> str:
    """Min/max envelope and median of many traces sampled on a common time axis."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    t = np.asarray(t, dtype=float)
    if Y.size == 0 or t.size == 0:
        return empty_plot(title, "no traces")
    if Y.shape[0] == 1:
        return line_plot(t, Y[0], title, xlabel, ylabel)
    lo, hi, med = Y.min(axis=0), Y.max(axis=0), np.median(Y, axis=0)
    xr, yr = _range(t.min(), t.max()), _range(lo.min(), hi.max())
    f = _mapper(xr, yr)
    i = _decimate(t.size)
    ux, uy = f(t[i], hi[i])
    lx, ly = f(t[i][::-1], lo[i][::-1])
    mx, my = f(t[i], med[i])
    body = [f'<polygon fill="lightsteelblue" stroke="none" points="{_points(ux, uy)} {_points(lx, ly)}"/>',
            f'<polyline fill="none" stroke="navy" stroke-width="1.2" points="{_points(mx, my)}"/>',
            f'<text x="{W - MARGIN["right"] - 4}" y="{MARGIN["top"] + 14}" text-anchor="end" font-size="11">'
            f"{Y.shape[0]} runs: min/max envelope, median</text>"]
    return _frame(title, xlabel, ylabel, body, xr, yr)


def histogram(values, title: str, xlabel: str, bins: int = 30) -> str:
    v = np.asarray([x for x in values if x is not None and math.isfinite(x)], dtype=float)
    if v.size == 0:
        return empty_plot(title, "no data")
    counts, edges = np.histogram(v, bins=bins, range=_range(v.min(), v.max()))
    xr, yr = (edges[0], edges[-1]), (0.0, max(1.0, counts.max() * 1.05))
    f = _mapper(xr, yr)
    body = []
    for c, a, b in zip(counts, edges[:-1], edges[1:]):
        x0, y0 = f(a, c)
        x1, y1 = f(b, 0.0)
        body.append(f'<rect x="{x0:.2f}" y="{y0:.2f}" width="{x1 - x0:.2f}" height="{y1 - y0:.2f}" '
                    f'fill="steelblue" stroke="white" stroke-width="0.5"/>')
    return _frame(title, xlabel, "runs", body, xr, yr)


def emit_plots(out_dir: str, traces=None, reports=None, t=None) -> list[str]:
    """Write ``vo_ensemble.svg`` (or ``vo.svg`` for one trace) and one histogram per metric."""
    os.makedirs(out_dir, exist_ok=True)
    files = {}
    traces = [] if traces is None else list(traces)
    if len(traces) == 1:
        files["vo.svg"] = line_plot(t, traces[0])
    else:
        files["vo_ensemble.svg"] = ensemble_plot(t if t is not None else [], traces)
    for rep in reports or ():
        for k in ("undershoot", "settling_cycles", "steady_state_error"):
            vals = [getattr(r, k) for r in rep.runs if r is not None]
            files[f"{rep.scenario}_{k}.svg"] = histogram(vals, f"{rep.scenario}: {k}", k)
    paths = []
    for name, text in files.items():
        path = os.path.join(out_dir, name)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
        paths.append(path)
    return paths
