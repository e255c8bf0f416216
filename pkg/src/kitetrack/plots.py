"""Minimal deterministic SVG line plots.

Only polylines and text are emitted, with fixed number formatting, so the
same input always produces the same bytes.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f",
          "#bcbd22", "#17becf")


class MissingColumnsError(KeyError):
    pass


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _segments(x, y, wrap: Optional[float]) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split a line at non-finite points and at jumps larger than ``wrap``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(x) & np.isfinite(y)
    breaks = ~ok
    if wrap is not None and len(x) > 1:
        jump = np.zeros(len(x), dtype=bool)
        jump[1:] = np.abs(np.diff(x)) > wrap
        breaks = breaks | jump
    segs, start = [], 0
    for i in range(len(x) + 1):
        if i == len(x) or breaks[i]:
            idx = np.arange(start, i)
            idx = idx[ok[idx]]
            if len(idx) > 1:
                segs.append((x[idx], y[idx]))
            start = i if (i < len(x) and ok[i]) else i + 1
    return segs


def _nice_range(values: Sequence[np.ndarray]) -> tuple[float, float]:
    finite = [v[np.isfinite(v)] for v in values if np.size(v)]
    finite = [v for v in finite if v.size]
    if not finite:
        return 0.0, 1.0
    lo = float(min(v.min() for v in finite))
    hi = float(max(v.max() for v in finite))
    if hi - lo < 1e-12:
        pad = max(abs(lo) * 0.05, 1e-3)
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def line_plot(lines: Sequence[tuple], title: str, xlabel: str, ylabel: str, width: int = 640,
              height: int = 400, wrap: Optional[float] = None, equal_aspect: bool = False) -> str:
    """SVG text for ``lines = [(x, y, label), ...]``.

    ``wrap`` breaks a line where ``x`` jumps by more than the given amount
    (used for the azimuth seam).
    """
    ml, mr, mt, mb = 70, 20, 40, 50
    pw, ph = width - ml - mr, height - mt - mb
    xs = [np.asarray(l[0], dtype=float) for l in lines]
    ys = [np.asarray(l[1], dtype=float) for l in lines]
    x0, x1 = _nice_range(xs)
    y0, y1 = _nice_range(ys)
    if equal_aspect:
        sx, sy = (x1 - x0) / pw, (y1 - y0) / ph
        s = max(sx, sy)
        cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        x0, x1 = cx - 0.5 * s * pw, cx + 0.5 * s * pw
        y0, y1 = cy - 0.5 * s * ph, cy + 0.5 * s * ph

    def px(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def py(y):
        return mt + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-family="sans-serif" '
           f'font-size="15">{_esc(title)}</text>',
           f'<polyline fill="none" stroke="black" stroke-width="1" points="{ml},{mt} {ml},{mt + ph} '
           f'{ml + pw},{mt + ph}"/>']
    for i in range(5):
        xv = x0 + (x1 - x0) * i / 4
        yv = y0 + (y1 - y0) * i / 4
        out.append(f'<text x="{_fmt(px(xv))}" y="{mt + ph + 16}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="11">{xv:.4g}</text>')
        out.append(f'<text x="{ml - 6}" y="{_fmt(py(yv) + 4)}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11">{yv:.4g}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 10}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="13">{_esc(xlabel)}</text>')
    out.append(f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="13" transform="rotate(-90 16 {mt + ph / 2:.1f})">{_esc(ylabel)}</text>')
    for n, (x, y, label) in enumerate(zip(xs, ys, [l[2] for l in lines])):
        color = COLORS[n % len(COLORS)]
        for sx_, sy_ in _segments(x, y, wrap):
            pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(sx_, sy_))
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        ly = mt + 14 + 16 * n
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" '
                   f'points="{ml + pw - 120},{ly - 4} {ml + pw - 100},{ly - 4}"/>')
        out.append(f'<text x="{ml + pw - 95}" y="{ly}" font-family="sans-serif" '
                   f'font-size="11">{_esc(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _require(series: dict, names: Sequence[str]) -> None:
    missing = [n for n in names if n not in series]
    if missing:
        raise MissingColumnsError(f"missing series columns: {', '.join(missing)}")


def _signed_azimuth(v):
    return np.degrees((np.asarray(v, dtype=float) + math.pi) % (2.0 * math.pi) - math.pi)


def trajectory_plot(series: dict) -> str:
    """Projected path and target point on the azimuth/elevation chart."""
    _require(series, ("v", "w", "v_t", "w_t"))
    return line_plot([(_signed_azimuth(series["v"]), np.degrees(series["w"]), "kite"),
                      (_signed_azimuth(series["v_t"]), np.degrees(series["w_t"]), "target")],
                     "Projected trajectory", "azimuth v [deg]", "elevation w [deg]", wrap=180.0,
                     equal_aspect=True)


def reference_plot(table: np.ndarray) -> str:
    """Reference path from columns ``s, v, w, theta``."""
    table = np.asarray(table, dtype=float).reshape(-1, 4)
    return line_plot([(_signed_azimuth(table[:, 1]), np.degrees(table[:, 2]), "reference")],
                     "Reference figure eight", "azimuth v [deg]", "elevation w [deg]", wrap=180.0,
                     equal_aspect=True)


def control_plot(series: dict) -> str:
    _require(series, ("t", "u"))
    return line_plot([(series["t"], series["u"], "u")], "Steering input", "t [s]", "u [rad]")


def weights_plot(weights: dict, axis: str = "y") -> str:
    """One line per weight of the given axis from a ``weights.csv`` table."""
    _require(weights, ("t",))
    names = sorted((k for k in weights if k.startswith(f"w_{axis}_")), key=lambda k: int(k.rsplit("_", 1)[1]))
    return line_plot([(weights["t"], weights[k], k) for k in names],
                     f"Control-derivative weights ({axis} axis)", "t [s]", "weight")


def sweep_plot(table: Sequence[tuple]) -> str:
    """``J`` against turbulence intensity, one line per correlation rate.

    ``table`` rows are ``(sigma, delta, mean_J, ...)``.
    """
    rows = [tuple(r) for r in table]
    deltas = sorted({r[1] for r in rows})
    lines = []
    for d in deltas:
        pts = sorted((r[0], r[2]) for r in rows if r[1] == d)
        lines.append(([p[0] for p in pts], [p[1] for p in pts], f"delta = {d:g} 1/s"))
    return line_plot(lines, "Mean tracking error", "sigma [m/s]", "J")


def emit_plots(run_dir) -> list[Path]:
    """Write the SVG plots for a run directory containing ``series.csv``."""
    from .experiment import read_table

    run_dir = Path(run_dir)
    series_path = run_dir / "series.csv"
    if not series_path.exists():
        raise FileNotFoundError(f"{series_path} does not exist")
    series = read_table(series_path)
    written = []
    for name, svg in (("trajectory.svg", trajectory_plot(series)), ("control.svg", control_plot(series))):
        (run_dir / name).write_text(svg)
        written.append(run_dir / name)
    if (run_dir / "weights.csv").exists():
        (run_dir / "weights.svg").write_text(weights_plot(read_table(run_dir / "weights.csv")))
        written.append(run_dir / "weights.svg")
    return written
