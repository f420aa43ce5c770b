"""Small, dependency-free writers: CSV tables, canonical JSON and line-plot SVGs.

Everything is formatted deterministically (fixed float formatting, sorted
JSON keys) so reruns produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np


def fmt(v) -> str:
    """Round-trippable, platform-independent text for a number."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[list, np.ndarray]:
    """Header and a float array of the body (all columns numeric)."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return header, np.array([[float(v) for v in r] for r in body], dtype=float).reshape(len(body), len(header))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else fmt(v)
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"]


def svg_lineplot(series, title: str = "", xlabel: str = "", ylabel: str = "", logy: bool = False,
                 width: int = 640, height: int = 400, hline: float = None) -> str:
    """Minimal SVG line chart.  `series` is a list of (label, x, y)."""
    pad_l, pad_r, pad_t, pad_b = 70, 20, 30, 45
    xs = np.concatenate([np.asarray(s[1], float) for s in series]) if series else np.array([0.0, 1.0])
    ys = np.concatenate([np.asarray(s[2], float) for s in series]) if series else np.array([0.0, 1.0])
    if logy:
        ys = np.log10(ys[ys > 0]) if np.any(ys > 0) else np.array([0.0])
    if hline is not None:
        ys = np.append(ys, math.log10(hline) if logy else hline)
    ok = np.isfinite(xs)
    x0, x1 = (float(xs[ok].min()), float(xs[ok].max())) if ok.any() else (0.0, 1.0)
    ok = np.isfinite(ys)
    y0, y1 = (float(ys[ok].min()), float(ys[ok].max())) if ok.any() else (0.0, 1.0)
    if x1 <= x0:
        x1 = x0 + 1.0
    if y1 <= y0:
        y1 = y0 + 1.0
    W, H = width - pad_l - pad_r, height - pad_t - pad_b

    def px(x):
        return pad_l + (x - x0) / (x1 - x0) * W

    def py(y):
        return pad_t + H - (y - y0) / (y1 - y0) * H

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{pad_l}" y="{pad_t}" width="{W}" height="{H}" fill="none" stroke="black"/>',
           f'<text x="{width / 2:.1f}" y="18" text-anchor="middle">{_esc(title)}</text>',
           f'<text x="{pad_l + W / 2:.1f}" y="{height - 8}" text-anchor="middle">{_esc(xlabel)}</text>',
           f'<text x="14" y="{pad_t + H / 2:.1f}" text-anchor="middle" '
           f'transform="rotate(-90 14 {pad_t + H / 2:.1f})">{_esc(ylabel)}</text>']
    for frac in (0.0, 0.5, 1.0):
        xv, yv = x0 + frac * (x1 - x0), y0 + frac * (y1 - y0)
        ylab = f"1e{yv:.2g}" if logy else f"{yv:.4g}"
        out.append(f'<text x="{px(xv):.1f}" y="{pad_t + H + 16}" text-anchor="middle">{xv:.4g}</text>')
        out.append(f'<text x="{pad_l - 6}" y="{py(yv) + 4:.1f}" text-anchor="end">{ylab}</text>')
    if hline is not None:
        hv = math.log10(hline) if logy else hline
        out.append(f'<line x1="{pad_l}" x2="{pad_l + W}" y1="{py(hv):.2f}" y2="{py(hv):.2f}" '
                   f'stroke="black" stroke-dasharray="4 3"/>')
    for i, (label, x, y) in enumerate(series):
        x, y = np.asarray(x, float), np.asarray(y, float)
        if logy:
            keep = y > 0
            x, y = x[keep], np.log10(y[keep])
        keep = np.isfinite(x) & np.isfinite(y)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[keep], y[keep]))
        color = _PALETTE[i % len(_PALETTE)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1" points="{pts}">'
                   f'<title>{_esc(label)}</title></polyline>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
