"""Deterministic writers: CSV tables, JSON Lines records and a small SVG plotter."""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from . import __version__


def header_line(config_hash: str) -> str:
    return f"# diocurve {__version__} config={config_hash}"


def fmt6(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.6g}"
    return "" if x is None else str(x)


def write_csv(path, columns: list, rows, config_hash: str) -> Path:
    """CSV with a provenance comment line, then a header row, floats at 6 significant digits."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(header_line(config_hash) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            vals = [r[c] for c in columns] if isinstance(r, dict) else list(r)
            w.writerow([fmt6(x) for x in vals])
    return path


def _json(x) -> str:
    if x is None:
        return "null"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x) or math.isinf(x):
            return "null" if math.isnan(x) else ('"inf"' if x > 0 else '"-inf"')
        return f"{x:.17g}"
    if isinstance(x, str):
        import json
        return json.dumps(x, ensure_ascii=False)
    if isinstance(x, dict):
        return "{" + ",".join(f"{_json(str(k))}:{_json(v)}" for k, v in x.items()) + "}"
    if isinstance(x, (list, tuple, np.ndarray)):
        return "[" + ",".join(_json(v) for v in x) + "]"
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps(record: dict) -> str:
    """One JSON object; floats carry 17 significant digits, key order is preserved."""
    return _json(record)


def write_jsonl(path, records, config_hash: str) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps({"_header": {"artifact": "diocurve", "version": __version__,
                                    "config_hash": config_hash}}) + "\n")
        for r in records:
            fh.write(dumps(r) + "\n")
    return path


def write_svg(path, series: list, title: str = "", xlabel: str = "", ylabel: str = "",
              logx: bool = True, logy: bool = True, size=(480, 360)) -> Path:
    """Minimal SVG 1.1 plot.  ``series`` holds dicts with x, y, label and style
    ("points" or "line")."""
    W, Hh = size
    m = 50
    xs, ys = [], []
    tx = (lambda v: math.log10(v)) if logx else float
    ty = (lambda v: math.log10(v)) if logy else float
    for s in series:
        for x, y in zip(s["x"], s["y"]):
            if (not logx or x > 0) and (not logy or y > 0):
                xs.append(tx(x))
                ys.append(ty(y))
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def px(v):
        return m + (tx(v) - x0) / (x1 - x0) * (W - 2 * m)

    def py(v):
        return Hh - m - (ty(v) - y0) / (y1 - y0) * (Hh - 2 * m)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{Hh}">',
           f'<rect x="0" y="0" width="{W}" height="{Hh}" fill="white"/>',
           f'<line x1="{m}" y1="{Hh - m}" x2="{W - m}" y2="{Hh - m}" stroke="black"/>',
           f'<line x1="{m}" y1="{m}" x2="{m}" y2="{Hh - m}" stroke="black"/>',
           f'<text x="{W / 2:.1f}" y="20" text-anchor="middle" font-size="13">{_esc(title)}</text>',
           f'<text x="{W / 2:.1f}" y="{Hh - 12}" text-anchor="middle" font-size="11">{_esc(xlabel)}</text>',
           f'<text x="14" y="{Hh / 2:.1f}" text-anchor="middle" font-size="11" '
           f'transform="rotate(-90 14 {Hh / 2:.1f})">{_esc(ylabel)}</text>']
    for i, s in enumerate(series):
        col = colors[i % len(colors)]
        pts = [(px(x), py(y)) for x, y in zip(s["x"], s["y"])
               if (not logx or x > 0) and (not logy or y > 0)]
        if s.get("style", "points") == "line" and len(pts) > 1:
            d = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
            out.append(f'<polyline points="{d}" fill="none" stroke="{col}"/>')
        else:
            out += [f'<circle cx="{a:.2f}" cy="{b:.2f}" r="2.5" fill="{col}"/>' for a, b in pts]
        out.append(f'<text x="{W - m + 4}" y="{m + 14 * i}" font-size="10" fill="{col}">'
                   f'{_esc(s.get("label", ""))}</text>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n", encoding="utf-8")
    return path


def _esc(s: str) -> str:
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
