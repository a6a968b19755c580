"""CSV and SVG writers with fixed, reproducible formatting."""

from __future__ import annotations

import csv
import math
from html import escape
from pathlib import Path


def fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def emit_csv(path, header: list[str], rows: list[list]) -> Path:
    if not rows:
        raise ValueError("no rows to write")
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row has {len(row)} cells, header has {len(header)}")
            w.writerow([fmt(x) for x in row])
    return path


def emit_svg(path, xs, ys, xlabel: str, ylabel: str, title: str = "") -> Path:
    """Single-polyline line plot, self-contained."""
    xs, ys = [float(x) for x in xs], [float(y) for y in ys]
    if not xs or len(xs) != len(ys):
        raise ValueError("need equally many x and y values, at least one")
    width, height, pad = 640, 420, 70
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def sx(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys) if math.isfinite(y))
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<polyline fill="none" stroke="#1f5fa8" stroke-width="2" points="{pts}"/>',
        f'<text x="{width / 2}" y="{height - 20}" text-anchor="middle" font-size="14">{escape(xlabel)}</text>',
        f'<text x="20" y="{height / 2}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 20 {height / 2})">{escape(ylabel)}</text>',
        f'<text x="{pad}" y="{height - pad + 18}" font-size="11">{fmt(x0)}</text>',
        f'<text x="{width - pad}" y="{height - pad + 18}" text-anchor="end" font-size="11">{fmt(x1)}</text>',
        f'<text x="{pad - 6}" y="{height - pad}" text-anchor="end" font-size="11">{fmt(y0)}</text>',
        f'<text x="{pad - 6}" y="{pad + 4}" text-anchor="end" font-size="11">{fmt(y1)}</text>',
    ]
    if title:
        lines.append(f'<text x="{width / 2}" y="30" text-anchor="middle" font-size="16">{escape(title)}</text>')
    lines.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path
