"""CSV and minimal SVG emitters for result rows."""
from __future__ import annotations

import csv
import io
from xml.sax.saxutils import escape

from .experiment import ResultRow

HEADER = ",".join(ResultRow.FIELDS)


def _fmt(v):
    # repr round-trips floats exactly
    return repr(v) if isinstance(v, float) else str(v)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    buf.write(HEADER + "\n")
    for r in rows:
        buf.write(",".join(_fmt(getattr(r, f)) for f in ResultRow.FIELDS) + "\n")
    return buf.getvalue()


def emit_csv(rows, path):
    try:
        with open(path, "w", newline="") as f:
            f.write(rows_to_csv(rows))
    except OSError as e:
        raise OSError(f"cannot write CSV to {path}: {e.strerror}") from e


def parse_csv(text: str) -> list:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != ResultRow.FIELDS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    out = []
    for d in reader:
        out.append(ResultRow(d["preset"], d["policy"], int(d["k"]), int(d["l"]), int(d["N"]),
                             int(d["seed"]), int(d["total_misses"]), float(d["miss_ratio"]),
                             float(d["runtime_ms"])))
    return out


def read_csv(path) -> list:
    with open(path) as f:
        return parse_csv(f.read())


# -- SVG -------------------------------------------------------------------------

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]


def _ticks(lo, hi, n=5):
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _label(v):
    return f"{v:.3g}"


def render_svg(rows, x_field, y_field="miss_ratio", series_field="policy",
               width=640, height=400, title=None) -> str:
    """Line chart, one polyline per series; y is averaged over repeated x."""
    if not rows:
        raise ValueError("no rows to plot")
    series = {}
    for r in rows:
        key = getattr(r, series_field)
        series.setdefault(key, {}).setdefault(float(getattr(r, x_field)), []).append(
            float(getattr(r, y_field)))
    pts = {s: sorted((x, sum(ys) / len(ys)) for x, ys in d.items()) for s, d in series.items()}
    xs = [x for p in pts.values() for x, _ in p]
    ys = [y for p in pts.values() for _, y in p]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(0.0, min(ys)), max(ys)
    if y1 == y0:
        y1 = y0 + 1.0
    left, right, top, bottom = 60, 130, 30, 45
    pw, ph = width - left - right, height - top - bottom

    def sx(x):
        return left + (pw * (x - x0) / (x1 - x0) if x1 > x0 else pw / 2)

    def sy(y):
        return top + ph - ph * (y - y0) / (y1 - y0)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
           f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>']
    for x in _ticks(x0, x1):
        out.append(f'<line x1="{sx(x):.1f}" y1="{top + ph}" x2="{sx(x):.1f}" y2="{top + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{sx(x):.1f}" y="{top + ph + 16}" text-anchor="middle">{_label(x)}</text>')
    for y in _ticks(y0, y1):
        out.append(f'<line x1="{left - 4}" y1="{sy(y):.1f}" x2="{left}" y2="{sy(y):.1f}" stroke="black"/>')
        out.append(f'<text x="{left - 6}" y="{sy(y) + 4:.1f}" text-anchor="end">{_label(y)}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 8}" text-anchor="middle">{escape(x_field)}</text>')
    out.append(f'<text x="14" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 14 {top + ph / 2})">{escape(y_field)}</text>')
    if title:
        out.append(f'<text x="{left + pw / 2}" y="18" text-anchor="middle">{escape(title)}</text>')
    for i, (name, p) in enumerate(sorted(pts.items())):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in p)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        ly = top + 14 * i + 6
        out.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 34}" y="{ly + 4}">{escape(str(name))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(rows, path, x_field, y_field="miss_ratio", series_field="policy", title=None):
    text = render_svg(rows, x_field, y_field, series_field, title=title)
    try:
        with open(path, "w") as f:
            f.write(text)
    except OSError as e:
        raise OSError(f"cannot write SVG to {path}: {e.strerror}") from e
