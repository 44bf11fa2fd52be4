"""Hand-rolled SVG output: rose plots and small-multiple bar charts.

The files are plain SVG 1.1 text assembled with fixed float formatting, so
identical data always produces byte-identical plots.
"""

from __future__ import annotations

import math

_HEADER = '<?xml version="1.0" encoding="UTF-8"?>\n'


def _fmt(x):
    return f"{x:.3f}"


def _polar(cx, cy, radius, angle):
    # Display convention: orientation pi/2 (mass moving along image rows)
    # renders horizontally; the canvas y axis points down.
    a = angle - math.pi / 2.0
    return cx + radius * math.cos(a), cy + radius * math.sin(a)


def rose_svg(bins, size=360, title=""):
    """Polar wedge chart of an orientation histogram.

    The n_b wedges cover [0, pi) and are mirrored to [pi, 2*pi); wedge
    radius is proportional to bin mass.
    """
    bins = [float(b) for b in bins]
    n_b = len(bins)
    cx = cy = size / 2.0
    r_max = size * 0.42
    peak = max(bins) if bins and max(bins) > 0.0 else 0.0

    parts = [
        _HEADER,
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{size}" height="{size}" viewBox="0 0 {size} {size}">\n',
        f'<rect width="{size}" height="{size}" fill="white"/>\n',
        f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r_max)}" '
        'fill="none" stroke="#cccccc" stroke-width="1"/>\n',
    ]
    if title:
        parts.append(
            f'<text x="{_fmt(cx)}" y="16" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{title}</text>\n'
        )
    for k, value in enumerate(bins):
        if peak <= 0.0 or value <= 0.0:
            continue
        radius = r_max * value / peak
        a0 = k * math.pi / n_b
        a1 = (k + 1) * math.pi / n_b
        for mirror in (0.0, math.pi):
            x0, y0 = _polar(cx, cy, radius, a0 + mirror)
            x1, y1 = _polar(cx, cy, radius, a1 + mirror)
            parts.append(
                f'<path d="M {_fmt(cx)} {_fmt(cy)} L {_fmt(x0)} {_fmt(y0)} '
                f'A {_fmt(radius)} {_fmt(radius)} 0 0 1 {_fmt(x1)} {_fmt(y1)} Z" '
                'fill="#4878a8" fill-opacity="0.8" stroke="#2a4a6a" stroke-width="0.5"/>\n'
            )
    parts.append("</svg>\n")
    return "".join(parts)


def rose_grid_svg(cells, columns, cell_size=96):
    """Grid of small rose plots: ``cells`` is a row-major list of
    (label, bins) laid out ``columns`` wide."""
    cells = list(cells)
    columns = max(int(columns), 1)
    n_rows = (len(cells) + columns - 1) // columns
    width = columns * cell_size
    height = n_rows * cell_size
    parts = [
        _HEADER,
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">\n',
        f'<rect width="{width}" height="{height}" fill="white"/>\n',
    ]
    for idx, (label, bins) in enumerate(cells):
        row, col = divmod(idx, columns)
        cx = col * cell_size + cell_size / 2.0
        cy = row * cell_size + cell_size / 2.0
        r_max = cell_size * 0.38
        bins = [float(b) for b in bins]
        peak = max(bins) if bins and max(bins) > 0.0 else 0.0
        parts.append(
            f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r_max)}" '
            'fill="none" stroke="#dddddd" stroke-width="0.5"/>\n'
        )
        parts.append(
            f'<text x="{_fmt(cx)}" y="{_fmt(row * cell_size + 10)}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="7">{label}</text>\n'
        )
        n_b = len(bins)
        for k, value in enumerate(bins):
            if peak <= 0.0 or value <= 0.0:
                continue
            radius = r_max * value / peak
            a0 = k * math.pi / n_b
            a1 = (k + 1) * math.pi / n_b
            for mirror in (0.0, math.pi):
                x0, y0 = _polar(cx, cy, radius, a0 + mirror)
                x1, y1 = _polar(cx, cy, radius, a1 + mirror)
                parts.append(
                    f'<path d="M {_fmt(cx)} {_fmt(cy)} L {_fmt(x0)} {_fmt(y0)} '
                    f'A {_fmt(radius)} {_fmt(radius)} 0 0 1 {_fmt(x1)} {_fmt(y1)} Z" '
                    'fill="#4878a8" fill-opacity="0.8"/>\n'
                )
    parts.append("</svg>\n")
    return "".join(parts)


def bar_grid_svg(rows, cell_width=180, cell_height=110):
    """Grid of bar charts: rows of (row_label, [(col_label, values), ...]).

    Every cell is scaled to its own maximum, mirroring a small-multiples
    comparison figure.
    """
    rows = list(rows)
    n_cols = max((len(cells) for _, cells in rows), default=0)
    width = 80 + n_cols * cell_width
    height = 30 + len(rows) * cell_height
    parts = [
        _HEADER,
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">\n',
        f'<rect width="{width}" height="{height}" fill="white"/>\n',
    ]
    for r, (row_label, cells) in enumerate(rows):
        y0 = 30 + r * cell_height
        parts.append(
            f'<text x="8" y="{_fmt(y0 + cell_height / 2)}" font-family="sans-serif" '
            f'font-size="11">{row_label}</text>\n'
        )
        for c, (col_label, values) in enumerate(cells):
            x0 = 80 + c * cell_width
            values = [float(v) for v in values]
            peak = max(values) if values and max(values) > 0.0 else 1.0
            chart_h = cell_height - 34
            bar_w = (cell_width - 20) / max(len(values), 1)
            if r == 0:
                parts.append(
                    f'<text x="{_fmt(x0 + cell_width / 2)}" y="18" text-anchor="middle" '
                    f'font-family="sans-serif" font-size="11">{col_label}</text>\n'
                )
            parts.append(
                f'<line x1="{_fmt(x0 + 10)}" y1="{_fmt(y0 + chart_h + 6)}" '
                f'x2="{_fmt(x0 + cell_width - 10)}" y2="{_fmt(y0 + chart_h + 6)}" '
                'stroke="#888888" stroke-width="1"/>\n'
            )
            for k, value in enumerate(values):
                bar_h = chart_h * value / peak
                parts.append(
                    f'<rect x="{_fmt(x0 + 10 + k * bar_w + 1)}" '
                    f'y="{_fmt(y0 + chart_h + 6 - bar_h)}" '
                    f'width="{_fmt(max(bar_w - 2, 1.0))}" height="{_fmt(bar_h)}" '
                    'fill="#4878a8"/>\n'
                )
    parts.append("</svg>\n")
    return "".join(parts)
