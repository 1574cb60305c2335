"""Minimal self-contained SVG rendering for waterfall curves and heatmaps."""

from __future__ import annotations

_MARGIN = 60
_WIDTH = 640
_HEIGHT = 420


def _header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
    ]


def _axes(x_label: str, y_label: str) -> list[str]:
    x0, y0 = _MARGIN, _HEIGHT - _MARGIN
    x1, y1 = _WIDTH - _MARGIN, _MARGIN
    return [
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
        f'<text x="{(x0 + x1) / 2}" y="{_HEIGHT - 15}" text-anchor="middle" '
        f'font-size="12">{x_label}</text>',
        f'<text x="18" y="{(y0 + y1) / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 18 {(y0 + y1) / 2})">{y_label}</text>',
    ]


def waterfall_svg(records, title: str = "waterfall", x_label: str = "tests") -> str:
    """Success-rate curve; one polyline over the sweep values."""
    xs = [rec.sweep_value for rec in records]
    ys = [rec.success_rate for rec in records]
    lo, hi = min(xs), max(xs)
    span = (hi - lo) or 1.0
    plot_w = _WIDTH - 2 * _MARGIN
    plot_h = _HEIGHT - 2 * _MARGIN

    def px(x):
        return _MARGIN + (x - lo) / span * plot_w

    def py(y):
        return _HEIGHT - _MARGIN - y * plot_h

    parts = _header(title) + _axes(x_label, "success rate")
    pts = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in zip(xs, ys))
    parts.append(f'<polyline points="{pts}" fill="none" stroke="steelblue" stroke-width="2"/>')
    target_y = py(0.99)
    parts.append(
        f'<line x1="{_MARGIN}" y1="{target_y:.1f}" x2="{_WIDTH - _MARGIN}" '
        f'y2="{target_y:.1f}" stroke="gray" stroke-dasharray="4 3"/>'
    )
    for x, y in zip(xs, ys):
        parts.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="2.5" fill="steelblue"/>')
    parts.append("</svg>")
    return "\n".join(parts)


def _shade(rate: float) -> str:
    # dark blue (0) to near white (1)
    level = int(40 + 215 * rate)
    return f"rgb({level},{level},255)"


def heatmap_svg(columns, title: str = "heatmap", x_label: str = "sweep",
                y_label: str = "tests") -> str:
    """Grid of success-rate cells, one column per swept value, with red dots
    at each column's first target-reaching T."""
    if not columns:
        return "\n".join(_header(title) + ["</svg>"])
    n_cols = len(columns)
    n_rows = max(len(col.records) for col in columns)
    plot_w = _WIDTH - 2 * _MARGIN
    plot_h = _HEIGHT - 2 * _MARGIN
    cell_w = plot_w / n_cols
    cell_h = plot_h / n_rows
    parts = _header(title) + _axes(x_label, y_label)
    for ci, col in enumerate(columns):
        x = _MARGIN + ci * cell_w
        for ri, rec in enumerate(col.records):
            y = _HEIGHT - _MARGIN - (ri + 1) * cell_h
            parts.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{cell_w:.1f}" '
                f'height="{cell_h:.1f}" fill="{_shade(rec.success_rate)}"/>'
            )
            if col.first_reaching_target is not None and rec.T == col.first_reaching_target:
                parts.append(
                    f'<circle cx="{x + cell_w / 2:.1f}" cy="{y + cell_h / 2:.1f}" '
                    f'r="3" fill="red"/>'
                )
        parts.append(
            f'<text x="{x + cell_w / 2:.1f}" y="{_HEIGHT - _MARGIN + 14}" '
            f'text-anchor="middle" font-size="10">{col.column_value}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)
