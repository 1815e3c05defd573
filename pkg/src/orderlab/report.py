"""Figure emission: tidy CSV of contrast means/CIs and grouped-bar SVGs.

SVGs are templated directly (no plotting dependency) and carry numeric axis
ticks plus data-value attributes so every bar is auditable against the CSV.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

from .analysis import contrast_ci
from .errors import DataError

CSV_COLUMNS = ["source", "figure", "group", "subgroup", "mean", "ci_low", "ci_high", "n_items"]

_PALETTE = ["#4878a8", "#d1605e", "#6aa56e", "#b8860b", "#8064a2", "#5f9ea0"]


@dataclass(frozen=True)
class FigureBar:
    source: str
    figure: str
    group: str
    subgroup: str
    mean: float
    ci_low: float
    ci_high: float
    n_items: int


def summarize_preferences(
    per_item_values: dict[tuple[str, str, str], list[float]],
    figure: str,
    level: float = 0.95,
) -> list[FigureBar]:
    """(source, group, subgroup) -> per-item values, reduced to mean + CI."""
    bars = []
    for (source, group, subgroup), values in sorted(per_item_values.items()):
        if len(values) < 2:
            raise DataError(
                f"figure {figure!r}: ({source}, {group}) has {len(values)} items; need >= 2"
            )
        low, high = contrast_ci(values, level)
        bars.append(
            FigureBar(
                source=source,
                figure=figure,
                group=group,
                subgroup=subgroup,
                mean=float(sum(values) / len(values)),
                ci_low=low,
                ci_high=high,
                n_items=len(values),
            )
        )
    return bars


def write_report_csv(bars: list[FigureBar], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for b in bars:
            writer.writerow(
                [b.source, b.figure, b.group, b.subgroup,
                 repr(b.mean), repr(b.ci_low), repr(b.ci_high), b.n_items]
            )


def _nice_step(span: float, target: int = 5) -> float:
    if span <= 0:
        return 1.0
    raw = span / target
    mag = 10 ** math.floor(math.log10(raw))
    for mult in (1, 2, 2.5, 5, 10):
        if raw <= mult * mag:
            return mult * mag
    return 10 * mag


def _ticks(lo: float, hi: float) -> list[float]:
    step = _nice_step(hi - lo)
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-9:
        ticks.append(round(v, 10))
        v += step
    return ticks


def render_figure_svg(bars: list[FigureBar], title: str, unit: str = "bits") -> str:
    """Grouped bar chart: one group per moderator level, one bar per source,
    error bars spanning the contrast CI."""
    if not bars:
        raise DataError("no bars to render")
    groups = sorted({b.group for b in bars})
    sources = sorted({b.source for b in bars})
    width, height = 720, 420
    left, right, top, bottom = 70, 20, 48, 64
    plot_w, plot_h = width - left - right, height - top - bottom

    lo = min(0.0, min(b.ci_low for b in bars))
    hi = max(0.0, max(b.ci_high for b in bars))
    pad = 0.05 * (hi - lo or 1.0)
    lo, hi = lo - pad, hi + pad

    def y(value: float) -> float:
        return top + (hi - value) / (hi - lo) * plot_h

    group_w = plot_w / len(groups)
    bar_w = min(60.0, group_w * 0.7 / len(sources))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" data-ymin="{lo!r}" data-ymax="{hi!r}" '
        f'data-plot-top="{top}" data-plot-height="{plot_h}">',
        f'<title>{escape(title)}</title>',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="22" text-anchor="middle" font-size="15" '
        f'font-family="sans-serif">{escape(title)}</text>',
    ]
    for tick in _ticks(lo, hi):
        ty = y(tick)
        parts.append(
            f'<line x1="{left}" y1="{ty:.2f}" x2="{width - right}" y2="{ty:.2f}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{left - 8}" y="{ty + 4:.2f}" text-anchor="end" font-size="11" '
            f'font-family="sans-serif">{tick:g}</text>'
        )
    zero_y = y(0.0)
    parts.append(
        f'<line x1="{left}" y1="{zero_y:.2f}" x2="{width - right}" y2="{zero_y:.2f}" '
        f'stroke="#333333" stroke-width="1"/>'
    )
    parts.append(
        f'<text x="16" y="{top + plot_h / 2:.2f}" text-anchor="middle" font-size="12" '
        f'font-family="sans-serif" transform="rotate(-90 16 {top + plot_h / 2:.2f})">'
        f'{escape(unit)}</text>'
    )

    by_key = {(b.group, b.source): b for b in bars}
    for gi, group in enumerate(groups):
        gx = left + gi * group_w
        cluster_w = bar_w * len(sources)
        start = gx + (group_w - cluster_w) / 2
        parts.append(
            f'<text x="{gx + group_w / 2:.2f}" y="{height - bottom + 20}" text-anchor="middle" '
            f'font-size="12" font-family="sans-serif">{escape(group)}</text>'
        )
        for si, source in enumerate(sources):
            b = by_key.get((group, source))
            if b is None:
                continue
            x = start + si * bar_w
            y_top = min(y(b.mean), zero_y)
            h = abs(y(b.mean) - zero_y)
            color = _PALETTE[si % len(_PALETTE)]
            parts.append(
                f'<rect class="bar" data-source="{escape(source)}" data-group="{escape(group)}" '
                f'data-value="{b.mean!r}" x="{x:.2f}" y="{y_top:.2f}" width="{bar_w * 0.9:.2f}" '
                f'height="{h:.2f}" fill="{color}"/>'
            )
            cx = x + bar_w * 0.45
            parts.append(
                f'<line class="errbar" data-low="{b.ci_low!r}" data-high="{b.ci_high!r}" '
                f'x1="{cx:.2f}" y1="{y(b.ci_low):.2f}" x2="{cx:.2f}" y2="{y(b.ci_high):.2f}" '
                f'stroke="#222222" stroke-width="1.5"/>'
            )
            for v in (b.ci_low, b.ci_high):
                parts.append(
                    f'<line x1="{cx - 5:.2f}" y1="{y(v):.2f}" x2="{cx + 5:.2f}" y2="{y(v):.2f}" '
                    f'stroke="#222222" stroke-width="1.5"/>'
                )
    for si, source in enumerate(sources):
        lx = left + 10 + si * 170
        color = _PALETTE[si % len(_PALETTE)]
        parts.append(f'<rect x="{lx}" y="{height - 26}" width="12" height="12" fill="{color}"/>')
        parts.append(
            f'<text x="{lx + 18}" y="{height - 16}" font-size="11" '
            f'font-family="sans-serif">{escape(source)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
