"""Minimal self-contained SVG line plots for benchmark CSVs.

No plotting dependency: axes, ticks, a legend and one polyline per series,
with an optional log10 y axis for error curves.
"""

import math

WIDTH, HEIGHT = 760, 520
MARGIN = {"top": 48, "right": 32, "bottom": 64, "left": 76}
PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
    "#8c564b", "#17becf", "#7f7f7f",
)


def _ticks(lo: float, hi: float, count: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    step = 10.0 ** math.floor(math.log10(span / max(count - 1, 1)))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if span / (step * mult) <= count:
            step *= mult
            break
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * span:
        out.append(round(v, 12))
        v += step
    return out or [lo, hi]


def _fmt(v: float) -> str:
    if v == int(v) and abs(v) < 1e6:
        return str(int(v))
    return f"{v:g}"


def line_plot(
    series: dict[str, list[tuple[float, float]]],
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    logy: bool = False,
) -> str:
    """SVG document with one line per series, keyed by legend label."""
    pts_all = [(x, y) for pts in series.values() for (x, y) in pts]
    if logy:
        pts_all = [(x, y) for (x, y) in pts_all if y > 0]

    def ty(y):
        return math.log10(y) if logy else y

    if not pts_all:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    else:
        xs = [p[0] for p in pts_all]
        ys = [ty(p[1]) for p in pts_all]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi += 0.5
        y_lo -= 0.5

    plot_w = WIDTH - MARGIN["left"] - MARGIN["right"]
    plot_h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return MARGIN["left"] + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y):
        return HEIGHT - MARGIN["bottom"] - (y - y_lo) / (y_hi - y_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(
            f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" font-size="16">{title}</text>'
        )

    # gridlines and ticks
    for xv in _ticks(x_lo, x_hi):
        x = px(xv)
        out.append(
            f'<line x1="{x:.1f}" y1="{MARGIN["top"]}" x2="{x:.1f}" '
            f'y2="{HEIGHT - MARGIN["bottom"]}" stroke="#e0e0e0"/>'
        )
        out.append(
            f'<text x="{x:.1f}" y="{HEIGHT - MARGIN["bottom"] + 18}" text-anchor="middle" '
            f'font-size="11" fill="#444">{_fmt(xv)}</text>'
        )
    if logy:
        y_tick_vals = range(math.floor(y_lo), math.ceil(y_hi) + 1)
    else:
        y_tick_vals = _ticks(y_lo, y_hi)
    for yv in y_tick_vals:
        y = py(yv)
        if y < MARGIN["top"] - 1 or y > HEIGHT - MARGIN["bottom"] + 1:
            continue
        label = f"1e{yv}" if logy else _fmt(yv)
        out.append(
            f'<line x1="{MARGIN["left"]}" y1="{y:.1f}" x2="{WIDTH - MARGIN["right"]}" '
            f'y2="{y:.1f}" stroke="#e0e0e0"/>'
        )
        out.append(
            f'<text x="{MARGIN["left"] - 8}" y="{y + 4:.1f}" text-anchor="end" '
            f'font-size="11" fill="#444">{label}</text>'
        )

    # axes
    out.append(
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#333"/>'
    )
    if x_label:
        out.append(
            f'<text x="{MARGIN["left"] + plot_w / 2}" y="{HEIGHT - 16}" text-anchor="middle" '
            f'font-size="13">{x_label}</text>'
        )
    if y_label:
        cx, cy = 20, MARGIN["top"] + plot_h / 2
        out.append(
            f'<text x="{cx}" y="{cy}" text-anchor="middle" font-size="13" '
            f'transform="rotate(-90 {cx} {cy})">{y_label}{" (log)" if logy else ""}</text>'
        )

    # series
    for idx, (label, pts) in enumerate(series.items()):
        color = PALETTE[idx % len(PALETTE)]
        drawable = [(x, y) for (x, y) in pts if (not logy) or y > 0]
        coords = " ".join(f"{px(x):.1f},{py(ty(y)):.1f}" for x, y in sorted(drawable))
        if coords:
            out.append(
                f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>'
            )
            for x, y in drawable:
                out.append(
                    f'<circle cx="{px(x):.1f}" cy="{py(ty(y)):.1f}" r="3" fill="{color}"/>'
                )
        ly = MARGIN["top"] + 10 + 18 * idx
        lx = WIDTH - MARGIN["right"] - 150
        out.append(
            f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" stroke-width="2"/>'
        )
        out.append(
            f'<text x="{lx + 30}" y="{ly + 4}" font-size="12" fill="#333">{label}</text>'
        )

    out.append("</svg>")
    return "\n".join(out) + "\n"
