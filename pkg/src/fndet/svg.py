"""Dependency-free SVG line plots with deterministic output."""

from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")
WIDTH, HEIGHT = 480, 360
LEFT, RIGHT, TOP, BOTTOM = 60, 20, 30, 50


def _fmt(v):
    return f"{v:.2f}"


def line_plot(series, xlabel, ylabel, title=""):
    """Render ``[(name, [(x, y), ...]), ...]`` on unit axes as an SVG string."""
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(x):
        return LEFT + min(max(x, 0.0), 1.0) * pw

    def sy(y):
        return TOP + (1.0 - min(max(y, 0.0), 1.0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>']
    for i in range(6):
        t = i / 5
        out.append(f'<line x1="{_fmt(sx(t))}" y1="{_fmt(sy(0))}" x2="{_fmt(sx(t))}" '
                   f'y2="{_fmt(sy(1))}" stroke="#e0e0e0"/>')
        out.append(f'<line x1="{_fmt(sx(0))}" y1="{_fmt(sy(t))}" x2="{_fmt(sx(1))}" '
                   f'y2="{_fmt(sy(t))}" stroke="#e0e0e0"/>')
        out.append(f'<text x="{_fmt(sx(t))}" y="{_fmt(sy(0) + 15)}" text-anchor="middle">{t:.1f}</text>')
        out.append(f'<text x="{_fmt(sx(0) - 6)}" y="{_fmt(sy(t) + 4)}" text-anchor="end">{t:.1f}</text>')
    out.append(f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(f'<text x="{_fmt(LEFT + pw / 2)}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{_fmt(TOP + ph / 2)}" text-anchor="middle" '
               f'transform="rotate(-90 14 {_fmt(TOP + ph / 2)})">{escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{_fmt(LEFT + pw / 2)}" y="18" text-anchor="middle">{escape(title)}</text>')
    for i, (name, pts) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        if pts:
            coords = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in pts)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        ly = TOP + 14 + 14 * i
        out.append(f'<line x1="{LEFT + pw - 110}" y1="{ly - 4}" x2="{LEFT + pw - 90}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{LEFT + pw - 85}" y="{ly}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
