"""CSV and SVG output for phase-diagram sweeps and finite-N traces.

Phase CSV columns, in order::

    theta,sigma,delta_e,phase,f_corr,e_total,oracle_f,oracle_stderr,oracle_error

Floats are written with ``repr`` (shortest round-trip form), missing optional
values as empty fields, quoting per RFC 4180.
"""

import csv
import io
from xml.sax.saxutils import escape

import numpy as np

from .errors import DomainError
from .sweep import PhasePoint
from .thermo import Phase

__all__ = [
    "PHASE_COLORS",
    "PHASE_COLUMNS",
    "phase_csv_text",
    "read_phase_csv",
    "rectangular_grid",
    "phase_svg_text",
    "emit_phase_diagram",
    "write_table_csv",
]

PHASE_COLUMNS = (
    "theta", "sigma", "delta_e", "phase", "f_corr", "e_total",
    "oracle_f", "oracle_stderr", "oracle_error",
)

PHASE_COLORS = {
    Phase.UNCORRELATED: "#d9d9d9",
    Phase.PARACORRELATED: "#fdae61",
    Phase.SPIN_GLASS_CORRELATED: "#2c7bb6",
}

_LABELS = {
    Phase.UNCORRELATED: "uncorrelated",
    Phase.PARACORRELATED: "paracorrelated",
    Phase.SPIN_GLASS_CORRELATED: "spin-glass correlated",
}

_AXIS_TITLES = {"theta": "Θ = k_B T", "sigma": "σ", "delta_e": "ΔE"}


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, Phase):
        return v.value
    if isinstance(v, float):
        return repr(v)
    return str(v)


def phase_csv_text(points):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(PHASE_COLUMNS)
    for p in points:
        w.writerow([_fmt(getattr(p, c)) for c in PHASE_COLUMNS])
    return buf.getvalue()


def _opt_float(s):
    return float(s) if s != "" else None


def read_phase_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != PHASE_COLUMNS:
        raise DomainError(f"{path}: unexpected header {rows[0] if rows else None!r}")
    out = []
    for r in rows[1:]:
        out.append(
            PhasePoint(
                float(r[0]), float(r[1]), float(r[2]), Phase(r[3]), float(r[4]), float(r[5]),
                _opt_float(r[6]), _opt_float(r[7]), r[8] or None,
            )
        )
    return out


def rectangular_grid(points, x_axis="theta", y_axis="sigma"):
    """Arrange points on the (x, y) raster.

    Returns
    -------
    xs, ys : sorted unique axis values
    cells : 2-D object array, ``cells[iy, ix]`` is the point at ``(xs[ix], ys[iy])``

    Raises
    ------
    DomainError
        If cells are missing or duplicated, or a third axis varies.
    """
    if not points:
        raise DomainError("no points to arrange")
    other = ({"theta", "sigma", "delta_e"} - {x_axis, y_axis}).pop()
    others = {getattr(p, other) for p in points}
    if len(others) > 1:
        raise DomainError(f"axis {other} is not constant across points: {sorted(others)[:5]}")
    xs = sorted({getattr(p, x_axis) for p in points})
    ys = sorted({getattr(p, y_axis) for p in points})
    ix = {v: i for i, v in enumerate(xs)}
    iy = {v: i for i, v in enumerate(ys)}
    cells = np.full((len(ys), len(xs)), None, dtype=object)
    dupes = []
    for p in points:
        a, b = iy[getattr(p, y_axis)], ix[getattr(p, x_axis)]
        if cells[a, b] is not None:
            dupes.append((xs[b], ys[a]))
        cells[a, b] = p
    missing = [(xs[b], ys[a]) for a in range(len(ys)) for b in range(len(xs)) if cells[a, b] is None]
    if missing or dupes:
        parts = []
        if missing:
            parts.append(f"missing cells ({x_axis}, {y_axis}): {missing}")
        if dupes:
            parts.append(f"duplicated cells: {dupes}")
        raise DomainError("non-rectangular grid; " + "; ".join(parts))
    return xs, ys, cells


def _edges(vals):
    v = np.asarray(vals, dtype=float)
    if v.size == 1:
        half = 0.5 * abs(v[0]) if v[0] != 0 else 0.5
        return np.array([v[0] - half, v[0] + half])
    mid = 0.5 * (v[1:] + v[:-1])
    return np.concatenate([[v[0] - (mid[0] - v[0])], mid, [v[-1] + (v[-1] - mid[-1])]])


def phase_svg_text(points, x_axis="theta", y_axis="sigma", title="Collective correlation phases"):
    xs, ys, cells = rectangular_grid(points, x_axis, y_axis)
    left, top, width, height = 80, 40, 480, 480
    legend_w = 210
    total_w, total_h = left + width + legend_w, top + height + 70
    xe, ye = _edges(xs), _edges(ys)
    x0, x1, y0, y1 = xe[0], xe[-1], ye[0], ye[-1]

    def px(x):
        return left + (x - x0) / (x1 - x0) * width

    def py(y):
        return top + height - (y - y0) / (y1 - y0) * height

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{total_w}" height="{total_h}" '
        f'viewBox="0 0 {total_w} {total_h}">',
        f'<text x="{left + width / 2:.2f}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="16">{escape(title)}</text>',
        '<g id="cells" shape-rendering="crispEdges">',
    ]
    for a in range(len(ys)):
        for b in range(len(xs)):
            p = cells[a, b]
            xa, xb = px(xe[b]), px(xe[b + 1])
            ya, yb = py(ye[a + 1]), py(ye[a])
            out.append(
                f'<rect x="{xa:.3f}" y="{ya:.3f}" width="{xb - xa:.3f}" height="{yb - ya:.3f}" '
                f'fill="{PHASE_COLORS[p.phase]}"/>'
            )
    out.append("</g>")
    out.append(
        f'<rect x="{left}" y="{top}" width="{width}" height="{height}" fill="none" stroke="black"/>'
    )
    if {x_axis, y_axis} == {"theta", "sigma"}:
        lo, hi = max(x0, y0), min(x1, y1)
        if hi > lo:
            out.append(
                f'<line id="critical-line" x1="{px(lo):.3f}" y1="{py(lo):.3f}" x2="{px(hi):.3f}" '
                f'y2="{py(hi):.3f}" stroke="black" stroke-width="2" stroke-dasharray="6,4"/>'
            )
    for k in range(5):
        xv = x0 + (x1 - x0) * k / 4
        yv = y0 + (y1 - y0) * k / 4
        out.append(
            f'<text x="{px(xv):.2f}" y="{top + height + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{xv:.3g}</text>'
        )
        out.append(
            f'<text x="{left - 6}" y="{py(yv) + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{yv:.3g}</text>'
        )
    out.append(
        f'<text x="{left + width / 2:.2f}" y="{top + height + 42}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{escape(_AXIS_TITLES[x_axis])}</text>'
    )
    out.append(
        f'<text x="22" y="{top + height / 2:.2f}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14" transform="rotate(-90 22 {top + height / 2:.2f})">'
        f"{escape(_AXIS_TITLES[y_axis])}</text>"
    )
    lx = left + width + 20
    out.append('<g id="legend" font-family="sans-serif" font-size="13">')
    for k, phase in enumerate(Phase):
        yk = top + 10 + 26 * k
        out.append(
            f'<rect x="{lx}" y="{yk}" width="16" height="16" fill="{PHASE_COLORS[phase]}" stroke="black"/>'
        )
        out.append(f'<text x="{lx + 24}" y="{yk + 13}">{escape(_LABELS[phase])}</text>')
    if {x_axis, y_axis} == {"theta", "sigma"}:
        yk = top + 10 + 26 * 3
        out.append(
            f'<line x1="{lx}" y1="{yk + 8}" x2="{lx + 16}" y2="{yk + 8}" stroke="black" '
            f'stroke-width="2" stroke-dasharray="6,4"/>'
        )
        out.append(f'<text x="{lx + 24}" y="{yk + 13}">Θ = σ (critical line)</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_phase_diagram(points, path, fmt="csv", x_axis="theta", y_axis="sigma"):
    """Write a rectangular sweep as CSV or SVG.

    Both formats check that the points form a complete ``x_axis`` by ``y_axis``
    raster first.
    """
    rectangular_grid(points, x_axis, y_axis)
    if fmt == "csv":
        text = phase_csv_text(points)
    elif fmt == "svg":
        text = phase_svg_text(points, x_axis, y_axis)
    else:
        raise DomainError(f"unknown format {fmt!r}")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)
    return path


def write_table_csv(path, header, rows):
    """Generic CSV writer with ``repr`` floats; used for oracle and aging traces."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(float(v)) if isinstance(v, (np.floating,)) else _fmt(v) for v in r])
    return path
