"""SVG heatmap of a physical trace: qubit rows by timeslice columns.

Computation is red, communication white and idling black.  Cell borders are
drawn as a gray grid (omitted when cells get too small to see them), and a
strip on the left alternates shades per core with a separator line between
cores.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .circuit import COMMUNICATE, COMPUTE, IDLE
from .mapper import MappedProgram

COLORS = {COMPUTE: "#d62728", COMMUNICATE: "#ffffff", IDLE: "#000000"}
GRID = "#808080"
BANDS = ("#c8c8c8", "#6e6e6e")
MIN_GRID_CELL = 3.0


def _runs(row: np.ndarray):
    if row.size == 0:
        return
    cut = np.flatnonzero(np.diff(row)) + 1
    starts = np.concatenate([[0], cut]).tolist()
    ends = starts[1:] + [row.size]
    for s, e in zip(starts, ends):
        yield s, e - s, int(row[s])


def _num(v: float) -> str:
    return f"{v:.3f}".rstrip("0").rstrip(".")


def render_cells(cells: np.ndarray, capacity: int, cell: float = 6.0, title: str = "") -> str:
    """SVG text for a grid of cell codes whose rows are grouped ``capacity`` per core."""
    rows, cols = cells.shape
    band_w = max(cell, 6.0)
    head = 16.0 if title else 0.0
    width = band_w + cols * cell
    height = head + rows * cell
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_num(width)}" height="{_num(height)}" '
        f'viewBox="0 0 {_num(width)} {_num(height)}" shape-rendering="crispEdges">',
    ]
    if title:
        out.append(f'<text x="2" y="12" font-family="monospace" font-size="11">{escape(title)}</text>')
    n_cores = -(-rows // capacity) if capacity else 0
    out.append('<g id="cores">')
    for c in range(n_cores):
        y0 = head + c * capacity * cell
        h = min(capacity, rows - c * capacity) * cell
        out.append(f'<rect x="0" y="{_num(y0)}" width="{_num(band_w)}" height="{_num(h)}" '
                   f'fill="{BANDS[c % 2]}"><title>core {c}</title></rect>')
    out.append("</g>")
    out.append(f'<g id="cells" transform="translate({_num(band_w)},{_num(head)})">')
    for r in range(rows):
        y = r * cell
        for start, length, code in _runs(cells[r]):
            out.append(f'<rect x="{_num(start * cell)}" y="{_num(y)}" width="{_num(length * cell)}" '
                       f'height="{_num(cell)}" fill="{COLORS[code]}"/>')
    out.append("</g>")
    out.append(f'<g id="grid" stroke="{GRID}" fill="none" transform="translate({_num(band_w)},{_num(head)})">')
    if cell >= MIN_GRID_CELL:
        for r in range(rows + 1):
            out.append(f'<line x1="0" y1="{_num(r * cell)}" x2="{_num(cols * cell)}" y2="{_num(r * cell)}" '
                       'stroke-width="0.5"/>')
        for t in range(cols + 1):
            out.append(f'<line x1="{_num(t * cell)}" y1="0" x2="{_num(t * cell)}" y2="{_num(rows * cell)}" '
                       'stroke-width="0.5"/>')
    for c in range(1, n_cores):
        y = c * capacity * cell
        out.append(f'<line x1="{_num(-band_w)}" y1="{_num(y)}" x2="{_num(cols * cell)}" y2="{_num(y)}" '
                   'stroke-width="1.5"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_svg(mp: MappedProgram, cell: float = 6.0, title: str | None = None) -> str:
    """Heatmap of ``mp``'s physical trace (C*Q rows by t_exec columns)."""
    if title is None:
        title = (f"{mp.circuit.name}  {mp.arch.cores}x{mp.arch.capacity}  "
                 f"teleports={mp.n_teleports}  t_exec={mp.t_exec}")
    return render_cells(np.asarray(mp.trace.cells), mp.arch.capacity, cell, title)
