"""Deterministic SVG rendering of patches.

Tiles are drawn as filled lattice polygons colored by prototile, with
punctures as dots.  All coordinates are scaled to integers (by the power
of lambda clearing every denominator), so the output is exact and
byte-identical across runs.  The viewBox is exactly the bounding box of
the patch support.
"""

from __future__ import annotations

from fractions import Fraction

from .geometry import Cell, boundary_cells_of_cubes, support_boundary_cells

PALETTE = ("#4e79a7", "#f28e2b", "#59a14f", "#e15759",
           "#b07aa1", "#76b7b2", "#edc948", "#9c755f")


def _scale_of(patch):
    e = 0
    for t in patch.tiles:
        e = max(e, t.pos.scale, t.translation.scale)
    return e


def _tile_polygons(tile, unit):
    """Boundary loops of one tile as integer point lists (y flipped later)."""
    cubes = tile.cubes()
    edges = boundary_cells_of_cubes(cubes)
    lam = tile.proto.lam
    segs = set()
    for e in edges:
        lo = e.anchor.as_fractions()
        axis = e.free[0]
        a = tuple(int(c * unit) for c in lo)
        b = tuple(int(c * unit) + (unit if i == axis else 0) for i, c in enumerate(lo))
        segs.add((a, b))
    adj = {}
    for a, b in segs:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    for k in adj:
        adj[k].sort()
    loops = []
    remaining = set(segs)
    while remaining:
        a, b = min(remaining)
        loop = [a, b]
        remaining.discard((a, b))
        while loop[-1] != loop[0]:
            cur, prev = loop[-1], loop[-2]
            nxt = min(p for p in adj[cur]
                      if p != prev and ((cur, p) in remaining or (p, cur) in remaining))
            remaining.discard((cur, nxt))
            remaining.discard((nxt, cur))
            loop.append(nxt)
        loops.append(loop[:-1])
    return loops


def render_patch_svg(patch, punctures=True, highlight_border=None):
    """SVG document for a patch; 1 lattice unit = lam**scale user units."""
    if not len(patch):
        return '<svg xmlns="http://www.w3.org/2000/svg"/>\n'
    d = patch.d
    lam = patch.tiles[0].proto.lam
    unit = lam ** max(_scale_of(patch), 1)
    cubes = [Cell(a, tuple(range(d))) for a in patch.cube_map()]
    boxes = [c.box() for c in cubes]
    lo = [min(b[0][i] for b in boxes) for i in range(d)]
    hi = [max(b[1][i] for b in boxes) for i in range(d)]
    if d == 1:
        lo = [lo[0], Fraction(0)]
        hi = [hi[0], Fraction(1)]
    x0, y0 = int(lo[0] * unit), int(lo[1] * unit)
    w, h = int((hi[0] - lo[0]) * unit), int((hi[1] - lo[1]) * unit)

    def fy(yint):
        # flip so the y axis points up
        return y0 + h - (yint - y0)

    out = []
    out.append('<?xml version="1.0" encoding="UTF-8"?>')
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" '
               f'viewBox="{x0} {y0} {w} {h}">')
    for t in patch.tiles:
        color = PALETTE[t.proto.index % len(PALETTE)]
        if d == 1:
            a = t.translation.as_fractions()[0]
            for c in sorted(t.proto.cells):
                cx = int((a + c[0]) * unit)
                out.append(f'<rect x="{cx}" y="{y0}" width="{unit}" height="{h}" '
                           f'fill="{color}" stroke="#222" '
                           f'stroke-width="{max(1, unit // 16)}"/>')
        else:
            for loop in _tile_polygons(t, unit):
                pts = " ".join(f"{x},{fy(y)}" for x, y in loop)
                out.append(f'<polygon points="{pts}" fill="{color}" '
                           f'stroke="#222" stroke-width="{max(1, unit // 16)}"/>')
        if punctures:
            p = t.pos.as_fractions()
            px = int(p[0] * unit)
            py = fy(int(p[1] * unit)) if d == 2 else y0 + h // 2
            out.append(f'<circle cx="{px}" cy="{py}" r="{max(1, unit // 8)}" '
                       f'fill="#000"/>')
    if highlight_border is not None:
        j = highlight_border
        bcells = support_boundary_cells(patch)
        cells = set()
        for bc in bcells:
            cells.update(c for c in bc.subcells() if c.dim == j)
        for c in sorted(cells, key=lambda c: c.sort_key()):
            blo, bhi = c.box()
            ax, ay = int(blo[0] * unit), int(blo[1] * unit) if d == 2 else y0
            bx = int(bhi[0] * unit)
            by = fy(int(bhi[1] * unit)) if d == 2 else y0 + h
            if c.dim == 0:
                cy = fy(ay) if d == 2 else y0 + h // 2
                out.append(f'<circle cx="{ax}" cy="{cy}" r="{max(2, unit // 6)}" '
                           f'fill="#d62728"/>')
            else:
                aya = fy(ay) if d == 2 else y0
                out.append(f'<line x1="{ax}" y1="{aya}" x2="{bx}" y2="{by}" '
                           f'stroke="#d62728" stroke-width="{max(2, unit // 8)}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
