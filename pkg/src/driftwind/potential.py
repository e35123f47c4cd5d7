"""Piecewise-linear tiled potential on the unit square and its plane extension.

The unit-square potential is continuous, linear on every polygonal cell,
and extends to the plane by value(x+i, y+j) = value(x, y) + 2(i+j), which
makes the gradient field Z^2-periodic.  Headline cells:

  * four corner pentagons with gradient (3, 3),
  * a non-convex heptagon covering the middle band (gradient (2, 0)),
    including the full-width horizontal strip 2/3 - 3*delta <= y <= 2/3,
  * thin quads along the bottom/top edges with gradient (0, 2),
  * transition triangles/quads interpolating between those.

The corner pentagons as sketched in the source figure are not co-affine
with the labelled vertex values (the pentagon form gives 1 + 6*delta at
the 1 + 4*delta vertices), so each corner region is subdivided: the true
pentagon keeps the corner, two side triangles continue the neighbouring
quad/heptagon forms, and one transition quad bridges the gap.  The extra
(unlabelled) vertices sit on the lines where the adjacent affine forms
agree, which keeps every cell exactly affine and the whole surface
continuous.  Build-time checks verify all of this numerically.

Everything is immutable after build; evaluations are thread-safe.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import floor

import numpy as np

__all__ = [
    "Cell",
    "Tessellation",
    "build_tessellation",
    "eval_tilde",
    "grad_tilde",
    "locate_cell",
    "tessellation_to_json",
]


@dataclass(frozen=True)
class Cell:
    tag: str
    vertex_ids: tuple[int, ...]
    polygon: np.ndarray  # (k, 2), counterclockwise
    affine: tuple[float, float, float]  # value = a*x + b*y + c

    def gradient(self) -> np.ndarray:
        return np.array(self.affine[:2])


@dataclass(frozen=True)
class Tessellation:
    delta: float
    vertices: np.ndarray  # (n, 2)
    values: np.ndarray  # (n,)
    vertex_names: tuple[str, ...]
    cells: tuple[Cell, ...]

    @property
    def cell_count(self) -> int:
        return len(self.cells)

    def gradient_bounds(self) -> tuple[float, float]:
        """(min over cells of a+b, max over cells of max(a,b))."""
        sums = [c.affine[0] + c.affine[1] for c in self.cells]
        comps = [max(c.affine[0], c.affine[1]) for c in self.cells]
        return min(sums), max(comps)


def _polygon_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _fit_affine_exact(pts: list, vals: list) -> tuple[Fraction, Fraction, Fraction]:
    """Affine through three non-collinear vertices, in exact rational arithmetic.

    Exactness makes conditioning irrelevant: any non-degenerate triple
    gives the same (unique) rational coefficients.
    """
    n = len(pts)
    for i in range(n - 2):
        for j in range(i + 1, n - 1):
            for k in range(j + 1, n):
                (x1, y1), (x2, y2), (x3, y3) = pts[i], pts[j], pts[k]
                det = (x2 - x1) * (y3 - y1) - (y2 - y1) * (x3 - x1)
                if det != 0:
                    v1, v2, v3 = vals[i], vals[j], vals[k]
                    a = ((v2 - v1) * (y3 - y1) - (v3 - v1) * (y2 - y1)) / det
                    b = ((v3 - v1) * (x2 - x1) - (v2 - v1) * (x3 - x1)) / det
                    c = v1 - a * x1 - b * y1
                    return a, b, c
    raise ValueError("degenerate cell: all vertices collinear")


def _vertex_table(d: Fraction):
    """(name, x, y, value) rows; 'aux' names mark unlabelled interior vertices."""
    t = Fraction(1, 3)
    d = Fraction(d)
    zero, one, two, three, four = (Fraction(k) for k in range(5))
    half = Fraction(1, 2)
    return [
        # square boundary, counterclockwise from the origin
        ("b00", zero, zero, zero),
        ("b10", t, zero, one),
        ("b20", 2 * t, zero, one),
        ("b30", one, zero, two),
        ("b31", one, t, three),
        ("b32", one, 2 * t, three),
        ("b33", one, one, four),
        ("b23", 2 * t, one, three),
        ("b13", t, one, three),
        ("b03", zero, one, two),
        ("b02", zero, 2 * t, one),
        ("b01", zero, t, one),
        # labelled interior vertices (values 1+4d x4, 3-4d x4, 2)
        ("hep_l", 2 * d, t, 1 + 4 * d),
        ("hep_r", 1 - 2 * d, t, 3 - 4 * d),
        ("notch", half, 2 * t - 3 * d, two),
        ("q_bl", t, 2 * d, 1 + 4 * d),
        ("q_br", 2 * t, 2 * d, 1 + 4 * d),
        ("m_bl", t, 1 - 2 * d, 3 - 4 * d),
        ("m_br", 2 * t, 1 - 2 * d, 3 - 4 * d),
        ("top_l", 2 * d, 2 * t, 1 + 4 * d),
        ("top_r", 1 - 2 * d, 2 * t, 3 - 4 * d),
        # unlabelled transition vertices on affine-agreement lines
        ("aux_sw1", t - d / 2, 3 * d / 2, 1 + 3 * d),
        ("aux_sw0", 3 * d / 2, t - d / 2, 1 + 3 * d),
        ("aux_nwb", d, 2 * t + d, 1 + 6 * d),
        ("aux_nwr", t - d, 1 - d, 3 - 6 * d),
        ("aux_seb", 2 * t + d, d, 1 + 6 * d),
        ("aux_ser", 1 - d, t - d, 3 - 6 * d),
        ("aux_net", 2 * t + d / 2, 1 - 3 * d / 2, 3 - 3 * d),
        ("aux_nes", 1 - 3 * d / 2, 2 * t + d / 2, 3 - 3 * d),
    ]


# cell tag -> vertex names, counterclockwise up to orientation fix at build
_CELL_TABLE = [
    # bottom band
    ("sw-pentagon", ["b00", "b10", "aux_sw1", "aux_sw0", "b01"]),
    ("triangle-0", ["b10", "q_bl", "aux_sw1"]),
    ("triangle-1", ["b01", "aux_sw0", "hep_l"]),
    ("quad-0", ["aux_sw0", "aux_sw1", "q_bl", "hep_l"]),
    ("quad-1", ["b10", "b20", "q_br", "q_bl"]),
    ("triangle-2", ["hep_l", "q_bl", "notch"]),
    ("triangle-3", ["q_bl", "q_br", "notch"]),
    ("triangle-4", ["q_br", "hep_r", "notch"]),
    ("se-pentagon", ["b20", "b30", "b31", "aux_ser", "aux_seb"]),
    ("quad-2", ["b20", "aux_seb", "aux_ser", "q_br"]),
    ("triangle-5", ["q_br", "aux_ser", "hep_r"]),
    ("triangle-6", ["aux_ser", "b31", "hep_r"]),
    # middle band
    ("heptagon", ["b01", "hep_l", "notch", "hep_r", "b31", "b32", "b02"]),
    # top band
    ("nw-pentagon", ["b02", "aux_nwb", "aux_nwr", "b13", "b03"]),
    ("quad-3", ["b02", "top_l", "aux_nwr", "aux_nwb"]),
    ("triangle-7", ["top_l", "m_bl", "aux_nwr"]),
    ("triangle-8", ["aux_nwr", "m_bl", "b13"]),
    ("triangle-9", ["top_l", "m_br", "m_bl"]),
    ("triangle-10", ["top_l", "top_r", "m_br"]),
    ("quad-4", ["m_bl", "m_br", "b23", "b13"]),
    ("ne-pentagon", ["b23", "aux_net", "aux_nes", "b32", "b33"]),
    ("triangle-11", ["b23", "m_br", "aux_net"]),
    ("triangle-12", ["b32", "aux_nes", "top_r"]),
    ("quad-5", ["m_br", "top_r", "aux_nes", "aux_net"]),
]

# headline affine data checked at build time
_NAMED_AFFINES = {
    "sw-pentagon": (3.0, 3.0, 0.0),
    "se-pentagon": (3.0, 3.0, -1.0),
    "nw-pentagon": (3.0, 3.0, -1.0),
    "ne-pentagon": (3.0, 3.0, -2.0),
    "heptagon": (2.0, 0.0, 1.0),
}


def _shoelace_exact(pts: list) -> Fraction:
    s = Fraction(0)
    k = len(pts)
    for i in range(k):
        (x1, y1), (x2, y2) = pts[i], pts[(i + 1) % k]
        s += x1 * y2 - x2 * y1
    return s / 2


def _on_segment_exact(a, b, p) -> bool:
    cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    if cross != 0:
        return False
    dot = (p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])
    return 0 <= dot <= (b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2


def _on_boundary_exact(pts: list, p) -> bool:
    k = len(pts)
    return any(_on_segment_exact(pts[i], pts[(i + 1) % k], p) for i in range(k))


def _in_polygon_exact(pts: list, p) -> bool:
    x, y = p
    inside = False
    k = len(pts)
    for i in range(k):
        (x1, y1), (x2, y2) = pts[i], pts[(i + 1) % k]
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < xc:
                inside = not inside
    return inside


def build_tessellation(delta: float) -> Tessellation:
    """Construct and self-check the tessellation for 0 < delta < 1/10.

    All interpolation and consistency checking happens in exact rational
    arithmetic in delta; floats appear only in the returned object.
    """
    if not 0.0 < delta < 0.1:
        raise ValueError(f"delta must satisfy 0 < delta < 1/10, got {delta}")
    rows = _vertex_table(Fraction(delta))
    names = tuple(r[0] for r in rows)
    pts_exact = [(r[1], r[2]) for r in rows]
    vals_exact = [r[3] for r in rows]
    index = {n: i for i, n in enumerate(names)}

    cells = []
    total_area = Fraction(0)
    for tag, vnames in _CELL_TABLE:
        ids = tuple(index[n] for n in vnames)
        cpts = [pts_exact[i] for i in ids]
        area = _shoelace_exact(cpts)
        if area < 0:
            ids = ids[::-1]
            cpts = cpts[::-1]
            area = -area
        if area == 0:
            raise AssertionError(f"cell {tag} is degenerate")
        total_area += area
        a, b, c = _fit_affine_exact(cpts, [vals_exact[i] for i in ids])
        if a < 0 or b < 0 or a + b <= 0:
            raise AssertionError(f"cell {tag} gradient ({a}, {b}) violates nonnegativity")
        want = _NAMED_AFFINES.get(tag)
        if want is not None and (a, b, c) != tuple(Fraction(w) for w in want):
            raise AssertionError(f"cell {tag} affine {(a, b, c)} != expected {want}")
        # the affine must reproduce every tessellation vertex on this cell's
        # closure, which also guards T-junctions (hanging vertices mid-edge)
        for vid, p in enumerate(pts_exact):
            if _on_boundary_exact(cpts, p) or _in_polygon_exact(cpts, p):
                if a * p[0] + b * p[1] + c != vals_exact[vid]:
                    raise AssertionError(
                        f"cell {tag} affine disagrees with vertex {names[vid]}"
                    )
        poly = np.array([[float(px), float(py)] for px, py in cpts])
        cells.append(
            Cell(tag=tag, vertex_ids=ids, polygon=poly, affine=(float(a), float(b), float(c)))
        )
    if total_area != 1:
        raise AssertionError(f"cells do not cover the unit square: area sum {total_area}")

    verts = np.array([[float(p[0]), float(p[1])] for p in pts_exact])
    vals = np.array([float(v) for v in vals_exact])
    return Tessellation(
        delta=delta, vertices=verts, values=vals, vertex_names=names, cells=tuple(cells)
    )


def _point_on_boundary(poly: np.ndarray, p: np.ndarray, tol: float = 1e-12) -> bool:
    k = len(poly)
    for i in range(k):
        a, b = poly[i], poly[(i + 1) % k]
        ab = b - a
        ap = p - a
        L2 = float(ab @ ab)
        t = float(ap @ ab) / L2
        if -tol <= t <= 1 + tol:
            d = ap - t * ab
            if float(d @ d) <= tol:
                return True
    return False


def _point_in_polygon(poly: np.ndarray, p: np.ndarray) -> bool:
    # even-odd crossing rule; boundary points are resolved by _point_on_boundary
    x, y = p
    inside = False
    k = len(poly)
    for i in range(k):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % k]
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < xc:
                inside = not inside
    return inside


def locate_cell(t: Tessellation, x: float, y: float) -> int:
    """Index of the cell containing (x, y) in [0,1)^2.

    Points on shared edges resolve to the lowest cell index; this
    measure-zero convention is erased by mollification.
    """
    p = np.array([x, y])
    for i, c in enumerate(t.cells):
        if _point_in_polygon(c.polygon, p) or _point_on_boundary(c.polygon, p):
            return i
    raise ValueError(f"point ({x}, {y}) not located in any cell")


def _reduce(x: float, y: float) -> tuple[int, int, float, float]:
    i, j = floor(x), floor(y)
    u, v = x - i, y - j
    # guard roundoff pushing u,v to 1.0
    if u >= 1.0:
        i, u = i + 1, u - 1.0
    if v >= 1.0:
        j, v = j + 1, v - 1.0
    return i, j, u, v


def eval_tilde(t: Tessellation, x: float, y: float) -> float:
    """Plane potential: unit-square value plus 2(i+j) on tile (i, j)."""
    i, j, u, v = _reduce(x, y)
    a, b, c = t.cells[locate_cell(t, u, v)].affine
    return a * u + b * v + c + 2.0 * (i + j)


def grad_tilde(t: Tessellation, x: float, y: float) -> np.ndarray:
    """Plane gradient; Z^2-periodic and piecewise constant."""
    _, _, u, v = _reduce(x, y)
    return t.cells[locate_cell(t, u, v)].gradient()


def tessellation_to_json(t: Tessellation) -> str:
    """JSON document with vertices, values and cell polygons, for audit/plotting."""
    doc = {
        "delta": t.delta,
        "cell_count": t.cell_count,
        "vertices": [
            {
                "name": t.vertex_names[i],
                "x": float(t.vertices[i, 0]),
                "y": float(t.vertices[i, 1]),
                "value": float(t.values[i]),
            }
            for i in range(len(t.vertices))
        ],
        "cells": [
            {
                "tag": c.tag,
                "vertices": list(c.vertex_ids),
                "affine": {"a": c.affine[0], "b": c.affine[1], "c": c.affine[2]},
            }
            for c in t.cells
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)
