"""Primal meshes and their barycentric dual partitions.

Two mesh families are supported: uniform interval partitions in 1D and
structured triangulations of a rectangle in 2D, where every cell is cut by
its lower-left to upper-right diagonal.  Vertex numbering is lexicographic
(x fastest) and computed arithmetically, never by coordinate matching.

The control volume of a vertex ``z`` is assembled element by element: inside
a triangle ``(z, a, b)`` it is the quadrilateral ``z, M_za, Q, M_zb`` where
``M`` are edge midpoints and ``Q`` is the barycenter.  Its boundary inside
the triangle consists of the two dual segments ``M_za -> Q`` and
``Q -> M_zb``.  In 1D the control volume of ``x_i`` is the interval between
the neighbouring element midpoints, and a dual "segment" is a single point
(the element midpoint) with a unit weight and normal +1 or -1.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


def _freeze(*arrays):
    for a in arrays:
        a.setflags(write=False)


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming simplicial mesh (intervals or triangles).

    ``interior_index[v]`` is the unknown number of vertex ``v`` or -1 on the
    boundary.  ``measures`` and ``grads`` hold the element sizes and the
    constant gradients of the nodal P1 basis functions, shape
    ``(n_elements, dim + 1, dim)``.
    """

    dim: int
    vertices: np.ndarray
    elements: np.ndarray
    boundary: np.ndarray
    domain_measure: float
    bounds: tuple
    interior_index: np.ndarray = field(init=False)
    measures: np.ndarray = field(init=False)
    grads: np.ndarray = field(init=False)
    h: float = field(init=False)

    def __post_init__(self):
        vertices = np.asarray(self.vertices, dtype=float).reshape(-1, self.dim)
        elements = np.asarray(self.elements, dtype=np.int64)
        boundary = np.asarray(self.boundary, dtype=bool)
        nv = len(vertices)
        if elements.ndim != 2 or elements.shape[1] != self.dim + 1:
            raise ValueError("elements must have dim + 1 vertices each")
        if elements.min() < 0 or elements.max() >= nv:
            raise ValueError("element vertex index out of range")
        srt = np.sort(elements, axis=1)
        if np.any(srt[:, 1:] == srt[:, :-1]):
            raise ValueError("element with repeated vertex")
        if boundary.shape != (nv,):
            raise ValueError("boundary flags must be given per vertex")

        measures, grads = _element_data(vertices[elements])
        if np.any(measures <= 0.0):
            bad = int(np.argmin(measures))
            raise ValueError(f"element {bad} is degenerate or clockwise")
        total = measures.sum()
        if abs(total - self.domain_measure) > 1e-12 * self.domain_measure:
            raise ValueError("element measures do not cover the domain")

        interior = np.full(nv, -1, dtype=np.int64)
        interior[~boundary] = np.arange(np.count_nonzero(~boundary))
        diam = np.zeros(len(elements))
        for i in range(self.dim + 1):
            for j in range(i + 1, self.dim + 1):
                d = vertices[elements[:, j]] - vertices[elements[:, i]]
                diam = np.maximum(diam, np.linalg.norm(d, axis=1))

        _freeze(vertices, elements, boundary, interior, measures, grads)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "boundary", boundary)
        object.__setattr__(self, "interior_index", interior)
        object.__setattr__(self, "measures", measures)
        object.__setattr__(self, "grads", grads)
        object.__setattr__(self, "h", float(diam.max()))

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_elements(self):
        return len(self.elements)

    @property
    def n_interior(self):
        return int(np.count_nonzero(~self.boundary))

    @property
    def interior_vertices(self):
        return np.flatnonzero(~self.boundary)

    def expand(self, values):
        """Scatter interior values into a full vertex vector (zero on the boundary)."""
        full = np.zeros(self.n_vertices)
        full[~self.boundary] = values
        return full

    def locate(self, point, tol=1e-12):
        """Return ``(element id, barycentric coordinates)`` of a point in the closed domain."""
        p = np.atleast_1d(np.asarray(point, dtype=float))
        if p.shape != (self.dim,):
            raise ValueError(f"point must have {self.dim} coordinates")
        lo, hi = self.bounds
        if np.any(p < np.asarray(lo) - tol) or np.any(p > np.asarray(hi) + tol):
            raise ValueError(f"point {p.tolist()} lies outside the domain")
        x0 = self.vertices[self.elements[:, 0]]
        lam_rest = np.einsum("ekd,ed->ek", self.grads[:, 1:], p - x0)
        lam = np.column_stack([1.0 - lam_rest.sum(axis=1), lam_rest])
        inside = np.flatnonzero(np.all(lam >= -tol, axis=1))
        if inside.size == 0:
            raise ValueError(f"point {p.tolist()} lies outside the domain")
        e = int(inside[0])
        return e, lam[e]


def _element_data(coords):
    """Measures and P1 basis gradients for an array of simplices."""
    ne, nloc, dim = coords.shape
    if dim == 1:
        length = coords[:, 1, 0] - coords[:, 0, 0]
        grads = np.empty((ne, 2, 1))
        with np.errstate(divide="ignore"):
            grads[:, 0, 0] = -1.0 / length
            grads[:, 1, 0] = 1.0 / length
        return length, grads
    p0, p1, p2 = coords[:, 0], coords[:, 1], coords[:, 2]
    det = (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1])
    grads = np.empty((ne, 3, 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        grads[:, 0] = np.column_stack([p1[:, 1] - p2[:, 1], p2[:, 0] - p1[:, 0]]) / det[:, None]
        grads[:, 1] = np.column_stack([p2[:, 1] - p0[:, 1], p0[:, 0] - p2[:, 0]]) / det[:, None]
        grads[:, 2] = np.column_stack([p0[:, 1] - p1[:, 1], p1[:, 0] - p0[:, 0]]) / det[:, None]
    return 0.5 * det, grads


def element_geometry(mesh, element):
    """Area (length), vertex coordinates and basis gradients of one element."""
    if not 0 <= element < mesh.n_elements:
        raise IndexError(f"element {element} out of range [0, {mesh.n_elements})")
    return {
        "area": float(mesh.measures[element]),
        "vertices": mesh.vertices[mesh.elements[element]].copy(),
        "grads": mesh.grads[element].copy(),
    }


def simplex_geometry(coords):
    """Area and basis gradients of a single simplex given by its vertex coordinates.

    Raises ``ValueError`` for degenerate input.
    """
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    measure, grads = _element_data(coords[None])
    if not np.isfinite(grads).all() or abs(measure[0]) <= 1e-14 * max(1.0, np.abs(coords).max()) ** coords.shape[1]:
        raise ValueError("degenerate simplex")
    return float(measure[0]), grads[0]


def build_interval_mesh(n, a=0.0, b=1.0):
    """Uniform partition of [a, b] into ``n`` elements."""
    if int(n) != n or n < 1:
        raise ValueError("number of elements must be a positive integer")
    if not a < b:
        raise ValueError("interval requires a < b")
    n = int(n)
    x = a + (b - a) * np.arange(n + 1) / n
    x[-1] = b
    elements = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    boundary = np.zeros(n + 1, dtype=bool)
    boundary[[0, -1]] = True
    return Mesh(1, x[:, None], elements, boundary, float(b - a), ((a,), (b,)))


def build_structured_triangulation(nx, ny, domain=((0.0, 0.0), (1.0, 1.0))):
    """Split an ``nx`` by ``ny`` grid of rectangles into ``2 nx ny`` triangles.

    ``domain`` is ``((x0, y0), (x1, y1))``.  Each cell is cut along the
    diagonal from its lower-left to its upper-right corner, giving interior
    vertices six neighbours.
    """
    for k in (nx, ny):
        if int(k) != k or k < 1:
            raise ValueError("subdivisions must be positive integers")
    nx, ny = int(nx), int(ny)
    (x0, y0), (x1, y1) = domain
    if not (x1 > x0 and y1 > y0):
        raise ValueError("domain must have positive side lengths")
    xs = x0 + (x1 - x0) * np.arange(nx + 1) / nx
    ys = y0 + (y1 - y0) * np.arange(ny + 1) / ny
    xs[-1], ys[-1] = x1, y1
    X, Y = np.meshgrid(xs, ys)  # row j holds y = ys[j]
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    v00 = (j * (nx + 1) + i).ravel()
    v10, v01, v11 = v00 + 1, v00 + nx + 1, v00 + nx + 2
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    elements = np.stack([lower, upper], axis=1).reshape(-1, 3)

    I, J = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1))
    boundary = ((I == 0) | (I == nx) | (J == 0) | (J == ny)).ravel()
    measure = float((x1 - x0) * (y1 - y0))
    return Mesh(2, vertices, elements, boundary, measure, ((x0, y0), (x1, y1)))


@dataclass(frozen=True, eq=False)
class DualMesh:
    """Barycentric control volumes of a :class:`Mesh`.

    Segment arrays are aligned: segment ``s`` lies in element
    ``seg_element[s]``, bounds the control volume of ``seg_vertex[s]``
    (local number ``seg_local[s]``) and runs from ``seg_p1[s]`` to
    ``seg_p2[s]`` with outward unit normal ``seg_normal[s]``.
    ``subcell_area[e, l]`` is the part of element ``e`` owned by its local
    vertex ``l``.
    """

    mesh: Mesh
    cv_area: np.ndarray
    subcell_area: np.ndarray
    subcell_polygons: np.ndarray
    seg_element: np.ndarray
    seg_local: np.ndarray
    seg_vertex: np.ndarray
    seg_p1: np.ndarray
    seg_p2: np.ndarray
    seg_normal: np.ndarray
    seg_length: np.ndarray

    @property
    def seg_midpoint(self):
        return 0.5 * (self.seg_p1 + self.seg_p2)

    @property
    def n_segments(self):
        return len(self.seg_element)


def _shoelace(poly):
    x, y = poly[..., 0], poly[..., 1]
    return 0.5 * np.sum(x * np.roll(y, -1, axis=-1) - np.roll(x, -1, axis=-1) * y, axis=-1)


def build_dual_partition(mesh):
    """Construct the barycentric dual of ``mesh``."""
    coords = mesh.vertices[mesh.elements]  # (ne, nloc, dim)
    ne, nloc, dim = coords.shape
    elem_ids = np.arange(ne)

    if dim == 1:
        mid = coords.mean(axis=1)  # (ne, 1)
        subcell = np.repeat(0.5 * mesh.measures[:, None], 2, axis=1)
        polys = np.stack([np.stack([coords[:, 0], mid], axis=1),
                          np.stack([coords[:, 1], mid], axis=1)], axis=1)
        seg_element = np.repeat(elem_ids, 2)
        seg_local = np.tile([0, 1], ne)
        seg_vertex = mesh.elements.ravel()
        p = np.repeat(mid, 2, axis=0)
        normal = np.tile([[1.0], [-1.0]], (ne, 1))
        length = np.ones(2 * ne)
        p1, p2 = p, p.copy()
    else:
        bary = coords.mean(axis=1)
        polys = np.empty((ne, 3, 4, 2))
        segs = np.empty((ne, 3, 2, 2, 2))  # elem, local vertex, segment, endpoint, xy
        for l in range(3):
            z = coords[:, l]
            ma = 0.5 * (z + coords[:, (l + 1) % 3])
            mb = 0.5 * (z + coords[:, (l + 2) % 3])
            polys[:, l] = np.stack([z, ma, bary, mb], axis=1)
            segs[:, l, 0] = np.stack([ma, bary], axis=1)
            segs[:, l, 1] = np.stack([bary, mb], axis=1)
        subcell = _shoelace(polys)
        seg_element = np.repeat(elem_ids, 6)
        seg_local = np.tile(np.repeat([0, 1, 2], 2), ne)
        seg_vertex = mesh.elements[seg_element, seg_local]
        flat = segs.reshape(-1, 2, 2)
        p1, p2 = flat[:, 0].copy(), flat[:, 1].copy()
        d = p2 - p1
        length = np.linalg.norm(d, axis=1)
        # Segments are traversed counterclockwise around their vertex, so the
        # outward normal is the tangent rotated clockwise.
        normal = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]

    cv_area = np.bincount(mesh.elements.ravel(), weights=subcell.ravel(), minlength=mesh.n_vertices)
    arrays = (cv_area, subcell, polys, seg_element, seg_local, seg_vertex, p1, p2, normal, length)
    _freeze(*arrays)
    return DualMesh(mesh, *arrays)


def write_mesh(mesh, dual: Optional[DualMesh], path):
    """Plain-text dump: ``v`` vertex lines, ``e`` element lines, ``d`` dual segment lines."""
    with open(path, "w") as fh:
        for v, x in enumerate(mesh.vertices):
            tail = " boundary" if mesh.boundary[v] else ""
            fh.write("v " + " ".join(f"{c:.17g}" for c in x) + tail + "\n")
        for el in mesh.elements:
            fh.write("e " + " ".join(str(i) for i in el) + "\n")
        if dual is None:
            return
        for s in range(dual.n_segments):
            nums = np.concatenate([dual.seg_p1[s], dual.seg_p2[s], dual.seg_normal[s]])
            fh.write(f"d {dual.seg_element[s]} {dual.seg_vertex[s]} "
                     + " ".join(f"{c:.17g}" for c in nums) + "\n")
