"""Procedural closed-mesh constructors used as fixtures and by the
distortion synthesizer (floating icospheres)."""

from __future__ import annotations

import numpy as np
from scipy.spatial import ConvexHull

from .mesh import Mesh

__all__ = ["tetrahedron", "cube", "icosphere", "random_convex_hull", "bumpy_sphere"]


def tetrahedron(scale: float = 1.0) -> Mesh:
    """Regular tetrahedron inscribed in a cube of the given edge length."""
    v = np.array(
        [[0, 0, 0], [1, 1, 0], [1, 0, 1], [0, 1, 1]], dtype=np.float64
    ) * scale
    f = np.array([[0, 2, 1], [0, 3, 2], [0, 1, 3], [1, 2, 3]])
    return Mesh(v, f)


def cube(edge: float = 1.0) -> Mesh:
    """Axis-aligned cube with fan-triangulated quads (8 vertices, 12 faces)."""
    v = np.array(
        [
            [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
            [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
        ],
        dtype=np.float64,
    ) * edge
    quads = [
        [0, 3, 2, 1],  # bottom
        [4, 5, 6, 7],  # top
        [0, 1, 5, 4],
        [1, 2, 6, 5],
        [2, 3, 7, 6],
        [3, 0, 4, 7],
    ]
    f = []
    for q in quads:
        f.append([q[0], q[1], q[2]])
        f.append([q[0], q[2], q[3]])
    return Mesh(v, np.array(f))


def icosphere(subdivisions: int = 2, radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> Mesh:
    """Subdivided icosahedron projected onto a sphere.

    Vertex counts grow as 12, 42, 162, 642, 2562 for subdivisions 0..4.
    """
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    v /= np.linalg.norm(v[0])
    f = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    for _ in range(subdivisions):
        v, f = _subdivide(v, f)
        v /= np.linalg.norm(v, axis=1)[:, None]
    v = v * radius + np.asarray(center, dtype=np.float64)
    return Mesh(v, f)


def _subdivide(v, f):
    verts = list(v)
    midpoint = {}

    def mid(a, b):
        key = (a, b) if a < b else (b, a)
        if key not in midpoint:
            midpoint[key] = len(verts)
            verts.append((v[a] + v[b]) / 2.0)
        return midpoint[key]

    out = []
    for a, b, c in f:
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        out.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]])
    return np.array(verts), np.array(out, dtype=np.int64)


def random_convex_hull(n_points: int, seed: int, radius: float = 1.0) -> Mesh:
    """Convex hull of ``n_points`` random directions on a sphere with mild
    radial jitter; every input point lands on the hull, so the mesh has
    exactly ``n_points`` vertices and is closed."""
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_points, 3))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    r = radius * (1.0 + 0.05 * rng.uniform(-1.0, 1.0, n_points))
    pts = dirs * r[:, None]
    hull = ConvexHull(pts)
    # reindex to hull vertices and orient faces outward
    order = hull.vertices
    remap = np.full(n_points, -1, dtype=np.int64)
    remap[order] = np.arange(len(order))
    v = pts[order]
    f = remap[hull.simplices]
    centroid = v.mean(axis=0)
    fc = v[f].mean(axis=1)
    normals = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
    flip = np.einsum("ij,ij->i", normals, fc - centroid) < 0
    f[flip] = f[flip][:, [0, 2, 1]]
    return Mesh(v, f)


def bumpy_sphere(subdivisions: int = 2, amplitude: float = 0.15, seed: int = 0) -> Mesh:
    """Icosphere with a smooth random radial deformation: a few random
    low-frequency sinusoids of the coordinates, so topology and closure
    are preserved."""
    rng = np.random.default_rng(seed)
    base = icosphere(subdivisions)
    v = base.vertices.copy()
    r = np.ones(len(v))
    for _ in range(4):
        direction = rng.standard_normal(3)
        direction /= np.linalg.norm(direction)
        freq = rng.uniform(1.0, 3.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        r += (amplitude / 4.0) * np.sin(freq * (v @ direction) * np.pi + phase)
    return base.with_vertices(v * r[:, None])
