"""Triangle mesh core: representation, OBJ/PLY I/O, validation, and the
differential-geometry quantities (mixed Voronoi areas, cotangent edge
weights) that the Laplacian builders consume.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Mesh",
    "MeshAdjacency",
    "ValidationReport",
    "load_mesh",
    "write_mesh",
    "build_adjacency",
    "validate",
    "mesh_scale",
    "center",
    "face_areas",
    "face_normals",
    "mixed_voronoi_areas",
    "cotangent_weights",
]


class Mesh:
    """Immutable triangle mesh: N vertices (3D, float64) and M faces
    (vertex-index triples, counter-clockwise orientation).

    Construction validates that face indices are in range and pairwise
    distinct per face, and that no coordinate is NaN or infinite.
    """

    __slots__ = ("vertices", "faces")

    def __init__(self, vertices, faces):
        v = np.ascontiguousarray(vertices, dtype=np.float64)
        f = np.ascontiguousarray(faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError(f"vertices must be (N, 3), got {v.shape}")
        if f.size == 0:
            f = f.reshape(0, 3)
        if f.ndim != 2 or f.shape[1] != 3:
            raise ValueError(f"faces must be (M, 3), got {f.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("vertex coordinates must be finite")
        if f.size:
            if f.min() < 0 or f.max() >= len(v):
                raise ValueError(
                    f"face index out of range [0, {len(v)}): "
                    f"min {f.min()}, max {f.max()}"
                )
            repeated = (
                (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
            )
            if repeated.any():
                raise ValueError(
                    f"face {int(np.flatnonzero(repeated)[0])} repeats a vertex index"
                )
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    def __setattr__(self, name, value):
        raise AttributeError("Mesh is immutable")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def with_vertices(self, vertices) -> "Mesh":
        """Same topology, new vertex positions."""
        return Mesh(vertices, self.faces)

    def __repr__(self):
        return f"Mesh(n_vertices={self.n_vertices}, n_faces={self.n_faces})"


@dataclass(frozen=True)
class MeshAdjacency:
    """Edge and neighbor structure of a mesh.

    edges: (E, 2) array of undirected edges with i < j, lexicographically
    sorted. edge_faces[e] lists (face index, opposite vertex) for the one
    or more faces incident to edge e; more than two flags a non-manifold
    edge. neighbors[i] is the sorted array of vertices adjacent to i.
    """

    edges: np.ndarray
    edge_faces: tuple
    neighbors: tuple

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def boundary_edges(self) -> np.ndarray:
        """Indices of edges with exactly one incident face."""
        return np.array(
            [e for e, fl in enumerate(self.edge_faces) if len(fl) == 1], dtype=np.int64
        )

    def nonmanifold_edges(self) -> np.ndarray:
        """Indices of edges with more than two incident faces."""
        return np.array(
            [e for e, fl in enumerate(self.edge_faces) if len(fl) > 2], dtype=np.int64
        )


@dataclass(frozen=True)
class ValidationReport:
    degenerate_faces: int
    unreferenced_vertices: int
    nonmanifold_edges: int
    boundary_edges: int
    spectral_ready: bool

    def as_dict(self) -> dict:
        return {
            "degenerate_faces": self.degenerate_faces,
            "unreferenced_vertices": self.unreferenced_vertices,
            "nonmanifold_edges": self.nonmanifold_edges,
            "boundary_edges": self.boundary_edges,
            "spectral_ready": self.spectral_ready,
        }


# ---------------------------------------------------------------------------
# I/O


def load_mesh(path, format: str = "auto", triangulate: bool = False) -> Mesh:
    """Read a triangle mesh from an OBJ or ascii PLY file.

    Faces with more than three vertices are fan-triangulated when
    ``triangulate`` is set and rejected otherwise. Vertex order is
    preserved from the file.
    """
    path = Path(path)
    fmt = _resolve_format(path, format)
    text = path.read_text()
    if fmt == "obj":
        return _parse_obj(text, triangulate, path)
    return _parse_ply(text, triangulate, path)


def write_mesh(mesh: Mesh, path, format: str = "auto") -> None:
    """Write a mesh as OBJ or ascii PLY, chosen by extension for 'auto'."""
    path = Path(path)
    fmt = _resolve_format(path, format)
    if fmt == "obj":
        path.write_text(_format_obj(mesh))
    else:
        path.write_text(_format_ply(mesh))


def _resolve_format(path: Path, format: str) -> str:
    if format == "auto":
        ext = path.suffix.lower().lstrip(".")
        if ext in ("obj", "ply"):
            return ext
        raise ValueError(f"cannot infer mesh format from extension: {path.name}")
    if format in ("obj", "ply", "ply-ascii"):
        return "obj" if format == "obj" else "ply"
    raise ValueError(f"unknown mesh format: {format!r}")


def _fan(indices, triangulate, where):
    if len(indices) < 3:
        raise ValueError(f"{where}: face with fewer than 3 vertices")
    if len(indices) == 3:
        return [indices]
    if not triangulate:
        raise ValueError(
            f"{where}: non-triangle face with {len(indices)} vertices "
            "(pass triangulate=True to fan-triangulate)"
        )
    return [[indices[0], indices[k], indices[k + 1]] for k in range(1, len(indices) - 1)]


def _parse_obj(text: str, triangulate: bool, path) -> Mesh:
    vertices = []
    faces = []
    for ln, line in enumerate(text.splitlines(), start=1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            if len(parts) < 4:
                raise ValueError(f"{path}:{ln}: vertex record needs 3 coordinates")
            vertices.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            idx = []
            for tok in parts[1:]:
                raw = tok.split("/")[0]
                i = int(raw)
                if i == 0:
                    raise ValueError(f"{path}:{ln}: OBJ face indices are 1-based, got 0")
                if i < 0:
                    i = len(vertices) + 1 + i
                idx.append(i - 1)
            faces.extend(_fan(idx, triangulate, f"{path}:{ln}"))
    if not vertices:
        raise ValueError(f"{path}: no vertices found")
    try:
        return Mesh(np.array(vertices), np.array(faces) if faces else np.zeros((0, 3), int))
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc


def _parse_ply(text: str, triangulate: bool, path) -> Mesh:
    lines = text.splitlines()
    if not lines or lines[0].strip() != "ply":
        raise ValueError(f"{path}: not a PLY file")
    n_vertex = n_face = None
    vertex_props = []
    in_vertex_element = False
    body_start = None
    for ln, line in enumerate(lines[1:], start=1):
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "format":
            if parts[1] != "ascii":
                raise ValueError(f"{path}: only ascii PLY is supported")
        elif parts[0] == "element":
            in_vertex_element = parts[1] == "vertex"
            if parts[1] == "vertex":
                n_vertex = int(parts[2])
            elif parts[1] == "face":
                n_face = int(parts[2])
        elif parts[0] == "property" and in_vertex_element:
            vertex_props.append(parts[-1])
        elif parts[0] == "end_header":
            body_start = ln + 1
            break
    if body_start is None or n_vertex is None or n_face is None:
        raise ValueError(f"{path}: incomplete PLY header")
    try:
        cols = [vertex_props.index(c) for c in ("x", "y", "z")]
    except ValueError:
        raise ValueError(f"{path}: vertex element lacks x/y/z properties") from None

    body = [l.split() for l in lines[body_start:] if l.strip()]
    if len(body) < n_vertex + n_face:
        raise ValueError(f"{path}: truncated PLY body")
    vertices = np.array(
        [[float(row[c]) for c in cols] for row in body[:n_vertex]], dtype=np.float64
    )
    faces = []
    for k, row in enumerate(body[n_vertex : n_vertex + n_face]):
        cnt = int(row[0])
        idx = [int(x) for x in row[1 : 1 + cnt]]
        faces.extend(_fan(idx, triangulate, f"{path}: face {k}"))
    try:
        return Mesh(vertices, np.array(faces) if faces else np.zeros((0, 3), int))
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc


def _format_obj(mesh: Mesh) -> str:
    out = []
    for v in mesh.vertices:
        out.append(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}")
    for f in mesh.faces:
        out.append(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}")
    return "\n".join(out) + "\n"


def _format_ply(mesh: Mesh) -> str:
    out = [
        "ply",
        "format ascii 1.0",
        f"element vertex {mesh.n_vertices}",
        "property double x",
        "property double y",
        "property double z",
        f"element face {mesh.n_faces}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    for v in mesh.vertices:
        out.append(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}")
    for f in mesh.faces:
        out.append(f"3 {f[0]} {f[1]} {f[2]}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Structure


def build_adjacency(mesh: Mesh) -> MeshAdjacency:
    """Collect undirected edges, their incident faces with opposite
    vertices, and per-vertex neighbor sets."""
    edge_map = {}
    for fi, (a, b, c) in enumerate(mesh.faces):
        for i, j, opp in ((a, b, c), (b, c, a), (c, a, b)):
            key = (int(i), int(j)) if i < j else (int(j), int(i))
            edge_map.setdefault(key, []).append((fi, int(opp)))
    edges = np.array(sorted(edge_map), dtype=np.int64).reshape(-1, 2)
    edge_faces = tuple(tuple(edge_map[tuple(e)]) for e in edges)
    nbrs = [[] for _ in range(mesh.n_vertices)]
    for i, j in edges:
        nbrs[i].append(int(j))
        nbrs[j].append(int(i))
    neighbors = tuple(np.array(sorted(n), dtype=np.int64) for n in nbrs)
    return MeshAdjacency(edges=edges, edge_faces=edge_faces, neighbors=neighbors)


def validate(mesh: Mesh, adjacency: MeshAdjacency | None = None) -> ValidationReport:
    """Report mesh defects without raising.

    A mesh is spectral-ready when it has no zero-area faces, no
    non-manifold edges, no unreferenced vertices, and at least 4 vertices.
    """
    if adjacency is None:
        adjacency = build_adjacency(mesh)
    areas = face_areas(mesh)
    degenerate = int(np.count_nonzero(areas <= 0.0))
    referenced = np.zeros(mesh.n_vertices, dtype=bool)
    if mesh.n_faces:
        referenced[mesh.faces.ravel()] = True
    unreferenced = int(np.count_nonzero(~referenced))
    nonmanifold = len(adjacency.nonmanifold_edges())
    boundary = len(adjacency.boundary_edges())
    ready = (
        degenerate == 0
        and nonmanifold == 0
        and unreferenced == 0
        and mesh.n_vertices >= 4
    )
    return ValidationReport(
        degenerate_faces=degenerate,
        unreferenced_vertices=unreferenced,
        nonmanifold_edges=nonmanifold,
        boundary_edges=boundary,
        spectral_ready=ready,
    )


def require_spectral_ready(mesh: Mesh, adjacency: MeshAdjacency | None = None) -> None:
    report = validate(mesh, adjacency)
    if not report.spectral_ready:
        raise ValueError(f"mesh is not spectral-ready: {report.as_dict()}")


# ---------------------------------------------------------------------------
# Geometry


def mesh_scale(mesh: Mesh) -> float:
    """Largest bounding-box extent over the x, y, z axes."""
    if mesh.n_vertices == 0:
        raise ValueError("empty mesh has no scale")
    extent = mesh.vertices.max(axis=0) - mesh.vertices.min(axis=0)
    s = float(extent.max())
    if s <= 0.0:
        raise ValueError("mesh has zero extent along every axis")
    return s


def center(mesh: Mesh) -> Mesh:
    """Translate the vertex centroid to the origin; topology unchanged."""
    return mesh.with_vertices(mesh.vertices - mesh.centroid())


def face_areas(mesh: Mesh) -> np.ndarray:
    v = mesh.vertices
    f = mesh.faces
    cross = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
    return 0.5 * np.linalg.norm(cross, axis=1)


def face_normals(mesh: Mesh) -> np.ndarray:
    """Unit face normals; raises on zero-area faces."""
    v = mesh.vertices
    f = mesh.faces
    cross = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
    norms = np.linalg.norm(cross, axis=1)
    if np.any(norms == 0.0):
        raise ValueError(
            f"face {int(np.flatnonzero(norms == 0.0)[0])} is degenerate (zero area)"
        )
    return cross / norms[:, None]


def _face_cotangents(mesh: Mesh) -> np.ndarray:
    """(M, 3) cotangents of the angle at each face corner.

    Corner k of face (i0, i1, i2) is the angle at vertex ik. Raises on
    zero-area faces, naming the first offender.
    """
    v = mesh.vertices
    f = mesh.faces
    cots = np.empty((len(f), 3), dtype=np.float64)
    for k in range(3):
        a = v[f[:, (k + 1) % 3]] - v[f[:, k]]
        b = v[f[:, (k + 2) % 3]] - v[f[:, k]]
        cross = np.linalg.norm(np.cross(a, b), axis=1)
        if np.any(cross == 0.0):
            raise ValueError(
                f"face {int(np.flatnonzero(cross == 0.0)[0])} is degenerate (zero area)"
            )
        cots[:, k] = np.einsum("ij,ij->i", a, b) / cross
    return cots


def mixed_voronoi_areas(mesh: Mesh) -> np.ndarray:
    """Per-vertex mixed Voronoi areas.

    Non-obtuse triangles contribute the circumcentric region of each
    corner; an obtuse triangle contributes half its area to the obtuse
    corner and a quarter to each of the others. The per-vertex areas
    partition the surface: their sum equals the total face area.

    Raises if some vertex has no incident face (remove unreferenced
    vertices first) or if a face is degenerate.
    """
    v = mesh.vertices
    f = mesh.faces
    areas = np.zeros(mesh.n_vertices, dtype=np.float64)
    if mesh.n_faces == 0:
        raise ValueError("mesh has no faces")
    referenced = np.zeros(mesh.n_vertices, dtype=bool)
    referenced[f.ravel()] = True
    if not referenced.all():
        raise ValueError(
            f"vertex {int(np.flatnonzero(~referenced)[0])} has no incident face"
        )

    cots = _face_cotangents(mesh)
    tri_areas = face_areas(mesh)
    # squared edge lengths opposite each corner: edge (k+1, k+2) opposes corner k
    e2 = np.empty((len(f), 3), dtype=np.float64)
    for k in range(3):
        d = v[f[:, (k + 1) % 3]] - v[f[:, (k + 2) % 3]]
        e2[:, k] = np.einsum("ij,ij->i", d, d)

    obtuse_corner = np.argmin(cots, axis=1)
    is_obtuse = cots[np.arange(len(f)), obtuse_corner] < 0.0

    # circumcentric share of corner k: (|e_opp(k+1)|^2 cot(k+1) + |e_opp(k+2)|^2 cot(k+2)) / 8
    for k in range(3):
        share = (
            e2[:, (k + 1) % 3] * cots[:, (k + 1) % 3]
            + e2[:, (k + 2) % 3] * cots[:, (k + 2) % 3]
        ) / 8.0
        share = np.where(
            is_obtuse,
            np.where(obtuse_corner == k, tri_areas / 2.0, tri_areas / 4.0),
            share,
        )
        np.add.at(areas, f[:, k], share)
    return areas


def cotangent_weights(mesh: Mesh, adjacency: MeshAdjacency) -> np.ndarray:
    """Per-edge cotangent weights c_ij = cot(alpha) + cot(beta), aligned
    with ``adjacency.edges``.

    alpha and beta are the angles opposite the edge in its incident
    faces; a boundary edge uses its single opposite angle. Symmetry
    c_ij = c_ji holds exactly because each undirected edge is computed
    once.
    """
    cots = _face_cotangents(mesh)
    corner_of = [
        {(int(mesh.faces[fi, (k + 1) % 3]), int(mesh.faces[fi, (k + 2) % 3])): k
         for k in range(3)}
        for fi in range(mesh.n_faces)
    ]
    weights = np.zeros(adjacency.n_edges, dtype=np.float64)
    for e, (i, j) in enumerate(adjacency.edges):
        total = 0.0
        for fi, opp in adjacency.edge_faces[e]:
            lookup = corner_of[fi]
            k = lookup.get((int(i), int(j)))
            if k is None:
                k = lookup.get((int(j), int(i)))
            total += cots[fi, k]
        weights[e] = total
    return weights
