"""Synthesized mesh distortions at four severity levels per type, for
benchmark generation and metric sanity checks: impulse noise, white
noise, Taubin smoothing, unproportional scaling, quadric-error edge
collapse, and outlying floating spheres. Every distortion is a pure
function of (mesh, parameters, seed)."""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse

from .mesh import Mesh, build_adjacency, mesh_scale
from .shapes import icosphere

__all__ = [
    "DistortionSpec",
    "DISTORTION_LEVELS",
    "impulse_noise",
    "white_noise",
    "taubin_smooth",
    "unproportional_scale",
    "decimate_edge_collapse",
    "outlying_spheres",
    "default_suite_specs",
    "distortion_suite",
    "write_manifest",
]

# four severity levels per distortion type
DISTORTION_LEVELS = {
    "impulse": [
        {"r_percent": 1, "sigma_percent": 0.5},
        {"r_percent": 5, "sigma_percent": 2},
        {"r_percent": 8, "sigma_percent": 3},
        {"r_percent": 1, "sigma_percent": 5},
    ],
    "white-noise": [
        {"sigma_percent": 0.1},
        {"sigma_percent": 0.2},
        {"sigma_percent": 0.3},
        {"sigma_percent": 0.5},
    ],
    "smoothing": [
        {"iterations": 5},
        {"iterations": 20},
        {"iterations": 50},
        {"iterations": 200},
    ],
    "unproportional-scale": [
        {"sx_percent": 98, "sz_percent": 102},
        {"sx_percent": 95, "sz_percent": 105},
        {"sx_percent": 90, "sz_percent": 110},
        {"sx_percent": 80, "sz_percent": 120},
    ],
    "low-resolution": [
        {"target_faces": 5000},
        {"target_faces": 2000},
        {"target_faces": 1000},
        {"target_faces": 500},
    ],
    "outlying": [
        {"n_spheres": 20, "r_fraction": 0.002},
        {"n_spheres": 30, "r_fraction": 0.004},
        {"n_spheres": 40, "r_fraction": 0.006},
        {"n_spheres": 80, "r_fraction": 0.008},
    ],
}

_TYPE_ORDER = tuple(DISTORTION_LEVELS)


@dataclass(frozen=True)
class DistortionSpec:
    """A (type, level) with its resolved parameters; parameters default
    to the level table above but may be overridden."""

    type: str
    level: int
    params: dict
    seed: int = 0

    def __post_init__(self):
        if self.type not in DISTORTION_LEVELS:
            raise ValueError(f"unknown distortion type {self.type!r}")
        if not 1 <= self.level <= 4:
            raise ValueError("distortion level must be 1..4")

    @classmethod
    def standard(cls, type: str, level: int, seed: int = 0, **overrides):
        if type not in DISTORTION_LEVELS:
            raise ValueError(f"unknown distortion type {type!r}")
        params = dict(DISTORTION_LEVELS[type][level - 1])
        params.update(overrides)
        return cls(type=type, level=level, params=params, seed=seed)

    def name(self) -> str:
        return f"{self.type}_l{self.level}"

    def apply(self, mesh: Mesh) -> Mesh:
        fn = {
            "impulse": lambda m: impulse_noise(m, seed=self.seed, **self.params),
            "white-noise": lambda m: white_noise(m, seed=self.seed, **self.params),
            "smoothing": lambda m: taubin_smooth(m, **self.params),
            "unproportional-scale": lambda m: unproportional_scale(m, **self.params),
            "low-resolution": lambda m: decimate_edge_collapse(m, **self.params),
            "outlying": lambda m: outlying_spheres(m, seed=self.seed, **self.params),
        }[self.type]
        return fn(mesh)


def impulse_noise(mesh: Mesh, r_percent: float, sigma_percent: float, seed=0) -> Mesh:
    """Gaussian displacement of floor(r% * N) randomly chosen vertices
    with per-axis std sigma% of the mesh scale; all other vertices stay
    bit-identical."""
    if r_percent < 0 or sigma_percent < 0:
        raise ValueError("percentages must be non-negative")
    k = int(np.floor(r_percent / 100.0 * mesh.n_vertices))
    if k == 0:
        return mesh
    rng = np.random.default_rng(seed)
    picked = rng.choice(mesh.n_vertices, size=k, replace=False)
    std = sigma_percent / 100.0 * mesh_scale(mesh)
    v = mesh.vertices.copy()
    v[picked] += rng.standard_normal((k, 3)) * std
    return mesh.with_vertices(v)


def white_noise(mesh: Mesh, sigma_percent: float, seed=0) -> Mesh:
    """Gaussian displacement of every vertex with per-axis std sigma% of
    the mesh scale. The unit draws do not depend on sigma, so the same
    seed yields displacement fields that scale with sigma."""
    if sigma_percent < 0:
        raise ValueError("sigma must be non-negative")
    if sigma_percent == 0:
        return mesh
    rng = np.random.default_rng(seed)
    std = sigma_percent / 100.0 * mesh_scale(mesh)
    return mesh.with_vertices(
        mesh.vertices + rng.standard_normal((mesh.n_vertices, 3)) * std
    )


def taubin_smooth(mesh: Mesh, iterations: int, lam: float = 0.5, mu: float = -0.53) -> Mesh:
    """Alternating shrink/inflate smoothing with uniform umbrella
    weights: x += lam * (mean of neighbors - x), then the same step with
    mu. Topology unchanged."""
    if iterations < 0:
        raise ValueError("iterations must be non-negative")
    if iterations == 0:
        return mesh
    adjacency = build_adjacency(mesh)
    degrees = np.array([len(n) for n in adjacency.neighbors], dtype=np.float64)
    if np.any(degrees == 0):
        raise ValueError(
            f"vertex {int(np.flatnonzero(degrees == 0)[0])} is isolated"
        )
    i = adjacency.edges[:, 0]
    j = adjacency.edges[:, 1]
    n = mesh.n_vertices
    rows = np.concatenate([i, j])
    cols = np.concatenate([j, i])
    avg = sparse.coo_matrix(
        (1.0 / degrees[rows], (rows, cols)), shape=(n, n)
    ).tocsr()
    v = mesh.vertices.copy()
    for _ in range(iterations):
        v += lam * (avg @ v - v)
        v += mu * (avg @ v - v)
    return mesh.with_vertices(v)


def unproportional_scale(mesh: Mesh, sx_percent: float, sz_percent: float) -> Mesh:
    """Stretch x to sx% and z to sz% of the original; y unchanged."""
    if sx_percent <= 0 or sz_percent <= 0:
        raise ValueError("scale percentages must be positive")
    v = mesh.vertices * np.array([sx_percent / 100.0, 1.0, sz_percent / 100.0])
    return mesh.with_vertices(v)


def outlying_spheres(
    mesh: Mesh, n_spheres: int, r_fraction: float, seed=0, sphere_subdivisions: int = 1
) -> Mesh:
    """Append n icosphere components of radius r * A, where A is the
    mesh scale, placed uniformly at random inside the cube of edge
    (1 + 6 r) * A centered at the vertex centroid."""
    if n_spheres < 0:
        raise ValueError("sphere count must be non-negative")
    if n_spheres == 0:
        return mesh
    rng = np.random.default_rng(seed)
    scale = mesh_scale(mesh)
    radius = r_fraction * scale
    half_edge = (1.0 + 6.0 * r_fraction) * scale / 2.0
    centroid = mesh.centroid()
    template = icosphere(sphere_subdivisions, radius=radius)
    verts = [mesh.vertices]
    faces = [mesh.faces]
    offset = mesh.n_vertices
    for _ in range(n_spheres):
        c = centroid + rng.uniform(-half_edge, half_edge, 3)
        verts.append(template.vertices + c)
        faces.append(template.faces + offset)
        offset += template.n_vertices
    return Mesh(np.vstack(verts), np.vstack(faces))


# ---------------------------------------------------------------------------
# Quadric-error edge collapse


def decimate_edge_collapse(mesh: Mesh, target_faces: int) -> Mesh:
    """Greedy quadric-error-metric decimation until the face count is at
    or below the target.

    Candidate collapses are ordered by a min-heap of quadric costs at the
    optimal merged position; a collapse is legal only if it passes the
    link condition (no non-manifold pinch) and flips or degenerates no
    surviving face. Raises if the target cannot be reached legally.
    """
    if target_faces < 4:
        raise ValueError("target face count must be at least 4")
    if mesh.n_faces <= target_faces:
        return mesh

    pos = mesh.vertices.copy()
    faces = {fi: tuple(int(x) for x in f) for fi, f in enumerate(mesh.faces)}
    vertex_faces = {}
    for fi, f in faces.items():
        for vi in f:
            vertex_faces.setdefault(vi, set()).add(fi)

    quadrics = np.zeros((len(pos), 4, 4))
    for f in faces.values():
        quadrics[list(f)] += _face_quadric(pos, f)

    version = np.zeros(len(pos), dtype=np.int64)
    heap = []

    def neighbors(v):
        out = set()
        for fi in vertex_faces.get(v, ()):
            out.update(faces[fi])
        out.discard(v)
        return out

    def push_edges_of(v):
        for u in neighbors(v):
            a, b = (v, u) if v < u else (u, v)
            cost, point = _edge_cost(quadrics[a] + quadrics[b], pos[a], pos[b])
            heapq.heappush(
                heap, (cost, a, b, int(version[a]), int(version[b]), tuple(point))
            )

    for v in list(vertex_faces):
        for u in neighbors(v):
            if v < u:
                cost, point = _edge_cost(quadrics[v] + quadrics[u], pos[v], pos[u])
                heapq.heappush(
                    heap, (cost, v, u, int(version[v]), int(version[u]), tuple(point))
                )

    n_faces = len(faces)
    while n_faces > target_faces and heap:
        cost, a, b, va, vb, point = heapq.heappop(heap)
        if version[a] != va or version[b] != vb:
            continue
        if b not in neighbors(a):
            continue
        shared = vertex_faces[a] & vertex_faces[b]
        # link condition: the common neighbors must be exactly the
        # vertices opposite the shared faces
        opposite = {v for fi in shared for v in faces[fi]} - {a, b}
        if neighbors(a) & neighbors(b) != opposite or len(shared) != 2:
            continue
        new_pos = np.array(point)
        if not _collapse_is_safe(pos, faces, vertex_faces, a, b, shared, new_pos):
            continue

        # merge b into a at the optimal position
        pos[a] = new_pos
        quadrics[a] = quadrics[a] + quadrics[b]
        for fi in list(shared):
            for vi in faces[fi]:
                vertex_faces[vi].discard(fi)
            del faces[fi]
            n_faces -= 1
        for fi in list(vertex_faces.get(b, ())):
            f = faces[fi]
            faces[fi] = tuple(a if vi == b else vi for vi in f)
            vertex_faces[a].add(fi)
        vertex_faces.pop(b, None)
        version[a] += 1
        version[b] += 1
        push_edges_of(a)

    if n_faces > target_faces:
        raise ValueError(
            f"cannot reach {target_faces} faces legally (stuck at {n_faces})"
        )

    used = sorted({vi for f in faces.values() for vi in f})
    remap = {old: new for new, old in enumerate(used)}
    new_faces = np.array(
        [[remap[vi] for vi in faces[fi]] for fi in sorted(faces)], dtype=np.int64
    )
    return Mesh(pos[used], new_faces)


def _face_quadric(pos, f):
    a, b, c = pos[f[0]], pos[f[1]], pos[f[2]]
    n = np.cross(b - a, c - a)
    norm = np.linalg.norm(n)
    if norm == 0.0:
        return np.zeros((4, 4))
    n = n / norm
    plane = np.append(n, -np.dot(n, a))
    return np.outer(plane, plane)


def _edge_cost(Q, pa, pb):
    """Quadric cost and position for a collapse: solve for the optimal
    point, falling back to the cheapest of midpoint and endpoints."""
    A = Q.copy()
    A[3] = (0.0, 0.0, 0.0, 1.0)
    try:
        x = np.linalg.solve(A, np.array([0.0, 0.0, 0.0, 1.0]))
        candidates = [x[:3]]
    except np.linalg.LinAlgError:
        candidates = []
    candidates.extend([(pa + pb) / 2.0, pa, pb])
    best_cost, best_point = np.inf, pa
    for p in candidates:
        h = np.append(p, 1.0)
        c = float(h @ Q @ h)
        if c < best_cost:
            best_cost, best_point = c, p
    return max(best_cost, 0.0), best_point


def _collapse_is_safe(pos, faces, vertex_faces, a, b, shared, new_pos):
    """No surviving face around a or b may degenerate or flip."""
    for v, other in ((a, b), (b, a)):
        for fi in vertex_faces[v]:
            if fi in shared:
                continue
            f = faces[fi]
            old = [pos[vi] for vi in f]
            new = [new_pos if vi in (a, b) else pos[vi] for vi in f]
            n_old = np.cross(old[1] - old[0], old[2] - old[0])
            n_new = np.cross(new[1] - new[0], new[2] - new[0])
            norm_new = np.linalg.norm(n_new)
            if norm_new < 1e-14:
                return False
            if np.dot(n_old, n_new) <= 0.0:
                return False
    return True


# ---------------------------------------------------------------------------
# Suite


def default_suite_specs(seed: int = 0, overrides: dict | None = None) -> list:
    """The 24 standard (type, level) specs with per-spec seeds derived
    deterministically from the master seed.

    ``overrides`` optionally maps a distortion type to per-level
    parameter overrides, e.g. {"low-resolution": {"target_faces": [...]}}
    with one value per level.
    """
    overrides = overrides or {}
    specs = []
    for ti, dtype in enumerate(_TYPE_ORDER):
        for level in range(1, 5):
            extra = {
                key: values[level - 1] for key, values in overrides.get(dtype, {}).items()
            }
            specs.append(
                DistortionSpec.standard(
                    dtype, level, seed=_derive_seed(seed, ti, level), **extra
                )
            )
    return specs


def _derive_seed(seed, type_index, level):
    return [int(seed), int(type_index), int(level)]


def distortion_suite(mesh: Mesh, seed: int = 0, specs: list | None = None) -> list:
    """Apply the full suite; returns [(DistortionSpec, Mesh)] in a
    deterministic order. Reruns with the same seed are bit-identical."""
    if specs is None:
        specs = default_suite_specs(seed)
    return [(spec, spec.apply(mesh)) for spec in specs]


def write_manifest(entries, path) -> None:
    """Manifest rows: {file, type, level, params, seed}."""
    payload = [
        {
            "file": fname,
            "type": spec.type,
            "level": spec.level,
            "params": spec.params,
            "seed": spec.seed,
        }
        for fname, spec in entries
    ]
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
