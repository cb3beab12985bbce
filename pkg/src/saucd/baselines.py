"""Spatial-domain comparison metrics used as baselines in the
correlation harness: Chamfer distance, unidirectional Hausdorff,
point-to-surface distance, normal difference, F-score, and voxel IoU.
Each is registered with its direction-of-better so reports can treat
all metrics uniformly."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .mesh import Mesh, face_areas, face_normals, mesh_scale, validate

__all__ = [
    "PointSample",
    "sample_surface",
    "chamfer_distance",
    "uhd",
    "point_to_surface",
    "normal_difference",
    "fscore",
    "voxel_iou",
    "BaselineMetric",
    "BASELINE_METRICS",
]


@dataclass(frozen=True)
class PointSample:
    """Points sampled on a mesh surface, with the face each came from and
    optionally the face normal there."""

    points: np.ndarray
    face_indices: np.ndarray
    normals: np.ndarray | None = None


def sample_surface(mesh: Mesh, k: int, seed=0, with_normals: bool = False) -> PointSample:
    """k area-weighted uniform surface samples (seeded)."""
    if k <= 0:
        raise ValueError("sample count must be positive")
    rng = np.random.default_rng(seed)
    areas = face_areas(mesh)
    total = areas.sum()
    if total <= 0:
        raise ValueError("mesh has no surface area")
    fi = rng.choice(mesh.n_faces, size=k, p=areas / total)
    # uniform barycentric coordinates via the square-root trick
    r1 = np.sqrt(rng.uniform(size=k))
    r2 = rng.uniform(size=k)
    a = mesh.vertices[mesh.faces[fi, 0]]
    b = mesh.vertices[mesh.faces[fi, 1]]
    c = mesh.vertices[mesh.faces[fi, 2]]
    pts = (1 - r1)[:, None] * a + (r1 * (1 - r2))[:, None] * b + (r1 * r2)[:, None] * c
    normals = face_normals(mesh)[fi] if with_normals else None
    return PointSample(points=pts, face_indices=fi, normals=normals)


def chamfer_distance(mesh_a: Mesh, mesh_b: Mesh) -> float:
    """Symmetric mean vertex-to-nearest-vertex distance: the average of
    the two directional means."""
    da = cKDTree(mesh_b.vertices).query(mesh_a.vertices)[0]
    db = cKDTree(mesh_a.vertices).query(mesh_b.vertices)[0]
    return float((da.mean() + db.mean()) / 2.0)


def uhd(mesh_a: Mesh, mesh_b: Mesh) -> float:
    """Unidirectional Hausdorff distance: the worst vertex of A measured
    to its nearest vertex of B."""
    d = cKDTree(mesh_b.vertices).query(mesh_a.vertices)[0]
    return float(d.max())


def _closest_point_distances(points: np.ndarray, mesh: Mesh) -> np.ndarray:
    """Exact point-to-triangle distances from each point to the nearest
    triangle of the mesh (vectorized Ericson closest-point test)."""
    v = mesh.vertices
    f = mesh.faces
    a = v[f[:, 0]]
    ab = v[f[:, 1]] - a
    ac = v[f[:, 2]] - a
    n_tri = len(f)
    out = np.empty(len(points))
    chunk = max(8, int(2e6 / max(n_tri, 1)))
    for start in range(0, len(points), chunk):
        p = points[start : start + chunk]
        ap = p[:, None, :] - a[None, :, :]
        d1 = np.einsum("tk,ptk->pt", ab, ap)
        d2 = np.einsum("tk,ptk->pt", ac, ap)
        bp = ap - ab[None, :, :]
        d3 = np.einsum("tk,ptk->pt", ab, bp)
        d4 = np.einsum("tk,ptk->pt", ac, bp)
        cp = ap - ac[None, :, :]
        d5 = np.einsum("tk,ptk->pt", ab, cp)
        d6 = np.einsum("tk,ptk->pt", ac, cp)
        vc = d1 * d4 - d3 * d2
        vb = d5 * d2 - d1 * d6
        va = d3 * d6 - d5 * d4

        def ratio(num, den):
            return np.divide(num, den, out=np.full_like(num, 0.5), where=den != 0.0)

        # Ericson region tests in order, first match wins per (point, tri)
        s = np.zeros_like(d1)
        t = np.zeros_like(d1)
        done = np.zeros(d1.shape, dtype=bool)

        def assign(mask, sv, tv):
            nonlocal done
            m = mask & ~done
            s[m] = sv[m] if isinstance(sv, np.ndarray) else sv
            t[m] = tv[m] if isinstance(tv, np.ndarray) else tv
            done = done | m

        assign((d1 <= 0) & (d2 <= 0), 0.0, 0.0)                       # vertex a
        assign((d3 >= 0) & (d4 <= d3), 1.0, 0.0)                      # vertex b
        assign((vc <= 0) & (d1 >= 0) & (d3 <= 0), ratio(d1, d1 - d3), 0.0)  # edge ab
        assign((d6 >= 0) & (d5 <= d6), 0.0, 1.0)                      # vertex c
        assign((vb <= 0) & (d2 >= 0) & (d6 <= 0), 0.0, ratio(d2, d2 - d6))  # edge ac
        w_bc = ratio(d4 - d3, (d4 - d3) + (d5 - d6))
        assign((va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0), 1.0 - w_bc, w_bc)  # edge bc
        denom = va + vb + vc
        assign(np.ones_like(done), ratio(vb, denom), ratio(vc, denom))  # interior

        closest = a[None, :, :] + s[..., None] * ab[None, :, :] + t[..., None] * ac[None, :, :]
        d2_all = np.sum((p[:, None, :] - closest) ** 2, axis=2)
        out[start : start + chunk] = np.sqrt(d2_all.min(axis=1))
    return out


def point_to_surface(mesh_a: Mesh, mesh_b: Mesh) -> float:
    """Mean exact distance from each vertex of A to the surface of B."""
    return float(_closest_point_distances(mesh_a.vertices, mesh_b).mean())


def normal_difference(mesh_a: Mesh, mesh_b: Mesh) -> float:
    """Mean angle (radians) between each face normal of A and the normal
    of the nearest face of B, matched by face centroid."""
    na = face_normals(mesh_a)
    nb = face_normals(mesh_b)
    ca = mesh_a.vertices[mesh_a.faces].mean(axis=1)
    cb = mesh_b.vertices[mesh_b.faces].mean(axis=1)
    nearest = cKDTree(cb).query(ca)[1]
    cos = np.clip(np.einsum("ij,ij->i", na, nb[nearest]), -1.0, 1.0)
    return float(np.arccos(cos).mean())


def fscore(
    mesh_a: Mesh,
    mesh_b: Mesh,
    threshold: float | None = None,
    samples: int = 10_000,
    seed: int = 0,
) -> float:
    """Harmonic mean of precision (fraction of A's surface samples within
    the threshold of B's surface) and recall (the converse). The default
    threshold is 1% of B's mesh scale."""
    if threshold is None:
        threshold = 0.01 * mesh_scale(mesh_b)
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    pa = sample_surface(mesh_a, samples, seed=seed).points
    pb = sample_surface(mesh_b, samples, seed=seed + 1).points
    precision = float((_closest_point_distances(pa, mesh_b) <= threshold).mean())
    recall = float((_closest_point_distances(pb, mesh_a) <= threshold).mean())
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def voxel_iou(mesh_a: Mesh, mesh_b: Mesh, resolution: int = 64) -> float:
    """Intersection-over-union of voxel occupancies on a shared
    resolution^3 grid over the joint bounding box; occupancy comes from
    parity ray casting along z."""
    if resolution < 8:
        raise ValueError("resolution must be at least 8")
    for name, m in (("first", mesh_a), ("second", mesh_b)):
        report = validate(m)
        if report.boundary_edges or report.nonmanifold_edges:
            raise ValueError(f"{name} mesh is not closed: {report.as_dict()}")
    lo = np.minimum(mesh_a.vertices.min(axis=0), mesh_b.vertices.min(axis=0))
    hi = np.maximum(mesh_a.vertices.max(axis=0), mesh_b.vertices.max(axis=0))
    span = np.where(hi > lo, hi - lo, 1.0)
    occ_a = _occupancy(mesh_a, lo, span, resolution)
    occ_b = _occupancy(mesh_b, lo, span, resolution)
    union = np.logical_or(occ_a, occ_b).sum()
    if union == 0:
        return 0.0
    return float(np.logical_and(occ_a, occ_b).sum() / union)


# ray offsets inside a cell: irrational fractions so axis-aligned
# geometry does not land rays exactly on triangle edges or vertices
_JITTER_X = (np.sqrt(2.0) - 1.0) / 2.0
_JITTER_Y = (np.sqrt(3.0) - 1.0) / 2.0


def _occupancy(mesh: Mesh, lo, span, res: int) -> np.ndarray:
    cell = span / res
    xs = lo[0] + (np.arange(res) + 0.5 + _JITTER_X * 0.5) * cell[0]
    ys = lo[1] + (np.arange(res) + 0.5 + _JITTER_Y * 0.5) * cell[1]
    z_centers = lo[2] + (np.arange(res) + 0.5) * cell[2]

    crossings = [[[] for _ in range(res)] for _ in range(res)]
    v = mesh.vertices
    for f in mesh.faces:
        tri = v[f]
        x0, y0 = tri[:, 0].min(), tri[:, 1].min()
        x1, y1 = tri[:, 0].max(), tri[:, 1].max()
        i0 = np.searchsorted(xs, x0, side="left")
        i1 = np.searchsorted(xs, x1, side="right")
        j0 = np.searchsorted(ys, y0, side="left")
        j1 = np.searchsorted(ys, y1, side="right")
        if i0 >= i1 or j0 >= j1:
            continue
        gx, gy = np.meshgrid(xs[i0:i1], ys[j0:j1], indexing="ij")
        # 2D barycentric test in the xy projection
        d = (tri[1, 1] - tri[2, 1]) * (tri[0, 0] - tri[2, 0]) + (
            tri[2, 0] - tri[1, 0]
        ) * (tri[0, 1] - tri[2, 1])
        if d == 0.0:
            continue  # projected triangle is a line; no parity contribution
        w0 = ((tri[1, 1] - tri[2, 1]) * (gx - tri[2, 0]) + (tri[2, 0] - tri[1, 0]) * (gy - tri[2, 1])) / d
        w1 = ((tri[2, 1] - tri[0, 1]) * (gx - tri[2, 0]) + (tri[0, 0] - tri[2, 0]) * (gy - tri[2, 1])) / d
        w2 = 1.0 - w0 - w1
        inside = (w0 > 0) & (w1 > 0) & (w2 > 0)
        if not inside.any():
            continue
        zhit = w0 * tri[0, 2] + w1 * tri[1, 2] + w2 * tri[2, 2]
        ii, jj = np.nonzero(inside)
        for k in range(len(ii)):
            crossings[i0 + ii[k]][j0 + jj[k]].append(zhit[ii[k], jj[k]])

    occ = np.zeros((res, res, res), dtype=bool)
    for i in range(res):
        for j in range(res):
            zs = crossings[i][j]
            if not zs:
                continue
            below = np.searchsorted(np.sort(zs), z_centers, side="left")
            occ[i, j] = below % 2 == 1
    return occ


@dataclass(frozen=True)
class BaselineMetric:
    name: str
    fn: object
    higher_is_better: bool


BASELINE_METRICS = {
    m.name: m
    for m in [
        BaselineMetric("chamfer", chamfer_distance, False),
        BaselineMetric("uhd", uhd, False),
        BaselineMetric("point-to-surface", point_to_surface, False),
        BaselineMetric("normal-difference", normal_difference, False),
        BaselineMetric("fscore", fscore, True),
        BaselineMetric("iou", voxel_iou, True),
    ]
}
