"""Discrete Laplace-Beltrami operators on triangle meshes.

Three variants are built here: the purely combinatorial graph Laplacian
L = D - A, the classical cotangent operator normalized by each row's
mixed Voronoi area (asymmetric in general, and not guaranteed positive
semidefinite), and a symmetric revision that normalizes each edge weight
by sqrt(A_i * A_j) and takes the absolute value of the cotangent sum.
The revision is diagonally dominant with non-positive off-diagonals, so
the Gershgorin circle theorem confines its spectrum to [0, 2 max L_ii].
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse

from .mesh import Mesh, MeshAdjacency, build_adjacency, cotangent_weights, \
    mixed_voronoi_areas, require_spectral_ready

__all__ = [
    "PsdReport",
    "build_topology_laplacian",
    "build_cotan_laplacian",
    "build_revised_cotan_laplacian",
    "build_laplacian",
    "check_psd",
    "nondelaunay_tetrahedron",
    "export_triplets",
    "LAPLACIAN_VARIANTS",
]

LAPLACIAN_VARIANTS = ("topology", "cotan", "revised")


@dataclass(frozen=True)
class PsdReport:
    """Outcome of a positive-semidefiniteness check.

    ``gershgorin_bound`` is 2 max_i L_ii, the upper end of the interval
    that contains every eigenvalue of the revised operator; the check
    passes when the smallest eigenvalue is >= -tol * bound.
    """

    min_eigenvalue: float
    gershgorin_bound: float
    tol: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "min_eigenvalue": self.min_eigenvalue,
            "gershgorin_bound": self.gershgorin_bound,
            "tol": self.tol,
            "passed": self.passed,
        }


def build_topology_laplacian(mesh: Mesh, adjacency: MeshAdjacency | None = None):
    """Graph Laplacian L = D - A of the edge graph (dimensionless)."""
    if adjacency is None:
        adjacency = build_adjacency(mesh)
    n = mesh.n_vertices
    i = adjacency.edges[:, 0]
    j = adjacency.edges[:, 1]
    ones = np.ones(len(i))
    adj = sparse.coo_matrix((ones, (i, j)), shape=(n, n))
    adj = (adj + adj.T).tocsr()
    deg = np.asarray(adj.sum(axis=1)).ravel()
    return (sparse.diags(deg) - adj).tocsr()


def build_cotan_laplacian(
    mesh: Mesh,
    adjacency: MeshAdjacency | None = None,
    areas: np.ndarray | None = None,
    symmetrize: bool = False,
):
    """Classical cotangent operator with row normalization 1/(2 A_i).

    The raw matrix is asymmetric whenever the mixed Voronoi areas differ;
    ``symmetrize`` replaces it by (L + L^T) / 2, which is the form whose
    eigenvalues are real and which can fail positive semidefiniteness on
    non-Delaunay meshes.
    """
    if adjacency is None:
        adjacency = build_adjacency(mesh)
    require_spectral_ready(mesh, adjacency)
    if areas is None:
        areas = mixed_voronoi_areas(mesh)
    if np.any(areas <= 0.0):
        raise ValueError("mixed Voronoi areas must be positive")
    w = cotangent_weights(mesh, adjacency)
    i = adjacency.edges[:, 0]
    j = adjacency.edges[:, 1]
    n = mesh.n_vertices
    rows = np.concatenate([i, j])
    cols = np.concatenate([j, i])
    vals = np.concatenate([-w / (2.0 * areas[i]), -w / (2.0 * areas[j])])
    L = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    diag = -np.asarray(L.sum(axis=1)).ravel()
    L = L + sparse.diags(diag)
    if symmetrize:
        L = (L + L.T) / 2.0
    return L.tocsr()


def build_revised_cotan_laplacian(
    mesh: Mesh,
    adjacency: MeshAdjacency | None = None,
    areas: np.ndarray | None = None,
):
    """Symmetrically normalized operator with absolute cotangent weights:
    L_ij = -|c_ij| / (2 sqrt(A_i A_j)), diagonal = negative row sum.

    Exactly symmetric, zero row sums, non-positive off-diagonals; its
    spectrum lies in [0, 2 max L_ii].
    """
    if adjacency is None:
        adjacency = build_adjacency(mesh)
    require_spectral_ready(mesh, adjacency)
    if areas is None:
        areas = mixed_voronoi_areas(mesh)
    if np.any(areas <= 0.0):
        raise ValueError("mixed Voronoi areas must be positive")
    w = np.abs(cotangent_weights(mesh, adjacency))
    i = adjacency.edges[:, 0]
    j = adjacency.edges[:, 1]
    n = mesh.n_vertices
    off = -w / (2.0 * np.sqrt(areas[i] * areas[j]))
    rows = np.concatenate([i, j])
    cols = np.concatenate([j, i])
    vals = np.concatenate([off, off])
    L = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    diag = np.zeros(n)
    np.add.at(diag, i, -off)
    np.add.at(diag, j, -off)
    return (L + sparse.diags(diag)).tocsr()


def build_laplacian(mesh: Mesh, variant: str = "revised"):
    """Dispatch on variant name: 'topology', 'cotan' (symmetrized), or
    'revised'."""
    adjacency = build_adjacency(mesh)
    if variant == "topology":
        require_spectral_ready(mesh, adjacency)
        return build_topology_laplacian(mesh, adjacency)
    if variant == "cotan":
        return build_cotan_laplacian(mesh, adjacency, symmetrize=True)
    if variant == "revised":
        return build_revised_cotan_laplacian(mesh, adjacency)
    raise ValueError(f"unknown Laplacian variant {variant!r}; expected one of "
                     f"{LAPLACIAN_VARIANTS}")


def check_psd(L, tol: float = 1e-8) -> PsdReport:
    """Full symmetric eigensolve; pass iff the smallest eigenvalue is
    >= -tol times the Gershgorin bound 2 max_i L_ii."""
    dense = L.toarray() if sparse.issparse(L) else np.asarray(L, dtype=np.float64)
    if dense.shape[0] != dense.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(dense, dense.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(dense).max())):
        raise ValueError("matrix must be symmetric")
    eigenvalues = np.linalg.eigvalsh(dense)
    bound = 2.0 * float(dense.diagonal().max())
    min_eig = float(eigenvalues[0])
    return PsdReport(
        min_eigenvalue=min_eig,
        gershgorin_bound=bound,
        tol=tol,
        passed=min_eig >= -tol * bound,
    )


def nondelaunay_tetrahedron() -> Mesh:
    """Closed 4-vertex mesh that is not Delaunay triangulated and whose
    mixed Voronoi areas differ, on which the symmetrized classical
    cotangent operator has a negative eigenvalue.

    Two congruent obtuse isosceles faces (apex 2*pi/3, equal sides 1)
    share one edge; the hinge angle is chosen so the remaining two faces
    are isosceles with apex pi/6. The mixed Voronoi areas come out as
    (4 - sqrt(3))/8 for the two base vertices and (3 sqrt(3) - 2)/8 for
    the two apex vertices.
    """
    s = np.sin(np.pi / 12.0)
    c = np.sqrt(np.sqrt(3.0) - 1.0) / 2.0
    v = np.array(
        [
            [-np.sqrt(3.0) / 2.0, 0.0, 0.0],
            [0.0, c, s],
            [np.sqrt(3.0) / 2.0, 0.0, 0.0],
            [0.0, c, -s],
        ]
    )
    f = np.array([[0, 2, 1], [0, 3, 2], [0, 1, 3], [1, 2, 3]])
    return Mesh(v, f)


def export_triplets(L, path) -> None:
    """Write a matrix as one `i j value` line per stored entry (debug aid)."""
    coo = L.tocoo() if sparse.issparse(L) else sparse.coo_matrix(np.asarray(L))
    lines = [
        f"{int(i)} {int(j)} {val:.17g}"
        for i, j, val in sorted(zip(coo.row, coo.col, coo.data), key=lambda t: (t[0], t[1]))
    ]
    Path(path).write_text("\n".join(lines) + "\n")
