import numpy as np
import pytest

from saucd.laplacian import nondelaunay_tetrahedron
from saucd.shapes import bumpy_sphere, cube, icosphere, random_convex_hull, tetrahedron


def random_rotation(seed):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return q


@pytest.fixture(scope="session")
def fixture_meshes():
    """Closed spectral-ready meshes exercised by the identity and PSD
    properties."""
    return {
        "tetrahedron": tetrahedron(),
        "cube": cube(),
        "icosphere2": icosphere(2),
        "bumpy": bumpy_sphere(2, seed=7),
        "hull": random_convex_hull(80, seed=11),
        "nondelaunay": nondelaunay_tetrahedron(),
    }


@pytest.fixture(scope="session")
def random_closed_meshes():
    """Mix of random convex hulls and deformed spheres (smaller sizes, for
    module-level property tests; the acceptance suite runs the full set)."""
    meshes = []
    for k in range(6):
        meshes.append(random_convex_hull(30 + 17 * k, seed=100 + k))
    for k in range(4):
        meshes.append(bumpy_sphere(1 + (k % 2), amplitude=0.1 + 0.05 * k, seed=200 + k))
    return meshes
