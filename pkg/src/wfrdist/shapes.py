"""Small synthetic meshes with known area measures."""

from __future__ import annotations

import numpy as np
from scipy.spatial import ConvexHull
from scipy.spatial.transform import Rotation

from .mesh import TriangleMesh


def unit_cube() -> TriangleMesh:
    """``[0, 1]^3`` as 12 outward-oriented triangles."""
    v = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float)
    # vertex index = 4x + 2y + z
    quads = [
        (0, 2, 6, 4),  # z = 0, normal -z
        (1, 5, 7, 3),  # z = 1
        (0, 4, 5, 1),  # y = 0
        (2, 3, 7, 6),  # y = 1
        (0, 1, 3, 2),  # x = 0
        (4, 6, 7, 5),  # x = 1
    ]
    faces = []
    for a, b, c, d in quads:
        faces += [(a, b, c), (a, c, d)]
    return TriangleMesh(v, faces)


def box(sx: float, sy: float, sz: float) -> TriangleMesh:
    cube = unit_cube()
    return TriangleMesh(cube.vertices * np.array([sx, sy, sz]), cube.faces)


def prism(outline, height: float, cap_pieces=None) -> TriangleMesh:
    """Extrude a counterclockwise polygon in the xy-plane to ``0 <= z <= height``.

    ``cap_pieces`` splits a non-convex outline into convex counterclockwise
    polygons for the top and bottom caps (fan-triangulated).  The caps need
    not share vertices with the walls; only face geometry matters here.
    """
    outline = np.asarray(outline, dtype=float)
    pieces = [outline] if cap_pieces is None else [np.asarray(p, dtype=float) for p in cap_pieces]
    verts, faces = [], []

    def add(points):
        start = len(verts)
        verts.extend(points)
        return list(range(start, start + len(points)))

    n = len(outline)
    for k in range(n):
        p, q = outline[k], outline[(k + 1) % n]
        i0, i1, i2, i3 = add([[*p, 0.0], [*q, 0.0], [*q, height], [*p, height]])
        faces += [(i0, i1, i2), (i0, i2, i3)]
    for piece in pieces:
        top = add([[x, y, height] for x, y in piece])
        bottom = add([[x, y, 0.0] for x, y in piece])
        faces += [(top[0], top[k], top[k + 1]) for k in range(1, len(top) - 1)]
        faces += [(bottom[0], bottom[k + 1], bottom[k]) for k in range(1, len(bottom) - 1)]
    return TriangleMesh(np.array(verts), np.array(faces))


def l_prism(height: float = 1.0) -> TriangleMesh:
    """Non-convex L-shaped prism: ``[0,2]x[0,1] u [0,1]x[1,2]`` extruded by ``height``."""
    outline = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]
    pieces = [[(0, 0), (2, 0), (2, 1), (0, 1)], [(0, 1), (1, 1), (1, 2), (0, 2)]]
    return prism(outline, height, pieces)


def convex_hull_mesh(points) -> TriangleMesh:
    """Outward-oriented triangulated convex hull of ``points``."""
    points = np.asarray(points, dtype=float)
    hull = ConvexHull(points)
    centre = points[hull.vertices].mean(axis=0)
    faces = hull.simplices.copy()
    p = points[faces]
    normals = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    inward = np.einsum("ij,ij->i", normals, p.mean(axis=1) - centre) < 0
    faces[inward] = faces[inward][:, ::-1]
    used, faces = np.unique(faces, return_inverse=True)
    return TriangleMesh(points[used], faces.reshape(-1, 3))


def octahedron() -> TriangleMesh:
    return convex_hull_mesh(np.vstack([np.eye(3), -np.eye(3)]))


def tetrahedron() -> TriangleMesh:
    return convex_hull_mesh([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]])


def random_rotation(seed=None) -> np.ndarray:
    return Rotation.random(random_state=seed).as_matrix()


def synthetic_family(count: int = 10, seed: int = 0):
    """``count`` named closed meshes of assorted shapes and sizes."""
    rng = np.random.default_rng(seed)
    makers = [
        ("cube", unit_cube),
        ("box", lambda: box(*rng.uniform(0.5, 2.0, 3))),
        ("l_prism", lambda: l_prism(rng.uniform(0.5, 1.5))),
        ("octahedron", octahedron),
        ("tetrahedron", tetrahedron),
        ("hull", lambda: convex_hull_mesh(rng.standard_normal((rng.integers(8, 20), 3)))),
    ]
    family = []
    for k in range(count):
        name, make = makers[k % len(makers)]
        mesh = make()
        if k >= len(makers):
            mesh = mesh.rotated(random_rotation(int(rng.integers(2**31))))
        family.append((f"{name}_{k}", mesh))
    return family
