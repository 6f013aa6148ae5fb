"""Triangle meshes, their area measures on S^2, and the SRNF shape distance.

The square-root normal field of a piecewise-linear surface is constant on
each face, ``q = sqrt(area_density) * n``; pushing ``|q|^2`` forward to the
unit normals gives the area measure ``sum_f area_f delta_{n_f}``.  The SRNF
shape distance between two meshes is the WFR distance between their area
measures, so no search over reparametrizations is needed.
"""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, MeshFormatError
from .measure import WFR, DiscreteMeasure, Kernel, consolidate
from .solver import SolverConfig, SolveReport, solve

log = logging.getLogger(__name__)

DEGENERATE_RATIO = 1e-12
UNASSIGNED = -1


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Indexed triangle mesh; faces wind counterclockwise seen from outside."""

    vertices: np.ndarray
    faces: np.ndarray
    dropped_faces: int = 0

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float).reshape(-1, 3)
        f = np.array(self.faces, dtype=np.int64).reshape(-1, 3)
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("vertex coordinates must be finite")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise InvalidInputError("face index out of range")
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def translated(self, offset) -> "TriangleMesh":
        return TriangleMesh(self.vertices + np.asarray(offset, dtype=float), self.faces)

    def scaled(self, s: float) -> "TriangleMesh":
        return TriangleMesh(self.vertices * s, self.faces)

    def rotated(self, rotation) -> "TriangleMesh":
        return TriangleMesh(self.vertices @ np.asarray(rotation, dtype=float).T, self.faces)

    def flipped(self) -> "TriangleMesh":
        return TriangleMesh(self.vertices, self.faces[:, ::-1])

    def subdivided(self) -> "TriangleMesh":
        """Split every triangle into four through its edge midpoints."""
        v = self.vertices
        f = self.faces
        verts = list(v)
        midpoint = {}

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in midpoint:
                midpoint[key] = len(verts)
                verts.append((v[i] + v[j]) / 2.0)
            return midpoint[key]

        faces = []
        for i, j, k in f:
            a, b, c = mid(i, j), mid(j, k), mid(k, i)
            faces += [(i, a, c), (a, j, b), (c, b, k), (a, b, c)]
        return TriangleMesh(np.array(verts), np.array(faces))


@dataclass(frozen=True, eq=False)
class FaceGeometry:
    areas: np.ndarray
    normals: np.ndarray


def _cross_products(vertices, faces):
    p = vertices[faces]
    return np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])


def face_geometry(mesh: TriangleMesh) -> FaceGeometry:
    """Per-face area ``|e1 x e2| / 2`` and unit normal ``e1 x e2 / |e1 x e2|``."""
    cr = _cross_products(mesh.vertices, mesh.faces)
    norms = np.linalg.norm(cr, axis=1)
    if np.any(norms == 0):
        raise InvalidInputError("mesh has zero-area faces; build it with drop_degenerate")
    return FaceGeometry(norms / 2.0, cr / norms[:, None])


def drop_degenerate(vertices, faces, ratio=DEGENERATE_RATIO, source=None) -> TriangleMesh:
    """Build a mesh keeping only faces with area above ``ratio * mean area``."""
    vertices = np.asarray(vertices, dtype=float).reshape(-1, 3)
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    if len(faces) == 0:
        raise InvalidInputError("mesh has no faces")
    if faces.min() < 0 or faces.max() >= len(vertices):
        raise InvalidInputError("face index out of range")
    areas = np.linalg.norm(_cross_products(vertices, faces), axis=1) / 2.0
    keep = areas > ratio * areas.mean()
    dropped = int((~keep).sum())
    if dropped:
        where = f" in {source}" if source else ""
        warnings.warn(f"dropped {dropped} degenerate face(s){where}", stacklevel=2)
    if not keep.any():
        raise InvalidInputError("every face of the mesh is degenerate")
    return TriangleMesh(vertices, faces[keep], dropped_faces=dropped)


def _fan(polygon):
    return [(polygon[0], polygon[k], polygon[k + 1]) for k in range(1, len(polygon) - 1)]


def _data_lines(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def _parse_off(text, path):
    lines = _data_lines(text)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise MeshFormatError("empty OFF file", path) from None
    tokens = header.split()
    if not tokens[0].endswith("OFF"):
        raise MeshFormatError("missing OFF header", path, lineno)
    tokens = tokens[1:]
    if not tokens:
        try:
            lineno, counts = next(lines)
        except StopIteration:
            raise MeshFormatError("missing counts line", path, lineno) from None
        tokens = counts.split()
    try:
        nv, nf = int(tokens[0]), int(tokens[1])
    except (ValueError, IndexError):
        raise MeshFormatError("bad counts line", path, lineno) from None

    vertices = []
    for _ in range(nv):
        try:
            lineno, line = next(lines)
            vertices.append([float(x) for x in line.split()[:3]])
        except StopIteration:
            raise MeshFormatError("file ends inside the vertex list", path) from None
        except ValueError:
            raise MeshFormatError("bad vertex line", path, lineno) from None
        if len(vertices[-1]) != 3:
            raise MeshFormatError("vertex needs 3 coordinates", path, lineno)
    faces = []
    for _ in range(nf):
        try:
            lineno, line = next(lines)
            parts = line.split()
            k = int(parts[0])
            poly = [int(x) for x in parts[1:k + 1]]
        except StopIteration:
            raise MeshFormatError("file ends inside the face list", path) from None
        except ValueError:
            raise MeshFormatError("bad face line", path, lineno) from None
        if len(poly) != k or k < 3:
            raise MeshFormatError(f"face needs at least 3 indices, got {len(poly)}", path, lineno)
        if min(poly) < 0 or max(poly) >= nv:
            raise MeshFormatError("face index out of range", path, lineno)
        faces += _fan(poly)
    return vertices, faces


def _parse_obj(text, path):
    vertices, faces = [], []
    for lineno, line in _data_lines(text):
        parts = line.split()
        if parts[0] == "v":
            try:
                vertices.append([float(x) for x in parts[1:4]])
            except ValueError:
                raise MeshFormatError("bad vertex line", path, lineno) from None
            if len(vertices[-1]) != 3:
                raise MeshFormatError("vertex needs 3 coordinates", path, lineno)
        elif parts[0] == "f":
            try:
                idx = [int(tok.split("/")[0]) for tok in parts[1:]]
            except ValueError:
                raise MeshFormatError("bad face line", path, lineno) from None
            if len(idx) < 3:
                raise MeshFormatError("face needs at least 3 vertices", path, lineno)
            # 1-based; negative indices count back from the latest vertex
            poly = [i - 1 if i > 0 else len(vertices) + i for i in idx]
            if min(poly) < 0 or max(poly) >= len(vertices):
                raise MeshFormatError("face index out of range", path, lineno)
            faces += _fan(poly)
    return vertices, faces


def load_mesh(path, format: str | None = None) -> TriangleMesh:
    """Read an OFF or OBJ file; polygons are fan-triangulated, degenerate faces dropped."""
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).upper()
    if fmt not in ("OFF", "OBJ"):
        raise MeshFormatError(f"unsupported mesh format {fmt!r}", path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MeshFormatError(f"cannot read mesh: {exc}", path) from exc
    parse = _parse_off if fmt == "OFF" else _parse_obj
    vertices, faces = parse(text, path)
    if not faces:
        raise MeshFormatError("mesh has no faces", path)
    mesh = drop_degenerate(vertices, faces, source=str(path))
    if mesh.dropped_faces:
        log.info("%s: dropped %d degenerate faces", path, mesh.dropped_faces)
    return mesh


def save_off(mesh: TriangleMesh, path) -> None:
    with Path(path).open("w") as fh:
        fh.write(f"OFF\n{len(mesh.vertices)} {mesh.n_faces} 0\n")
        for x, y, z in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g} {z:.17g}\n")
        for i, j, k in mesh.faces:
            fh.write(f"3 {i} {j} {k}\n")


def save_obj(mesh: TriangleMesh, path) -> None:
    with Path(path).open("w") as fh:
        for x, y, z in mesh.vertices:
            fh.write(f"v {x:.17g} {y:.17g} {z:.17g}\n")
        for i, j, k in mesh.faces:
            fh.write(f"f {i + 1} {j + 1} {k + 1}\n")


# -- area measure and distance -----------------------------------------------


def srnf_measure(mesh: TriangleMesh, merge_normals: bool = True) -> DiscreteMeasure:
    """Area measure ``sum_f area_f delta_{normal_f}`` of the mesh.

    With ``merge_normals`` faces sharing a normal (to ``1e-12`` in the dot
    product) become one atom, which leaves the measure unchanged.
    """
    geo = face_geometry(mesh)
    mu = DiscreteMeasure(geo.areas, geo.normals)
    return consolidate(mu) if merge_normals else mu


def closure_defect(mesh: TriangleMesh) -> float:
    """``|sum_f area_f n_f| / sum_f area_f``; zero for closed, consistently oriented meshes."""
    geo = face_geometry(mesh)
    return float(np.linalg.norm(geo.areas @ geo.normals) / geo.areas.sum())


def srnf_distance(mesh1: TriangleMesh, mesh2: TriangleMesh,
                  config: SolverConfig = SolverConfig(), merge_normals: bool = True,
                  kernel: Kernel = WFR) -> SolveReport:
    """SRNF shape (pseudo-)distance between two meshes.

    Pass ``merge_normals=False`` when the coupling is needed per face, e.g.
    for :func:`fuzzy_correspondence`.  A non-default ``kernel`` gives the
    corresponding generalized pseudo-distance.
    """
    return solve(srnf_measure(mesh1, merge_normals), srnf_measure(mesh2, merge_normals),
                 kernel, config)


@dataclass(frozen=True, eq=False)
class Correspondence:
    """Face map from the first mesh to the second.

    ``assignment[i]`` is the face of the second mesh receiving most of face
    ``i``'s transported mass, or ``UNASSIGNED`` when all of it is destroyed.
    ``mass_fractions[i]`` is the share of face ``i``'s area sent there.
    """

    assignment: np.ndarray
    mass_fractions: np.ndarray
    colors1: np.ndarray
    colors2: np.ndarray


def normal_colors(normals) -> np.ndarray:
    """RGB in [0, 1] from unit normals: ``(n + 1) / 2``."""
    return (np.asarray(normals, dtype=float) + 1.0) / 2.0


UNASSIGNED_COLOR = (0.5, 0.5, 0.5)


def fuzzy_correspondence(report: SolveReport, mesh1: TriangleMesh,
                         mesh2: TriangleMesh) -> Correspondence:
    A = report.coupling.A
    if report.coupling.shape != (mesh1.n_faces, mesh2.n_faces):
        raise InvalidInputError(
            f"coupling is {report.coupling.shape}, meshes have "
            f"{mesh1.n_faces} and {mesh2.n_faces} faces; solve with merge_normals=False"
        )
    transport = A[1:, 1:]
    row_mass = A[1:, :].sum(axis=1)
    target = np.argmax(transport, axis=1)
    best = transport[np.arange(len(target)), target]
    moved = transport.sum(axis=1) > 0
    assignment = np.where(moved, target, UNASSIGNED)
    fractions = np.where(moved, best / row_mass, 0.0)

    colors2 = normal_colors(face_geometry(mesh2).normals)
    colors1 = np.tile(UNASSIGNED_COLOR, (mesh1.n_faces, 1))
    colors1[moved] = colors2[target[moved]]
    return Correspondence(assignment, fractions, colors1, colors2)


def save_correspondence(corr: Correspondence, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["face_index_S1", "assigned_face_S2_or_-1", "mass_fraction", "r", "g", "b"])
        for i, (k, frac, rgb) in enumerate(zip(corr.assignment, corr.mass_fractions, corr.colors1)):
            writer.writerow([i, int(k), f"{frac:.17g}"] + [f"{c:.6g}" for c in rgb])
