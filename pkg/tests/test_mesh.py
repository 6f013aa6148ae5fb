from pathlib import Path

import numpy as np
import pytest

from wfrdist.errors import InvalidInputError, MeshFormatError
from wfrdist.mesh import (
    UNASSIGNED,
    TriangleMesh,
    closure_defect,
    drop_degenerate,
    face_geometry,
    fuzzy_correspondence,
    load_mesh,
    save_correspondence,
    save_obj,
    save_off,
    srnf_distance,
    srnf_measure,
)
from wfrdist.shapes import (
    box,
    convex_hull_mesh,
    l_prism,
    octahedron,
    random_rotation,
    synthetic_family,
    unit_cube,
)
from wfrdist.solver import SolverConfig, solve

DATA = Path(__file__).parent / "data"
TRIANGLE = TriangleMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])


def test_load_cube_off():
    mesh = load_mesh(DATA / "cube.off")
    assert len(mesh.vertices) == 8 and mesh.n_faces == 12
    assert closure_defect(mesh) < 1e-12


def test_obj_quad_is_fan_triangulated():
    mesh = load_mesh(DATA / "quad.obj")
    assert mesh.n_faces == 2
    assert face_geometry(mesh).areas.sum() == pytest.approx(1.0)


def test_zero_area_face_dropped_with_warning():
    with pytest.warns(UserWarning, match="dropped 1 degenerate"):
        mesh = load_mesh(DATA / "degenerate.off")
    assert mesh.n_faces == 2 and mesh.dropped_faces == 1


def test_parse_error_has_line_number():
    with pytest.raises(MeshFormatError, match=r"bad\.off:4:"):
        load_mesh(DATA / "bad.off")


@pytest.mark.parametrize(
    "name, text",
    [
        ("a.off", "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n"),
        ("b.off", "NOPE\n"),
        ("c.off", "OFF\n3 1 0\n0 0 0\n"),
        ("d.obj", "v 0 0 0\nv 1 0 0\nf 1 2\n"),
        ("e.obj", "v 0 0 0\n"),
        ("f.ply", "ply\n"),
    ],
)
def test_malformed_files(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    with pytest.raises(MeshFormatError):
        load_mesh(path)


@pytest.mark.parametrize("writer, suffix", [(save_off, ".off"), (save_obj, ".obj")])
def test_mesh_roundtrip(tmp_path, writer, suffix):
    mesh = octahedron()
    writer(mesh, tmp_path / f"m{suffix}")
    back = load_mesh(tmp_path / f"m{suffix}")
    assert np.array_equal(back.vertices, mesh.vertices)
    assert np.array_equal(back.faces, mesh.faces)


def test_face_geometry_triangle():
    geo = face_geometry(TRIANGLE)
    assert geo.areas[0] == 0.5
    assert np.array_equal(geo.normals[0], [0, 0, 1])
    assert np.array_equal(face_geometry(TRIANGLE.flipped()).normals[0], [0, 0, -1])


def test_cube_total_area():
    assert face_geometry(unit_cube()).areas.sum() == pytest.approx(6.0, abs=1e-12)


def test_cube_measure_has_six_unit_atoms():
    mu = srnf_measure(unit_cube())
    assert len(mu) == 6
    assert np.allclose(mu.weights, 1.0)
    expected = np.vstack([np.eye(3), -np.eye(3)])
    for e in expected:
        assert np.isclose(mu.supports @ e, 1.0).sum() == 1


def test_single_triangle_measure():
    mu = srnf_measure(TRIANGLE)
    assert len(mu) == 1 and mu.weights[0] == 0.5


def test_closed_mesh_closure():
    for _, mesh in synthetic_family(10, seed=1):
        mu = srnf_measure(mesh)
        assert np.linalg.norm(mu.weights @ mu.supports) <= 1e-9 * mu.total_mass


def test_open_mesh_reports_closure_defect():
    assert closure_defect(TRIANGLE) == pytest.approx(1.0)


def test_rotation_equivariance():
    mesh = convex_hull_mesh(np.random.default_rng(2).standard_normal((15, 3)))
    R = random_rotation(3)
    mu = srnf_measure(mesh, merge_normals=False)
    rotated = srnf_measure(mesh.rotated(R), merge_normals=False)
    assert np.allclose(rotated.weights, mu.weights, rtol=1e-12, atol=0)
    assert np.allclose(rotated.supports, mu.supports @ R.T, atol=1e-12)


def test_self_subdivision_translation():
    cube = unit_cube()
    assert srnf_distance(cube, cube).distance <= 1e-7
    assert srnf_distance(cube, cube.subdivided()).distance <= 1e-6
    d0 = srnf_distance(cube, box(1.0, 2.0, 0.5)).distance
    d1 = srnf_distance(cube.translated([5, 0, 0]), box(1.0, 2.0, 0.5)).distance
    assert d0 == d1
    assert srnf_distance(cube, cube.translated([5, 0, 0])).distance == 0.0


@pytest.mark.parametrize("s", [0.5, 2.0, 3.0])
def test_scaling_law(s):
    cube = unit_cube()
    assert srnf_distance(cube, cube.scaled(s)).distance == pytest.approx(
        abs(s - 1) * np.sqrt(6.0), abs=1e-6)


def test_scaling_law_unmerged_hull():
    mesh = convex_hull_mesh(np.random.default_rng(4).standard_normal((10, 3)))
    area = face_geometry(mesh).areas.sum()
    report = srnf_distance(mesh, mesh.scaled(2.0), SolverConfig(epsilon=1e-14),
                           merge_normals=False)
    assert report.distance == pytest.approx(np.sqrt(area), abs=1e-6)


def test_degeneracy_witness():
    # same area per normal direction, different solids
    lp = l_prism(1.0)
    s = np.sqrt(3.0)
    other = box(s, s, 2.0 / s)
    assert srnf_distance(lp, other).distance <= 1e-6
    assert not np.allclose(np.ptp(lp.vertices, axis=0), np.ptp(other.vertices, axis=0))


def test_drop_degenerate_rejects_all_zero():
    with pytest.raises(InvalidInputError), pytest.warns(UserWarning):
        drop_degenerate([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [[0, 1, 2]])


def test_identical_meshes_correspond_bijectively():
    mesh = octahedron()
    report = srnf_distance(mesh, mesh, merge_normals=False)
    corr = fuzzy_correspondence(report, mesh, mesh)
    assert sorted(corr.assignment) == list(range(mesh.n_faces))
    normals = face_geometry(mesh).normals
    assert np.allclose(normals[corr.assignment], normals)
    assert np.allclose(corr.mass_fractions, 1.0)
    assert np.allclose(corr.colors1, corr.colors2[corr.assignment])


def test_destroyed_face_gets_sentinel():
    report = srnf_distance(TRIANGLE, TRIANGLE.flipped(), merge_normals=False)
    corr = fuzzy_correspondence(report, TRIANGLE, TRIANGLE.flipped())
    assert corr.assignment[0] == UNASSIGNED
    assert corr.mass_fractions[0] == 0.0


def test_rotated_cube_maps_side_faces_to_nearest_normal():
    cube = unit_cube()
    quarter = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    rotated = cube.rotated(quarter)
    report = srnf_distance(cube, rotated, merge_normals=False)
    corr = fuzzy_correspondence(report, cube, rotated)
    n1 = face_geometry(cube).normals
    n2 = face_geometry(rotated).normals
    assert np.all(corr.assignment >= 0)
    assert np.allclose(np.einsum("ij,ij->i", n1, n2[corr.assignment]), 1.0)


def test_correspondence_shape_mismatch():
    cube = unit_cube()
    report = srnf_distance(cube, cube)  # merged: 6 atoms, 12 faces
    with pytest.raises(InvalidInputError):
        fuzzy_correspondence(report, cube, cube)


def test_save_correspondence(tmp_path):
    mesh = octahedron()
    report = srnf_distance(mesh, mesh, merge_normals=False)
    save_correspondence(fuzzy_correspondence(report, mesh, mesh), tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "face_index_S1,assigned_face_S2_or_-1,mass_fraction,r,g,b"
    assert len(lines) == mesh.n_faces + 1


def test_triangle_inequality_on_family():
    family = [srnf_measure(m) for _, m in synthetic_family(10, seed=0)]
    D = np.array([[solve(a, b).distance for b in family] for a in family])
    for i in range(10):
        for j in range(10):
            assert np.all(D[i, :] <= D[i, j] + D[j, :] + 1e-6)
