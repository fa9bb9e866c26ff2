"""Tests for the face lattice, frames, fans and mesh I/O."""

import json
import math

import numpy as np
import pytest

from polyvem.mesh import MeshError, PolytopalMesh, fan_decompose, load_mesh


def two_triangle_square():
    verts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    return PolytopalMesh(2, verts, [[0, 1, 2], [0, 2, 3]])


def unit_square_cell():
    verts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    return PolytopalMesh(2, verts, [[0, 1, 2, 3]])


def unit_cube():
    verts = [
        [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
        [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
    ]
    faces = [
        [0, 1, 2, 3],  # z = 0
        [4, 5, 6, 7],  # z = 1
        [0, 1, 5, 4],  # y = 0
        [3, 2, 6, 7],  # y = 1
        [0, 3, 7, 4],  # x = 0
        [1, 2, 6, 5],  # x = 1
    ]
    cells = [{"faces": [0, 1, 2, 3, 4, 5]}]
    return PolytopalMesh(3, np.array(verts, dtype=float), cells, faces)


# ---------------------------------------------------------------------------
# lattice counts and geometry


def test_two_triangle_counts():
    mesh = two_triangle_square()
    assert len(mesh.cells) == 2
    assert len(mesh.faces[1]) == 5
    assert len(mesh.faces[2]) == 4
    for cell in mesh.cells:
        assert len(cell.faces(1)) == 3
        assert len(cell.faces(2)) == 3


def test_single_square_counts():
    mesh = unit_square_cell()
    cell = mesh.cells[0]
    assert len(cell.faces(1)) == 4
    assert len(cell.faces(2)) == 4
    assert abs(cell.measure - 1.0) < 1e-14
    assert abs(cell.h - math.sqrt(2.0)) < 1e-14
    np.testing.assert_allclose(cell.center, [0.5, 0.5], atol=1e-14)


def test_cube_lattice():
    mesh = unit_cube()
    assert len(mesh.faces[1]) == 6
    assert len(mesh.faces[2]) == 12
    assert len(mesh.faces[3]) == 8
    cell = mesh.cells[0]
    assert abs(cell.measure - 1.0) < 1e-13
    assert abs(cell.h - math.sqrt(3.0)) < 1e-14
    for face in mesh.faces[1]:
        assert abs(face.measure - 1.0) < 1e-13
        assert len(face.faces(1)) == 4  # edges of a quad face
        assert len(face.faces(2)) == 4


def test_fan_unit_square():
    mesh = unit_square_cell()
    fan = fan_decompose(mesh.cells[0])
    assert len(fan) == 4
    for simplex in fan:
        u = simplex[1] - simplex[0]
        v = simplex[2] - simplex[0]
        area = 0.5 * abs(u[0] * v[1] - u[1] * v[0])
        assert abs(area - 0.25) < 1e-14


def test_fan_regular_hexagon():
    pts = [
        [math.cos(2 * math.pi * i / 6), math.sin(2 * math.pi * i / 6)] for i in range(6)
    ]
    mesh = PolytopalMesh(2, pts, [[0, 1, 2, 3, 4, 5]])
    cell = mesh.cells[0]
    assert len(cell.fan) == 6
    assert abs(cell.measure - 3.0 * math.sqrt(3.0) / 2.0) < 1e-13


# ---------------------------------------------------------------------------
# frames


def test_vertical_edge_frame():
    mesh = unit_square_cell()
    for edge in mesh.faces[1]:
        t = edge.tangent[0]
        nu = edge.normal[0]
        if abs(t[1]) > 0.9:  # vertical edge
            np.testing.assert_allclose(nu, [1.0, 0.0], atol=1e-14)
            np.testing.assert_allclose(t, [0.0, 1.0], atol=1e-14)


def test_vertex_frame_is_canonical():
    mesh = unit_square_cell()
    v = mesh.faces[2][0]
    assert v.tangent.shape == (0, 2)
    np.testing.assert_allclose(v.normal, np.eye(2), atol=1e-14)
    assert v.measure == 1.0


def test_horizontal_edge_of_horizontal_face_3d():
    mesh = unit_cube()
    # pick the edge from (0,0,0) to (1,0,0)
    edge = next(
        e
        for e in mesh.faces[2]
        if set(map(tuple, mesh.vertices[list(e.vertex_ids)])) == {(0, 0, 0), (1, 0, 0)}
    )
    for nu in edge.normal:
        assert abs(np.dot(nu, [1.0, 0.0, 0.0])) < 1e-14
    gram = edge.normal @ edge.normal.T
    np.testing.assert_allclose(gram, np.eye(2), atol=1e-14)


def test_frame_orthonormality_everywhere():
    mesh = two_triangle_square()
    for r in (1, 2):
        for ent in mesh.faces[r]:
            frame = np.vstack([ent.tangent, ent.normal])
            np.testing.assert_allclose(frame @ frame.T, np.eye(2), atol=1e-12)


def test_outward_signs_opposite_on_interior_face():
    mesh = two_triangle_square()
    interior = [f for f in mesh.faces[1] if not f.boundary]
    assert len(interior) == 1
    f = interior[0]
    sigmas = [mesh.cells[c].sigma[f.index] for c in f.cells]
    assert sorted(sigmas) == [-1, 1]
    for c in f.cells:
        cell = mesh.cells[c]
        nu_out = cell.sigma[f.index] * f.normal[0]
        assert np.dot(f.center - cell.center, nu_out) > 0


def test_boundary_flags():
    mesh = two_triangle_square()
    assert sum(f.boundary for f in mesh.faces[1]) == 4
    assert all(v.boundary for v in mesh.faces[2])
    cube = unit_cube()
    assert all(f.boundary for f in cube.faces[1])


def test_conormals_point_outward_and_lie_in_face():
    mesh = unit_cube()
    for face in mesh.faces[1]:
        for ei, conormal in face.conormals.items():
            edge = mesh.faces[2][ei]
            assert abs(np.dot(conormal, face.normal[0])) < 1e-12
            assert abs(np.dot(conormal, edge.tangent[0])) < 1e-12
            assert np.dot(edge.center - face.center, conormal) > 0


def test_lattice_nesting():
    mesh = unit_cube()
    cell = mesh.cells[0]
    for face in cell.faces(1):
        for j in (1, 2):
            for sub in face.faces(j):
                assert sub.index in cell.subfaces[face.codim + j]


def test_measures_tile_domain():
    for mesh in (two_triangle_square(), unit_square_cell(), unit_cube()):
        assert abs(mesh.total_measure() - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# errors and I/O


def test_degenerate_cell_rejected():
    verts = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]
    with pytest.raises(MeshError):
        PolytopalMesh(2, verts, [[0, 1, 2]])


def test_nonmanifold_rejected():
    verts = [[0, 0], [1, 0], [0, 1], [0, -1], [-1, 0]]
    cells = [[0, 1, 2], [0, 3, 1], [0, 1, 4]]  # hmm: edge (0,1) in 3 cells
    with pytest.raises(MeshError):
        PolytopalMesh(2, np.array(verts, dtype=float), cells)


def test_nonstarshaped_rejected():
    # U-shaped octagon: the centroid cannot see both arms past the notch
    verts = [
        [0.0, 0.0], [3.0, 0.0], [3.0, 3.0], [2.0, 3.0],
        [2.0, 1.0], [1.0, 1.0], [1.0, 3.0], [0.0, 3.0],
    ]
    with pytest.raises(MeshError):
        PolytopalMesh(2, verts, [[0, 1, 2, 3, 4, 5, 6, 7]])


def test_json_roundtrip_2d(tmp_path):
    mesh = two_triangle_square()
    path = tmp_path / "mesh.json"
    mesh.save(str(path))
    again = load_mesh(str(path))
    assert len(again.cells) == 2
    np.testing.assert_allclose(again.vertices, mesh.vertices)
    assert again.cells[0].loop == mesh.cells[0].loop


def test_json_roundtrip_3d(tmp_path):
    mesh = unit_cube()
    path = tmp_path / "cube.json"
    mesh.save(str(path))
    again = load_mesh(str(path))
    assert len(again.faces[2]) == 12
    assert abs(again.cells[0].measure - 1.0) < 1e-13


def test_malformed_file_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"vertices": [[0, 0]]}))
    with pytest.raises(MeshError):
        load_mesh(str(path))


def test_clockwise_loop_normalized():
    verts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    mesh = PolytopalMesh(2, verts, [[3, 2, 1, 0]])
    assert abs(mesh.cells[0].measure - 1.0) < 1e-14
