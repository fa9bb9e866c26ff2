"""Tests for the built-in mesh families."""

import numpy as np
import pytest

from polyvem.generators import generate_mesh, quad_distorted
from polyvem.mesh import MeshError


def test_tri_uniform_counts():
    assert len(generate_mesh("tri-uniform", 0).cells) == 2
    for level in (1, 2, 3):
        assert len(generate_mesh("tri-uniform", level).cells) == 2 * 4**level


def test_quad_distorted_level2():
    mesh = generate_mesh("quad-distorted", 2, delta=0.2)
    assert len(mesh.cells) == 16
    # construction already rejects negative fans; confirm measures are sane
    assert all(c.measure > 0 for c in mesh.cells)
    assert abs(mesh.total_measure() - 1.0) < 1e-12


def test_quad_distorted_reproducible():
    a = quad_distorted(2, delta=0.25, seed=7)
    b = quad_distorted(2, delta=0.25, seed=7)
    np.testing.assert_array_equal(a.vertices, b.vertices)
    c = quad_distorted(2, delta=0.25, seed=8)
    assert not np.array_equal(a.vertices, c.vertices)


def test_quad_distorted_rejects_big_delta():
    with pytest.raises(ValueError):
        quad_distorted(1, delta=0.5)


def test_polygon_hex_level1():
    mesh = generate_mesh("polygon-hex", 1)
    sides = [len(c.loop) for c in mesh.cells]
    assert abs(mesh.total_measure() - 1.0) < 1e-12
    # hexagon-dominant with pentagon/quad boundary cells
    assert sides.count(6) > len(sides) / 2
    assert set(sides) == {4, 5, 6}


def test_polygon_hex_refines():
    h0 = generate_mesh("polygon-hex", 0).mesh_size()
    h1 = generate_mesh("polygon-hex", 1).mesh_size()
    assert abs(h1 - h0 / 2) < 1e-12


def test_tet_uniform_counts():
    mesh = generate_mesh("tet-uniform", 0)
    assert len(mesh.cells) == 6
    assert abs(mesh.total_measure() - 1.0) < 1e-12
    mesh1 = generate_mesh("tet-uniform", 1)
    assert len(mesh1.cells) == 48
    assert abs(mesh1.total_measure() - 1.0) < 1e-12


def test_hex_uniform_counts():
    mesh = generate_mesh("hex-uniform", 1)
    assert len(mesh.cells) == 8
    assert len(mesh.faces[1]) == 36
    assert abs(mesh.total_measure() - 1.0) < 1e-12


def test_h_halves_per_level():
    for family in ("tri-uniform", "quad-distorted", "tet-uniform"):
        h = [generate_mesh(family, lv).mesh_size() for lv in (0, 1, 2)]
        assert h[1] < 0.75 * h[0]
        assert h[2] < 0.75 * h[1]


def test_face_diameter_comparable_to_cell():
    for family in ("tri-uniform", "quad-distorted", "polygon-hex", "tet-uniform"):
        mesh = generate_mesh(family, 1)
        for cell in mesh.cells:
            for face in cell.faces(1):
                ratio = face.h / cell.h
                assert 0.05 <= ratio <= 1.0


def test_unknown_family():
    with pytest.raises(ValueError):
        generate_mesh("moebius", 1)
