import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracvolve.mesh import (Mesh, build_dual_partition, build_interval_mesh,
                            build_structured_triangulation, element_geometry,
                            simplex_geometry, write_mesh)


def shoelace(poly):
    poly = np.asarray(poly)
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def test_smallest_square():
    mesh = build_structured_triangulation(1, 1)
    assert mesh.n_vertices == 4
    assert mesh.n_elements == 2
    assert mesh.n_interior == 0


def test_two_by_two_counts():
    mesh = build_structured_triangulation(2, 2)
    assert mesh.n_vertices == 9
    assert mesh.n_elements == 8
    assert mesh.n_interior == 1
    np.testing.assert_allclose(mesh.vertices[mesh.interior_vertices[0]], [0.5, 0.5])


def test_mesh_size_ten_by_ten():
    assert build_structured_triangulation(10, 10).h == pytest.approx(math.sqrt(2) / 10, rel=1e-14)


def test_interior_vertices_have_six_neighbours():
    mesh = build_structured_triangulation(4, 4)
    for v in mesh.interior_vertices:
        touching = np.any(mesh.elements == v, axis=1)
        assert np.count_nonzero(touching) == 6


@pytest.mark.parametrize("bad", [(0, 3), (2, -1), (1.5, 2)])
def test_bad_subdivisions(bad):
    with pytest.raises(ValueError):
        build_structured_triangulation(*bad)


def test_bad_rectangle():
    with pytest.raises(ValueError):
        build_structured_triangulation(2, 2, ((0, 0), (0, 1)))


def test_interval_mesh():
    mesh = build_interval_mesh(4, 0, 1)
    np.testing.assert_allclose(mesh.vertices[:, 0], [0, 0.25, 0.5, 0.75, 1])
    assert mesh.n_interior == 3
    assert mesh.boundary.tolist() == [True, False, False, False, True]


def test_interval_mesh_fine_step():
    assert build_interval_mesh(4000, 0, 1).h == pytest.approx(2.5e-4, rel=1e-12)


def test_interval_single_element():
    assert build_interval_mesh(1, 0, 1).n_interior == 0


def test_interval_errors():
    with pytest.raises(ValueError):
        build_interval_mesh(4, 1, 1)
    with pytest.raises(ValueError):
        build_interval_mesh(0, 0, 1)


def test_clockwise_element_rejected():
    with pytest.raises(ValueError):
        Mesh(2, [[0, 0], [0, 1], [1, 0]], [[0, 1, 2]], [True] * 3, 0.5, ((0, 0), (1, 1)))


def test_element_geometry_reference_triangle():
    mesh = Mesh(2, [[0, 0], [1, 0], [0, 1]], [[0, 1, 2]], [True] * 3, 0.5, ((0, 0), (1, 1)))
    geo = element_geometry(mesh, 0)
    assert geo["area"] == pytest.approx(0.5)
    np.testing.assert_allclose(geo["grads"][0], [-1, -1])
    with pytest.raises(IndexError):
        element_geometry(mesh, 1)


def test_degenerate_simplex():
    with pytest.raises(ValueError):
        simplex_geometry([[0, 0], [1, 1], [2, 2]])
    area, grads = simplex_geometry([[0, 0], [1, 0], [0, 1]])
    assert area == pytest.approx(0.5)


def test_dual_center_volume_two_by_two():
    mesh = build_structured_triangulation(2, 2)
    dual = build_dual_partition(mesh)
    centre = mesh.interior_vertices[0]
    # exact oracle: shoelace over every subcell polygon owned by the centre vertex
    total = 0.0
    for e, el in enumerate(mesh.elements):
        for l in range(3):
            if el[l] == centre:
                total += shoelace(dual.subcell_polygons[e, l])
    assert total == pytest.approx(0.25, rel=1e-14)
    assert dual.cv_area[centre] == pytest.approx(0.25, rel=1e-14)


def test_interval_dual_volume():
    mesh = build_interval_mesh(4, 0, 1)
    dual = build_dual_partition(mesh)
    assert dual.cv_area[1] == pytest.approx(0.25)
    assert dual.cv_area[0] == pytest.approx(0.125)


def _check_dual(mesh, dual):
    assert dual.cv_area.sum() == pytest.approx(mesh.domain_measure, rel=1e-12)
    if mesh.dim == 2:
        np.testing.assert_allclose(dual.subcell_area, mesh.measures[:, None] / 3.0 * np.ones(3), rtol=1e-12)
        for e in range(min(mesh.n_elements, 20)):
            for l in range(3):
                assert shoelace(dual.subcell_polygons[e, l]) == pytest.approx(mesh.measures[e] / 3, rel=1e-12)
    # every dual segment appears exactly twice, with opposite normals
    groups = {}
    for s in range(dual.n_segments):
        key = tuple(sorted([tuple(np.round(dual.seg_p1[s], 12)), tuple(np.round(dual.seg_p2[s], 12))]))
        groups.setdefault(key, []).append(s)
    for members in groups.values():
        assert len(members) == 2
        a, b = members
        np.testing.assert_allclose(dual.seg_normal[a] + dual.seg_normal[b], 0.0, atol=1e-12)
        assert dual.seg_vertex[a] != dual.seg_vertex[b]


def test_basis_gradients_sum_to_zero():
    mesh = build_structured_triangulation(3, 5, ((0, -1), (2, 1)))
    np.testing.assert_allclose(mesh.grads.sum(axis=1), 0.0, atol=1e-14)


def test_outward_normals_point_away_from_vertex():
    mesh = build_structured_triangulation(3, 3)
    dual = build_dual_partition(mesh)
    z = mesh.vertices[dual.seg_vertex]
    assert np.all(np.einsum("sd,sd->s", dual.seg_midpoint - z, dual.seg_normal) > 0)


@settings(max_examples=25, deadline=None)
@given(nx=st.integers(1, 7), ny=st.integers(1, 7),
       x0=st.floats(-2, 2), y0=st.floats(-2, 2),
       lx=st.floats(0.1, 5), ly=st.floats(0.1, 5))
def test_dual_invariants_random_rectangles(nx, ny, x0, y0, lx, ly):
    mesh = build_structured_triangulation(nx, ny, ((x0, y0), (x0 + lx, y0 + ly)))
    assert mesh.n_vertices == (nx + 1) * (ny + 1)
    assert mesh.n_elements == 2 * nx * ny
    assert mesh.h == pytest.approx(math.hypot(lx / nx, ly / ny), rel=1e-12)
    assert mesh.n_interior == max(nx - 1, 0) * max(ny - 1, 0)
    assert sorted(mesh.interior_index[mesh.interior_index >= 0]) == list(range(mesh.n_interior))
    np.testing.assert_allclose(mesh.grads.sum(axis=1), 0.0, atol=1e-12 * max(nx / lx, ny / ly))
    _check_dual(mesh, build_dual_partition(mesh))


@settings(max_examples=20, deadline=None)
@given(n=st.integers(1, 40), a=st.floats(-3, 3), length=st.floats(0.01, 10))
def test_interval_dual_invariants(n, a, length):
    mesh = build_interval_mesh(n, a, a + length)
    dual = build_dual_partition(mesh)
    assert dual.cv_area.sum() == pytest.approx(length, rel=1e-12)
    _check_dual(mesh, dual)


def test_locate():
    mesh = build_structured_triangulation(2, 2)
    e, lam = mesh.locate([0.5, 0.5])
    assert lam.max() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        mesh.locate([1.5, 0.5])


def test_mesh_dump(tmp_path):
    mesh = build_structured_triangulation(1, 1)
    dual = build_dual_partition(mesh)
    path = tmp_path / "mesh.txt"
    write_mesh(mesh, dual, path)
    lines = path.read_text().splitlines()
    assert sum(l.startswith("v ") for l in lines) == 4
    assert sum(l.startswith("e ") for l in lines) == 2
    d = [l for l in lines if l.startswith("d ")]
    assert len(d) == 12 and len(d[0].split()) == 9
    assert all(l.endswith("boundary") for l in lines if l.startswith("v "))


def test_mesh_is_immutable():
    mesh = build_structured_triangulation(2, 2)
    with pytest.raises(ValueError):
        mesh.vertices[0, 0] = 3.0
