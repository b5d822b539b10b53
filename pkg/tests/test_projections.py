import json

import numpy as np
import pytest

from models.qutrit import UNIT_EFFECT
from solver import geometry as geo
from solver.errors import ArgumentError, DataError

CUBE = geo.HPolytope(np.eye(3), -np.ones(3), np.ones(3), np.zeros((0, 3)), np.zeros(0))


@pytest.fixture(scope="module")
def exact_bodies(fiducial_design):
    S = fiducial_design.generator_state_vectors()
    E = fiducial_design.generator_effect_vectors()
    return geo.realized_state_space(S), geo.realized_effect_space(E)


def test_classical_trit_triangle(exact_bodies):
    states, _ = exact_bodies
    proj = geo.project_vpolytope(states, (0, 3, 8))
    assert proj.degenerate and proj.affine_dim == 2
    assert len(proj.points) == 3
    assert np.allclose(proj.points[:, 0], 1.0)
    assert len(proj.hull_facets) == 1
    assert proj.volume == 0.0


def test_qubit_block_stays_in_unit_ball(exact_bodies):
    states, _ = exact_bodies
    proj = geo.project_vpolytope(states, (1, 2, 3))
    assert not proj.degenerate
    assert np.linalg.norm(proj.points, axis=1).max() <= 1 + 1e-9


def test_single_point_projection():
    proj = geo.project_vpolytope(geo.VPolytope(UNIT_EFFECT[None, :], "state"), (0, 1, 2))
    assert proj.affine_dim == 0 and len(proj.points) == 1


def test_bad_axes():
    body = geo.VPolytope(UNIT_EFFECT[None, :], "state")
    for axes in [(0, 0, 1), (0, 1), (0, 1, 9)]:
        with pytest.raises(ArgumentError):
            geo.project_vpolytope(body, axes)
    with pytest.raises(ArgumentError):
        geo.project_hpolytope(CUBE, (0, 1, 2), 3, np.random.default_rng(0))


def test_box_support_points():
    proj = geo.project_hpolytope(CUBE, (0, 1, 2), 26, np.random.default_rng(0))
    assert len(proj.extreme_points()) == 8
    assert proj.volume == pytest.approx(8.0)
    assert geo.hull_volume_change(CUBE, (0, 1, 2), 26, np.random.default_rng(1)) == pytest.approx(0.0, abs=1e-9)


def test_support_directions_start_on_the_lattice():
    dirs = geo.support_directions(40, np.random.default_rng(2))
    assert dirs.shape == (40, 3)
    assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0)
    assert len(geo.support_directions(10, np.random.default_rng(2))) == 10


def test_unbounded_body_cannot_be_projected():
    body = geo.consistent_state_space(UNIT_EFFECT[:, None])
    with pytest.raises(DataError):
        geo.project_hpolytope(body, (1, 2, 3), 26, np.random.default_rng(3))


def test_threads_do_not_change_support_projection(fiducial_design):
    body = geo.consistent_state_space(fiducial_design.generator_effect_vectors())
    a = geo.project_hpolytope(body, (1, 2, 3), 30, np.random.default_rng(4), threads=1)
    b = geo.project_hpolytope(body, (1, 2, 3), 30, np.random.default_rng(4), threads=3)
    assert np.allclose(a.points, b.points)


def test_exact_effects_form_eight_corners(exact_bodies):
    _, effects = exact_bodies
    proj = geo.project_vpolytope(effects, (0, 3, 8))
    assert len(proj.extreme_points()) == 8


def test_effect_section_is_scaled_state_triangle(exact_bodies):
    states, effects = exact_bodies
    tri = geo.section(geo.project_vpolytope(states, (0, 3, 8)), 0, 1.0)
    cone = geo.section(geo.project_vpolytope(effects, (0, 3, 8)), 0, 1 / 6)
    assert len(tri) == 3 and len(cone) == 3
    assert geo.hausdorff_distance(0.25 * tri, cone) < 1e-6


def test_section_through_box_middle():
    proj = geo.project_hpolytope(CUBE, (0, 1, 2), 26, np.random.default_rng(5))
    square = geo.section(proj, 2, 0.0)
    assert len(square) == 4
    assert np.allclose(np.abs(square), 1.0)
    assert len(geo.section(proj, 2, 3.0)) == 0
    with pytest.raises(ArgumentError):
        geo.section(proj, 5, 0.0)


def test_hausdorff_of_shifted_squares():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    assert geo.hausdorff_distance(sq, sq) == 0.0
    assert geo.hausdorff_distance(sq, sq + [0.1, 0]) == pytest.approx(0.1, abs=1e-12)
    with pytest.raises(ArgumentError):
        geo.hausdorff_distance(sq, np.zeros((0, 2)))


def test_projection_files(tmp_path, exact_bodies):
    states, _ = exact_bodies
    proj = geo.project_vpolytope(states, (1, 2, 3))
    record = json.loads(json.dumps(proj.to_dict()))
    assert record["axes"] == [1, 2, 3] and len(record["points"]) == len(proj.points)
    path = tmp_path / "states.ply"
    proj.write_ply(str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "ply"
    assert f"element vertex {len(proj.points)}" in lines
    assert f"element face {len(proj.hull_facets)}" in lines


def test_hausdorff_ignores_vertex_order():
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.3, 0.8]])
    assert geo.hausdorff_distance(tri, np.roll(tri, 1, axis=0)) <= 1e-12
    assert geo.hausdorff_distance(tri, tri[::-1]) <= 1e-12


def test_hausdorff_of_nested_and_degenerate_polygons():
    sq = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float)
    assert geo.hausdorff_distance(sq, 0.5 * sq) == pytest.approx(np.sqrt(0.5), abs=1e-12)
    assert geo.hausdorff_distance(sq, np.zeros((1, 2))) == pytest.approx(np.sqrt(2.0), abs=1e-12)
    seg = np.array([[-1.0, 0.0], [1.0, 0.0]])
    assert geo.hausdorff_distance(seg, seg[::-1]) == 0.0
    assert geo.hausdorff_distance(seg, seg + [0.0, 0.25]) == pytest.approx(0.25, abs=1e-12)


@pytest.mark.parametrize("nu, omega", [(1, 2), (3, 8), (4, 7)])
def test_unit_plane_shadow_is_direct_projection(exact_bodies, fiducial_design, nu, omega):
    states, _ = exact_bodies
    shadow = geo.section(geo.project_vpolytope(states, (0, nu, omega)), 0, 1.0)
    direct = fiducial_design.generator_state_vectors()[:, [nu, omega]]
    assert geo.hausdorff_distance(shadow, direct) < 1e-8


@pytest.mark.parametrize("axes", [(1, 2, 3), (0, 3, 8)])
def test_projected_realized_states_inside_projected_consistent(exact_bodies, fiducial_design, axes):
    states, _ = exact_bodies
    S_cons = geo.consistent_state_space(fiducial_design.generator_effect_vectors())
    proj = geo.project_vpolytope(states, axes)
    assert all(S_cons.projection_contains(axes, p) for p in proj.points)


def test_projected_realized_effects_inside_projected_consistent(exact_bodies, fiducial_design):
    _, effects = exact_bodies
    E_cons = geo.consistent_effect_space(fiducial_design.generator_state_vectors())
    proj = geo.project_vpolytope(effects, (0, 1, 3))
    assert all(E_cons.projection_contains((0, 1, 3), p) for p in proj.points)


def test_projection_contains_rejects_far_points():
    assert CUBE.projection_contains((0, 2), [1.0, -1.0])
    assert not CUBE.projection_contains((0, 2), [1.5, 0.0])
    with pytest.raises(ArgumentError):
        CUBE.projection_contains((0, 1), [0.0])
