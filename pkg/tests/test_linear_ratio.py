from itertools import product

import numpy as np
import pytest

from models.qutrit import UNIT_EFFECT
from solver import geometry as geo
from solver.errors import DataError


@pytest.fixture(scope="module")
def exact_vectors(fiducial_design):
    return fiducial_design.generator_state_vectors(), fiducial_design.generator_effect_vectors()


def _contracted(S, epsilon):
    out = S.copy()
    out[:, 1:] *= 1.0 - epsilon
    return out


def test_identical_cubes_have_unit_ratio():
    corners = np.array(list(product((-1.0, 1.0), repeat=8)))
    V = geo.realized_state_space(np.hstack([np.ones((len(corners), 1)), corners]))
    H = geo.HPolytope(np.eye(9)[1:], -np.ones(8), np.ones(8), UNIT_EFFECT[None, :], np.ones(1))
    mean, std, _ = geo.linear_dimension_ratio(V, H, 10, np.random.default_rng(0))
    assert mean == pytest.approx(1.0, abs=1e-7)
    assert std < 1e-7


def test_center_outside_realized_hull(exact_vectors):
    S, E = exact_vectors
    biased = S[S[:, 3] > 0.1]
    with pytest.raises(DataError, match="realized hull"):
        geo.linear_dimension_ratio(
            geo.realized_state_space(biased), geo.consistent_state_space(E), 5, np.random.default_rng(1))


def test_unbounded_consistent_body(exact_vectors):
    S, _ = exact_vectors
    with pytest.raises(DataError, match="unbounded"):
        geo.linear_dimension_ratio(
            geo.realized_state_space(S), geo.consistent_state_space(UNIT_EFFECT[:, None]),
            5, np.random.default_rng(2))


def test_exact_vectors_sandwich(exact_vectors):
    S, E = exact_vectors
    S_real, S_cons = geo.realized_state_space(S), geo.consistent_state_space(E)
    mean, _, probes = geo.linear_dimension_ratio(S_real, S_cons, 30, np.random.default_rng(3))
    assert all(p.t_realized <= p.t_consistent + 1e-7 for p in probes)
    assert 0.1 < mean <= 1.0
    report = geo.qutrit_sandwich(S_real, S_cons, 100, np.random.default_rng(4))
    assert report.realized_in_qutrit == 1.0
    assert report.qutrit_in_consistent == 1.0
    assert report.to_dict()["n_vertices"] == len(S)


def test_more_states_raise_the_ratio(exact_vectors):
    S, E = exact_vectors
    S_cons = geo.consistent_state_space(E)
    sparse, _, a = geo.linear_dimension_ratio(geo.realized_state_space(S[:15]), S_cons, 30, np.random.default_rng(5))
    dense, _, b = geo.linear_dimension_ratio(geo.realized_state_space(S), S_cons, 30, np.random.default_rng(5))
    assert all(q.t_realized >= p.t_realized - 1e-7 for p, q in zip(a, b))
    assert dense > sparse


def test_depolarizing_scales_the_ratio(exact_vectors):
    S, E = exact_vectors
    S_cons = geo.consistent_state_space(E)
    means = []
    for eps in (0.0, 0.05, 0.1):
        V = geo.realized_state_space(_contracted(S, eps))
        means.append(geo.linear_dimension_ratio(V, S_cons, 20, np.random.default_rng(6))[0])
    assert means[0] > means[1] > means[2]
    assert means[2] == pytest.approx(0.9 * means[0], rel=1e-6)


def test_effect_ratio_of_exact_vectors(exact_vectors):
    S, E = exact_vectors
    E_real, E_cons = geo.realized_effect_space(E), geo.consistent_effect_space(S)
    mean, _, probes = geo.effect_dimension_ratio(E_real, E_cons, 20, np.random.default_rng(7))
    assert all(p.t_realized <= p.t_consistent + 1e-7 for p in probes)
    assert 0.0 < mean <= 1.0


def test_straddling_from_hand_made_probes():
    d = np.eye(9)[1]
    inside = [geo.RayProbe(d, 0.5, 1.0), geo.RayProbe(d, 0.8, 1.1)]
    assert geo.straddling_from_probes(inside) == (0.8, 1.0, True)
    crossing = inside + [geo.RayProbe(d, 1.2, 1.3)]
    r_max, c_min, ok = geo.straddling_from_probes(crossing)
    assert (r_max, c_min, ok) == (1.2, 1.0, False)
    with pytest.raises(DataError):
        geo.straddling_from_probes([geo.RayProbe(d, 0.5, np.inf)])


def test_straddling_of_exact_vectors(exact_vectors):
    S, E = exact_vectors
    r_max, c_min, _ = geo.straddling_check(
        geo.realized_state_space(S), geo.consistent_state_space(E), 20, np.random.default_rng(8))
    assert 0.0 < r_max and 0.0 < c_min
