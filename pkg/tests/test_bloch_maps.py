import numpy as np
import pytest
from hypothesis import given, strategies as st

from models.qutrit import (
    PURE_NORM, UNIT_EFFECT, bloch_to_effect, bloch_to_state, depolarize, effect_to_bloch,
    ideal_probability_matrix, predict_probability, projector, sample_haar_pure_state, state_to_bloch,
)
from solver.errors import ArgumentError, DomainError, NumericalError


def test_maximally_mixed_is_center():
    assert np.allclose(state_to_bloch(np.eye(3) / 3), UNIT_EFFECT)


def test_identity_effect_is_unit():
    assert np.allclose(effect_to_bloch(np.eye(3)), UNIT_EFFECT)
    assert np.allclose(effect_to_bloch(np.zeros((3, 3))), 0.0)


def test_pure_state_norm():
    rng = np.random.default_rng(0)
    for _ in range(20):
        s = state_to_bloch(sample_haar_pure_state(rng))
        assert s[0] == 1.0
        assert np.linalg.norm(s[1:]) == pytest.approx(PURE_NORM, abs=1e-12)


def test_round_trips():
    rng = np.random.default_rng(1)
    rho = sample_haar_pure_state(rng)
    assert np.allclose(bloch_to_state(state_to_bloch(rho)), rho, atol=1e-12)
    Q = 0.3 * projector(rng.standard_normal(3) + 1j * rng.standard_normal(3)) + 0.2 * np.eye(3)
    assert np.allclose(bloch_to_effect(effect_to_bloch(Q)), Q, atol=1e-12)


def test_probability_rule_is_dot_product():
    rng = np.random.default_rng(2)
    rho, P = sample_haar_pure_state(rng), sample_haar_pure_state(rng)
    p = predict_probability(rho, P)
    assert p == pytest.approx(state_to_bloch(rho) @ effect_to_bloch(P), abs=1e-12)
    assert predict_probability(rho, np.eye(3)) == pytest.approx(1.0)


def test_domain_errors():
    with pytest.raises(DomainError):
        state_to_bloch(np.eye(3))
    with pytest.raises(DomainError):
        bloch_to_state(np.zeros(9))
    with pytest.raises(ArgumentError):
        state_to_bloch(np.array([[1, 1j, 0], [1j, 0, 0], [0, 0, 0]]))
    with pytest.raises(ArgumentError):
        effect_to_bloch(np.eye(2))


def test_invalid_pair_is_numerical_error():
    rho = projector(np.array([1, 0, 0]))
    with pytest.raises(NumericalError):
        predict_probability(rho, 2 * np.eye(3))


def test_depolarize_contracts_bloch_vector():
    rho = sample_haar_pure_state(np.random.default_rng(3))
    s = state_to_bloch(rho)
    s_eps = state_to_bloch(depolarize(rho, 0.1))
    assert np.allclose(s_eps[1:], 0.9 * s[1:])
    with pytest.raises(ArgumentError):
        depolarize(rho, 1.5)


def test_ideal_matrix_has_unit_column():
    rng = np.random.default_rng(4)
    rhos = [sample_haar_pure_state(rng) for _ in range(4)]
    D = ideal_probability_matrix(rhos, rhos[:2])
    assert D.shape == (4, 3)
    assert np.allclose(D[:, 0], 1.0)
    assert D[0, 1] == pytest.approx(1.0)
    assert D[1, 2] == pytest.approx(1.0)


@given(
    a=st.floats(-2, 2, allow_nan=False),
    b=st.floats(-2, 2, allow_nan=False),
    seed=st.integers(0, 2**16),
)
def test_effect_map_is_linear(a, b, seed):
    rng = np.random.default_rng(seed)
    H = rng.standard_normal((2, 3, 3)) + 1j * rng.standard_normal((2, 3, 3))
    Q1, Q2 = H[0] + H[0].conj().T, H[1] + H[1].conj().T
    lhs = effect_to_bloch(a * Q1 + b * Q2)
    rhs = a * effect_to_bloch(Q1) + b * effect_to_bloch(Q2)
    assert np.allclose(lhs, rhs, atol=1e-10)
