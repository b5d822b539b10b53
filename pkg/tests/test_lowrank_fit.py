import numpy as np
import pytest

from models.config import FitOptions
from models.experiment import FrequencyMatrix, counts_to_frequencies, simulate_counts
from solver.errors import ArgumentError
from solver import geometry as geo
from solver import lowrank
from solver.gauge import gauge_fix
from solver.lowrank import GptModel, fit_masked, fit_rank_k

FAST = FitOptions(n_restarts=2)


@pytest.fixture(scope="module")
def exact_haar(haar_design):
    return FrequencyMatrix.from_probabilities(haar_design.ideal_probabilities())


def test_noiseless_rank9_is_exact(exact_haar):
    model, report = fit_rank_k(exact_haar, 9, FAST)
    assert report.chi2_train < 1e-6
    assert np.abs(model.probabilities() - exact_haar.f).max() < 1e-6
    assert report.converged


def test_noiseless_rank8_underfits(exact_haar):
    _, report = fit_rank_k(exact_haar, 8, FAST)
    assert report.chi2_train > 1e-6


def test_unit_column_convention(exact_haar):
    model, _ = fit_rank_k(exact_haar, 9, FAST)
    assert np.allclose(model.S[:, 0], 1.0)
    assert np.array_equal(model.E[:, 0], np.eye(9)[0])
    assert np.allclose(model.S @ model.E[:, 0], 1.0, atol=1e-9)


def test_single_row_unit_column_only():
    F = FrequencyMatrix.from_probabilities(np.ones((1, 1)))
    model, report = fit_rank_k(F, 1)
    assert report.chi2_train == 0.0
    assert np.allclose(model.probabilities(), 1.0)


def test_rank_out_of_range(exact_haar):
    with pytest.raises(ArgumentError):
        fit_rank_k(exact_haar, 0)
    with pytest.raises(ArgumentError):
        fit_rank_k(exact_haar, 40)


def test_noisy_fit_is_monotone_and_valid(haar_design):
    table = simulate_counts(haar_design, 2000, 2, seed=0, epsilon=0.01)
    F = counts_to_frequencies(table, haar_design)
    model, report = fit_rank_k(F, 9, FAST)
    h = report.chi2_history
    assert all(b <= a * (1 + 1e-6) + 1e-9 for a, b in zip(h, h[1:]))
    D = model.probabilities()
    assert D[:, 1:].min() >= -1e-6 and D[:, 1:].max() <= 1 + 1e-6
    assert report.max_violation < 1e-6


def test_testing_error_of_exact_generator(exact_haar):
    model, _ = fit_rank_k(exact_haar, 9, FAST)
    assert lowrank.testing_error(model, exact_haar) < 1e-6


def test_testing_error_shape_mismatch(exact_haar):
    model = GptModel(np.ones((3, 1)), np.eye(1, 4))
    with pytest.raises(ArgumentError):
        lowrank.testing_error(model, exact_haar)


def test_testing_error_mask_mismatch(exact_haar):
    model, _ = fit_rank_k(exact_haar, 9, FAST)
    other = exact_haar.mask.copy()
    other[0, 1] = False
    with pytest.raises(ArgumentError):
        lowrank.testing_error(model, exact_haar, train_mask=other)


def test_masked_fit_with_full_mask_matches_dense_fit(exact_haar):
    a, ra = fit_rank_k(exact_haar, 9, FAST, seed=3)
    b, rb = fit_masked(exact_haar, 9, FAST, seed=3)
    assert np.allclose(a.probabilities(), b.probabilities(), atol=1e-8)
    assert ra.chi2_train == pytest.approx(rb.chi2_train, abs=1e-9)


def test_masked_fit_completes_unfilled_block(fiducial_design):
    D = fiducial_design.ideal_probabilities()
    F = FrequencyMatrix.from_probabilities(D, mask=fiducial_design.mask)
    model, report = fit_masked(F, 9, FAST)
    assert report.chi2_train < 1e-6
    hidden = ~fiducial_design.mask
    assert hidden.sum() == 60 * 60
    assert np.abs(model.probabilities()[hidden] - D[hidden]).max() < 1e-4


@pytest.fixture(scope="module")
def noisy_fiducial_fit(fiducial_design):
    table = simulate_counts(fiducial_design, 2000, 2, seed=0, epsilon=0.01)
    F = counts_to_frequencies(table, fiducial_design)
    return fit_masked(F, 9, FitOptions())


def test_noisy_masked_fit_stays_inside_unit_interval(noisy_fiducial_fit):
    model, report = noisy_fiducial_fit
    D = model.probabilities()
    assert report.max_violation < 1e-9
    assert D[:, 1:].min() >= -1e-9 and D[:, 1:].max() <= 1 + 1e-9
    assert np.allclose(D[:, 0], 1.0, atol=1e-9)


def test_noisy_masked_fit_realized_inside_consistent(noisy_fiducial_fit, fiducial_design):
    model, _ = noisy_fiducial_fit
    gauge = gauge_fix(model, fiducial_design.generator_state_vectors())
    S_real = geo.realized_state_space(gauge.S_realized)
    E_real = geo.realized_effect_space(gauge.E_realized)
    assert geo.containment_slack(S_real, geo.consistent_state_space(gauge.E_realized)) >= -1e-9
    assert geo.containment_slack(E_real, geo.consistent_effect_space(S_real.vertices)) >= -1e-9


def test_shrink_lands_column_on_the_box():
    S = np.array([[1.0, 0.9], [1.0, -0.9], [1.0, 0.1]])
    E = np.array([[1.0, 0.5, 0.2], [0.0, 1.0, 0.1]])
    E2 = lowrank._shrink_to_box(S, E)
    D = S @ E2
    assert np.array_equal(E2[:, :1], E[:, :1])
    assert D[:, 1:].min() >= -1e-15 and D[:, 1:].max() <= 1 + 1e-15
    assert D[:, 1].max() == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(E2[:, 2], E[:, 2])


def test_bounded_column_refit_respects_bounds():
    rng = np.random.default_rng(4)
    S = np.hstack([np.ones((40, 1)), rng.uniform(-0.5, 0.5, size=(40, 2))])
    x = np.clip(S @ np.array([0.5, 1.4, 0.0]), 0.0, 1.0)
    e = lowrank._bounded_column(x, np.ones(40), S)
    assert e is not None
    assert (S @ e).min() >= -1e-7 and (S @ e).max() <= 1 + 1e-7


def test_model_files(tmp_path, exact_haar):
    model, _ = fit_rank_k(exact_haar, 9, FAST)
    model.save(str(tmp_path), "9")
    back = GptModel.load(str(tmp_path), "9")
    assert back.rank == 9
    assert np.allclose(back.probabilities(), model.probabilities())
