import numpy as np
import pytest

from models.config import FitOptions
from models.experiment import (
    TEST_STREAM, TRAIN_STREAM, Design, build_haar_design, counts_to_frequencies, simulate_counts,
)
from solver.errors import ArgumentError
from solver.lowrank import FitReport, rank_sweep, reports_to_frame, select_rank

FAST = FitOptions(n_restarts=2)


def _train_test(design, seed, epsilon=0.01):
    return [
        counts_to_frequencies(
            simulate_counts(design, 4000, 1, seed=seed, stream=s, epsilon=epsilon), design)
        for s in (TRAIN_STREAM, TEST_STREAM)
    ]


def _classical_trit_design(m, n, rng):
    probs = rng.dirichlet(np.ones(3), size=m)
    effects = rng.uniform(0.0, 1.0, size=(n, 3))
    return Design(
        preparations=np.array([np.diag(p) for p in probs]),
        measurements=np.array([np.diag(q) for q in effects]),
        mask=np.ones((m, n + 1), dtype=bool),
    )


@pytest.fixture(scope="module")
def qutrit_sweep():
    design = build_haar_design(30, 30, np.random.default_rng(21))
    F_train, F_test = _train_test(design, seed=0)
    return rank_sweep(F_train, F_test, range(2, 13), FAST, seed=0)


def test_qutrit_data_selects_rank_9(qutrit_sweep):
    assert qutrit_sweep.selected_rank == 9


def test_underfit_profile(qutrit_sweep):
    test = {r.rank: r.chi2_test for r in qutrit_sweep.reports}
    assert test[2] > 10 * test[9]
    assert all(test[k] > test[9] for k in range(2, 9))


def test_training_error_is_nested(qutrit_sweep):
    train = [r.chi2_train for r in qutrit_sweep.reports]
    assert all(b <= a * (1 + 1e-6) + 1e-9 for a, b in zip(train, train[1:]))


def test_classical_trit_selects_rank_3():
    design = _classical_trit_design(30, 30, np.random.default_rng(5))
    F_train, F_test = _train_test(design, seed=1, epsilon=0.0)
    sweep = rank_sweep(F_train, F_test, [2, 3, 4, 5], FAST, seed=1)
    assert sweep.selected_rank == 3


def test_single_rank():
    design = build_haar_design(12, 12, np.random.default_rng(3))
    F_train, F_test = _train_test(design, seed=2)
    sweep = rank_sweep(F_train, F_test, [9], FAST)
    assert sweep.selected_rank == 9
    assert len(sweep.reports) == 1


def test_bad_rank_lists():
    design = build_haar_design(12, 12, np.random.default_rng(3))
    F_train, F_test = _train_test(design, seed=2)
    with pytest.raises(ArgumentError):
        rank_sweep(F_train, F_test, [])
    with pytest.raises(ArgumentError):
        rank_sweep(F_train, F_test, [9, 8])


def test_tie_break_prefers_smaller_rank():
    reports = [FitReport(8, 0.0, chi2_test=100.05), FitReport(9, 0.0, chi2_test=100.0),
               FitReport(10, 0.0, chi2_test=120.0)]
    assert select_rank(reports) == 8
    reports[0].chi2_test = 101.0
    assert select_rank(reports) == 9


def test_report_frame(qutrit_sweep):
    frame = reports_to_frame(qutrit_sweep.reports)
    assert list(frame["rank"]) == list(range(2, 13))
    assert {"chi2_train", "chi2_test", "iterations", "converged"} <= set(frame.columns)
    assert (frame["chi2_test"] >= 0).all()
