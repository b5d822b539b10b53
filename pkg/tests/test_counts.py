import numpy as np
import pytest

from models.experiment import (
    TEST_STREAM, CountTable, FrequencyMatrix, build_haar_design,
    counts_to_frequencies, simulate_counts,
)
from solver.errors import DataError


def _one_cell_table(c0, c1, c2):
    return CountTable(np.array([[c0]]), np.array([[c1]]), np.array([[c2]]), exposure=2.0, rate=2000.0)


def test_saturated_cell_uses_floor():
    d = build_haar_design(1, 1, np.random.default_rng(0))
    F = counts_to_frequencies(_one_cell_table(4000, 0, 0), d)
    assert F.f[0, 1] == 1.0
    assert F.sigma[0, 1] == pytest.approx(1 / 8000)


def test_binomial_uncertainty():
    d = build_haar_design(1, 1, np.random.default_rng(0))
    F = counts_to_frequencies(_one_cell_table(1000, 1500, 1500), d)
    assert F.f[0, 1] == pytest.approx(0.25)
    assert F.sigma[0, 1] == pytest.approx(np.sqrt(0.25 * 0.75 / 4000), rel=1e-9)
    assert F.f[0, 0] == 1.0 and F.sigma[0, 0] == 0.0


def test_zero_count_cell_is_reported():
    d = build_haar_design(1, 1, np.random.default_rng(0))
    with pytest.raises(DataError, match="P0, M1"):
        counts_to_frequencies(_one_cell_table(0, 0, 0), d)


def test_expected_counts_give_exact_probabilities(haar_design):
    table = simulate_counts(haar_design, 2000, 2, seed=0, expected=True)
    F = counts_to_frequencies(table, haar_design)
    assert np.abs(F.f - haar_design.ideal_probabilities()).max() < 1e-12


def test_zero_exposure_gives_no_counts(haar_design):
    table = simulate_counts(haar_design, 2000, 0, seed=0)
    assert table.total.sum() == 0


def test_total_counts_are_poissonian(haar_design):
    table = simulate_counts(haar_design, 2000, 2, seed=1)
    total = table.total
    assert abs(total.mean() - 4000) < 10
    assert abs(total.var() / 4000 - 1) < 0.2


def test_ideal_pairs_rarely_click_elsewhere(haar_design):
    table = simulate_counts(haar_design, 2000, 2, seed=2)
    diag = np.arange(haar_design.n)
    assert (table.counts1[diag, diag] + table.counts2[diag, diag]).max() == 0


def test_error_shrinks_with_exposure():
    d = build_haar_design(20, 20, np.random.default_rng(3))
    D = d.ideal_probabilities()
    errs = []
    for exposure in (1, 2, 4, 8, 16):
        F = counts_to_frequencies(simulate_counts(d, 500, exposure, seed=4), d)
        errs.append(np.abs(F.f - D)[:, 1:].mean())
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_streams_are_independent_and_reproducible(haar_design):
    a = simulate_counts(haar_design, 2000, 2, seed=5)
    b = simulate_counts(haar_design, 2000, 2, seed=5)
    c = simulate_counts(haar_design, 2000, 2, seed=5, stream=TEST_STREAM)
    assert np.array_equal(a.counts0, b.counts0)
    assert not np.array_equal(a.counts0, c.counts0)


def test_threads_do_not_change_draws(haar_design):
    a = simulate_counts(haar_design, 2000, 2, seed=6, threads=1)
    b = simulate_counts(haar_design, 2000, 2, seed=6, threads=4)
    for x, y in zip((a.counts0, a.counts1, a.counts2), (b.counts0, b.counts1, b.counts2)):
        assert np.array_equal(x, y)


def test_masked_cells_have_zero_weight(fiducial_design):
    table = simulate_counts(fiducial_design, 2000, 2, seed=7)
    assert table.total[~fiducial_design.mask[:, 1:]].sum() == 0
    F = counts_to_frequencies(table, fiducial_design)
    assert np.isinf(F.sigma[~F.mask]).all()
    assert (F.weights[~F.mask] == 0).all()
    assert (F.weights[:, 0] == 0).all()
    assert (F.weights[F.probed] > 0).all()


def test_frequency_matrix_files(tmp_path, fiducial_design):
    F = counts_to_frequencies(simulate_counts(fiducial_design, 2000, 2, seed=8), fiducial_design)
    F.save(str(tmp_path), "train")
    back = FrequencyMatrix.load(str(tmp_path), "train")
    assert np.array_equal(back.mask, F.mask)
    assert np.allclose(back.f, F.f)
    assert np.array_equal(np.isinf(back.sigma), np.isinf(F.sigma))


def test_count_table_files(tmp_path, haar_design):
    table = simulate_counts(haar_design, 2000, 2, seed=9)
    table.save(str(tmp_path), "train")
    back = CountTable.load(str(tmp_path), "train", rate=2000, exposure=2)
    assert np.array_equal(back.counts2, table.counts2)
