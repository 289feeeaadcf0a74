import numpy as np
import pytest

from tslatent.analysis import (
    FEATURE_COLUMNS,
    PARALLEL_COLUMNS,
    SWEEP_COLUMNS,
    SweepGrid,
    correlation_matrix,
    export_parallel_coordinates,
    f_scores,
    permutation_importance,
    run_sweep,
    select_epoch_budget,
)
from tslatent.core import TimeSeries
from tslatent.encoder import EncoderConfig
from tslatent.errors import DegenerateTarget, InsufficientRows, ValidationError

TINY_ENC = EncoderConfig(patch_len=8, d_model=16, n_layers=1, n_heads=2, ffn_dim=32, max_patches=32)


def two_pass_correlation(table):
    """Independent oracle: explicit two-pass covariance computation."""
    table = np.asarray(table, dtype=float)
    n, m = table.shape
    means = [sum(table[:, j]) / n for j in range(m)]
    out = np.eye(m)
    for i in range(m):
        for j in range(i + 1, m):
            cov = sum((table[r, i] - means[i]) * (table[r, j] - means[j]) for r in range(n)) / n
            si = np.sqrt(sum((table[r, i] - means[i]) ** 2 for r in range(n)) / n)
            sj = np.sqrt(sum((table[r, j] - means[j]) ** 2 for r in range(n)) / n)
            out[i, j] = out[j, i] = cov / (si * sj)
    return out


def random_table(n, seed, columns=6):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n, columns))


class TestCorrelationMatrix:
    def test_diagonal_and_affine_identity(self):
        x = np.arange(10, dtype=float)
        table = np.stack([x, 2 * x + 1, np.random.default_rng(0).normal(size=10)], axis=1)
        corr = correlation_matrix(table)
        assert np.all(np.diag(corr) == 1.0)
        assert corr[0, 1] == pytest.approx(1.0, abs=1e-12)

    def test_matches_two_pass_oracle(self):
        table = random_table(18, seed=1)
        corr = correlation_matrix(table)
        oracle = two_pass_correlation(table)
        assert np.allclose(corr, oracle, atol=1e-10)

    def test_symmetry_and_bounds(self):
        table = random_table(25, seed=2)
        corr = correlation_matrix(table)
        assert np.array_equal(corr, corr.T)
        assert np.all(np.abs(corr) <= 1 + 1e-12)

    def test_constant_column_is_nan_not_contagious(self):
        table = random_table(12, seed=3)
        table[:, 2] = 7.0
        corr = correlation_matrix(table)
        assert np.isnan(corr[0, 2]) and np.isnan(corr[2, 1])
        assert corr[2, 2] == 1.0
        assert np.isfinite(corr[0, 1])

    def test_insufficient_rows(self):
        with pytest.raises(InsufficientRows):
            correlation_matrix(np.zeros((2, 4)))


def table_with_exact_r(r, n=18, seed=4):
    """Two columns whose sample Pearson correlation is exactly r."""
    rng = np.random.default_rng(seed)
    u = rng.normal(size=n)
    u = (u - u.mean()) / u.std()
    v = rng.normal(size=n)
    v -= v.mean()
    v -= u * (u @ v) / (u @ u)  # orthogonalize
    v /= v.std()
    y = r * u + np.sqrt(1 - r**2) * v
    return u, y


class TestFScores:
    def test_zero_correlation_zero_f(self):
        x, y = table_with_exact_r(0.0)
        table = np.zeros((18, 6))
        table[:, 0] = x
        table[:, 5] = y
        scores = f_scores(table)
        assert scores.f_values[0] == pytest.approx(0.0, abs=1e-20)

    def test_closed_form_r_half(self):
        x, y = table_with_exact_r(0.5)
        table = np.zeros((18, 6))
        table[:, 0] = x
        table[:, 1] = np.arange(18)
        table[:, 5] = y
        scores = f_scores(table, feature_names=("best_epoch",))
        assert scores.f_values[0] == pytest.approx(16.0 / 3.0, rel=1e-9)

    def test_regression_anova_identity(self):
        # F from the formula must equal SSR / (SSE / (n - 2)) of the
        # univariate least-squares fit
        rng = np.random.default_rng(5)
        x = rng.normal(size=30)
        y = 1.3 * x + rng.normal(size=30)
        table = np.zeros((30, 6))
        table[:, 0] = x
        table[:, 5] = y
        f = f_scores(table, feature_names=("best_epoch",)).f_values[0]
        slope, intercept = np.polyfit(x, y, 1)
        pred = slope * x + intercept
        ssr = np.sum((pred - y.mean()) ** 2)
        sse = np.sum((y - pred) ** 2)
        assert f == pytest.approx(ssr / (sse / (30 - 2)), rel=1e-9)

    def test_planted_effect_order_recovered(self):
        # orthogonalized features kill chance correlations, so the planted
        # weight order is exactly the F order
        rng = np.random.default_rng(6)
        n = 200
        q, _ = np.linalg.qr(rng.normal(size=(n, 4)))
        table = np.zeros((n, 6))
        table[:, :4] = q
        table[:, 5] = 5.0 * q[:, 0] + 2.0 * q[:, 1] + 0.5 * q[:, 2] + 0.05 * rng.normal(size=n)
        scores = f_scores(table)
        assert list(np.argsort(-scores.f_values)) == [0, 1, 2, 3]
        assert scores.percents.sum() == pytest.approx(100.0, abs=1e-9)

    def test_perfect_correlation_flagged(self):
        x = np.arange(20, dtype=float)
        table = np.zeros((20, 6))
        table[:, 0] = x
        table[:, 1] = np.random.default_rng(7).normal(size=20)
        table[:, 5] = 3 * x - 2
        scores = f_scores(table)
        assert scores.infinite[0]
        assert np.isinf(scores.f_values[0])
        assert scores.percents[0] == 0.0  # excluded from normalization


class TestPermutationImportance:
    def test_null_model_over_seeds(self):
        n = 150
        means = np.zeros(len(FEATURE_COLUMNS))
        for seed in range(50):
            table = random_table(n, seed=seed)
            _, raw, _ = permutation_importance(table, seed=seed)
            means += raw / 50
        assert np.all(means < 0.05)

    def test_planted_single_factor(self):
        n = 60
        for seed in range(3):
            rng = np.random.default_rng(100 + seed)
            table = np.zeros((n, 6))
            table[:, :5] = rng.normal(size=(n, 5))
            table[:, 5] = 2.0 * table[:, 1]  # only dataset_percent matters
            names, raw, pct = permutation_importance(table, seed=seed)
            assert pct[names.index("dataset_percent")] > 80.0

    def test_deterministic(self):
        table = random_table(40, seed=8)
        a = permutation_importance(table, seed=9)
        b = permutation_importance(table, seed=9)
        assert np.array_equal(a[1], b[1]) and np.array_equal(a[2], b[2])

    def test_duplicate_feature_shares_importance(self):
        rng = np.random.default_rng(10)
        n = 80
        table = np.zeros((n, 6))
        table[:, :4] = rng.normal(size=(n, 4))
        table[:, 1] = table[:, 0]  # dataset_percent duplicates best_epoch
        table[:, 5] = 3.0 * table[:, 0]
        _, raw, pct = permutation_importance(table, seed=11)
        assert np.all(raw >= 0.0)
        assert pct[0] + pct[1] > 60.0
        assert pct[0] < 95.0 and pct[1] < 95.0  # split, not winner-take-all

    def test_degenerate_target(self):
        table = random_table(20, seed=12)
        table[:, 5] = 4.2
        with pytest.raises(DegenerateTarget):
            permutation_importance(table)

    def test_percentages_sum_to_100(self):
        table = random_table(30, seed=13)
        _, raw, pct = permutation_importance(table, seed=13)
        if raw.sum() > 0:
            assert pct.sum() == pytest.approx(100.0, abs=1e-9)


class TestSelectEpochBudget:
    def test_close_frequencies_take_larger_value(self):
        epochs = [17] * 5 + [13] * 4 + [2, 3]
        assert select_epoch_budget(epochs) == 17

    def test_dominant_mode_wins(self):
        assert select_epoch_budget([10] * 9 + [20] * 2) == 10

    def test_singleton(self):
        assert select_epoch_budget([7]) == 7

    def test_output_always_present_in_input(self):
        rng = np.random.default_rng(14)
        for _ in range(100):
            epochs = list(rng.integers(1, 21, size=rng.integers(1, 40)))
            assert select_epoch_budget(epochs) in epochs

    def test_smaller_value_more_frequent(self):
        # frequencies 5 vs 4 are close, so the larger *value* wins even
        # though it is the runner-up by count
        epochs = [13] * 5 + [17] * 4
        assert select_epoch_budget(epochs) == 17


class TestParallelCoordinates:
    def test_min_max_arithmetic(self):
        table = np.zeros((3, 6))
        table[:, 1] = [0.15, 0.2, 0.3]  # dataset_percent
        table[:, 5] = [3.0, 2.0, 1.0]
        cols, out = export_parallel_coordinates(table, 3)
        col = out[:, cols.index("dataset_percent")]
        # rows come back sorted by improvement: 0.15, 0.2, 0.3 stay in order
        assert np.allclose(col, [0.0, (0.2 - 0.15) / 0.15, 1.0])

    def test_constant_column_is_half(self):
        table = np.zeros((4, 6))
        table[:, 2] = 0.25
        table[:, 5] = np.arange(4)
        cols, out = export_parallel_coordinates(table, 4)
        assert np.all(out[:, cols.index("masked_percent")] == 0.5)

    def test_row_count_and_top_selection(self):
        table = random_table(10, seed=15)
        cols, out = export_parallel_coordinates(table, 4)
        assert out.shape == (4, len(PARALLEL_COLUMNS))
        assert cols == PARALLEL_COLUMNS
        with pytest.raises(ValidationError):
            export_parallel_coordinates(table, 11)

    def test_values_in_unit_interval(self):
        table = random_table(12, seed=16)
        _, out = export_parallel_coordinates(table, 12)
        assert np.all(out >= 0) and np.all(out <= 1)


def quick_series(T=600, seed=0):
    rng = np.random.default_rng(seed)
    t = np.arange(T)
    return TimeSeries("quick", np.sin(2 * np.pi * t / 25) + rng.normal(0, 0.1, T))


class TestRunSweep:
    def test_default_grid_is_18_cells(self):
        grid = SweepGrid()
        assert grid.size == 18
        assert len(grid.cells()) == 18

    def test_row_count_matches_product(self):
        grid = SweepGrid(epochs=2, dataset_percents=(0.2, 0.3), mask_percents=(0.25,),
                         n_windows_options=(1,))
        result = run_sweep(quick_series(), grid, TINY_ENC, master_seed=1)
        assert len(result.rows) == 2
        assert result.n_failed == 0
        assert result.table().shape == (2, 6)

    def test_degenerate_grid_single_row(self):
        grid = SweepGrid(epochs=2, dataset_percents=(0.3,), mask_percents=(0.5,),
                         n_windows_options=(1,))
        result = run_sweep(quick_series(), grid, TINY_ENC, master_seed=2)
        assert len(result.rows) == 1

    def test_rerun_same_master_seed_identical(self):
        grid = SweepGrid(epochs=2, dataset_percents=(0.2,), mask_percents=(0.25, 0.5),
                         n_windows_options=(1,))
        a = run_sweep(quick_series(), grid, TINY_ENC, master_seed=3)
        b = run_sweep(quick_series(), grid, TINY_ENC, master_seed=3)
        for ra, rb in zip(a.rows, b.rows):
            assert ra.improvement == rb.improvement
            assert ra.best_epoch == rb.best_epoch

    def test_failed_cell_recorded_not_fatal(self):
        grid = SweepGrid(epochs=2, dataset_percents=(0.02, 0.3), mask_percents=(0.25,),
                         n_windows_options=(1,))
        result = run_sweep(quick_series(), grid, TINY_ENC, master_seed=4)
        assert len(result.rows) == 2
        assert result.n_failed == 1
        assert result.rows[0].failed and "RegionTooShort" in result.rows[0].error
        assert not result.rows[1].failed
