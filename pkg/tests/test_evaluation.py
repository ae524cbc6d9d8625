from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cefrlevel.corpus import Level
from cefrlevel.evaluation import (
    DEFAULT_COSTS,
    AblationRow,
    accuracy,
    confusion_matrix,
    cost_error,
    format_table,
    load_cost_matrix,
    stratified_kfold,
    validate_cost_matrix,
    write_ablation_report,
)

# published 3-fold confusion matrix, rows = true level
PUBLISHED_CONFUSION = np.array([
    [11224, 54, 3, 0, 1, 0],
    [99, 7531, 42, 0, 0, 0],
    [30, 95, 5297, 23, 7, 1],
    [0, 4, 32, 2273, 14, 1],
    [7, 2, 7, 35, 465, 19],
    [1, 2, 2, 6, 4, 29],
])


def exact_error(conf, cost):
    total = sum(Fraction(int(c)) * int(n) for crow, nrow in zip(cost, conf) for c, n in zip(crow, nrow))
    return 100 * total / int(np.sum(conf))


class TestCostMatrix:
    def test_published_costs(self):
        assert DEFAULT_COSTS[Level.C2, Level.A1] == 44
        assert DEFAULT_COSTS[Level.A1, Level.C2] == 6
        assert not np.diag(DEFAULT_COSTS).any()

    def test_lower_triangle_dominates(self):
        # under-predicting a high level is always at least as costly as the mirror error
        for i in range(6):
            for j in range(i):
                assert DEFAULT_COSTS[i, j] >= DEFAULT_COSTS[j, i]

    def test_load_round_trip(self, tmp_path):
        p = tmp_path / "cost.txt"
        p.write_text("# costs\n" + "\n".join(" ".join(str(int(v)) for v in row) for row in DEFAULT_COSTS))
        np.testing.assert_array_equal(load_cost_matrix(p), DEFAULT_COSTS)

    @pytest.mark.parametrize("bad", [np.ones((6, 6)), np.zeros((5, 5)), -np.eye(6)[::-1]])
    def test_validation(self, bad):
        with pytest.raises(ValueError):
            validate_cost_matrix(bad)


class TestCostError:
    def test_published_matrix(self):
        oracle = exact_error(PUBLISHED_CONFUSION, DEFAULT_COSTS)
        assert oracle == Fraction(171800, 27310)
        assert cost_error(PUBLISHED_CONFUSION) == pytest.approx(float(oracle), abs=1e-12)
        assert cost_error(PUBLISHED_CONFUSION) == pytest.approx(6.2907, abs=5e-4)

    def test_published_accuracy(self):
        assert accuracy(PUBLISHED_CONFUSION) == pytest.approx(26819 / 27310, abs=1e-15)

    def test_single_worst_error(self):
        conf = confusion_matrix([Level.C2], [Level.A1])
        assert cost_error(conf) == 4400.0

    def test_perfect(self):
        conf = confusion_matrix([0, 1, 2, 3, 4, 5], [0, 1, 2, 3, 4, 5])
        assert cost_error(conf) == 0.0
        assert accuracy(conf) == 1.0

    def test_empty(self):
        with pytest.raises(ValueError):
            cost_error(np.zeros((6, 6)))
        with pytest.raises(ValueError):
            accuracy(np.zeros((6, 6)))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=1, max_size=60))
    def test_matches_exact_sum(self, pairs):
        t, p = zip(*pairs)
        conf = confusion_matrix(t, p)
        assert conf.sum() == len(pairs)
        assert cost_error(conf) == pytest.approx(float(exact_error(conf, DEFAULT_COSTS)), rel=1e-12)


def brute_force_balanced(labels, folds, k):
    for c in set(labels):
        counts = [sum(1 for y, f in zip(labels, folds) if y == c and f == j) for j in range(k)]
        if max(counts) - min(counts) > 1:
            return False
    return True


class TestStratifiedKFold:
    def test_hundred_random_multisets(self):
        rng = np.random.default_rng(7)
        for trial in range(100):
            k = int(rng.integers(2, 6))
            n = int(rng.integers(k, 200))
            labels = rng.integers(0, 6, size=n).tolist()
            folds = stratified_kfold(labels, k, seed=trial)
            assert brute_force_balanced(labels, folds.tolist(), k)
            assert set(folds.tolist()) <= set(range(k))

    def test_partition_and_sizes(self):
        labels = [0] * 10 + [1] * 7 + [5]
        folds = stratified_kfold(labels, 3, seed=1)
        sizes = np.bincount(folds, minlength=3)
        assert sizes.sum() == 18 and sizes.max() - sizes.min() <= 1

    def test_deterministic(self):
        labels = list(range(6)) * 20
        np.testing.assert_array_equal(stratified_kfold(labels, 3, 4), stratified_kfold(labels, 3, 4))
        assert not np.array_equal(stratified_kfold(labels, 3, 4), stratified_kfold(labels, 3, 5))

    def test_small_class_warns(self, caplog):
        stratified_kfold([0, 0, 0, 1], 3)
        assert "fewer than k" in caplog.text

    @pytest.mark.parametrize("k,n", [(1, 10), (11, 10)])
    def test_bad_k(self, k, n):
        with pytest.raises(ValueError):
            stratified_kfold([0] * n, k)


class TestReports:
    def test_ablation_files(self, tmp_path):
        rows = [AblationRow("+numeric", ("numeric",), 20.5, 0.8), AblationRow("+lm", ("numeric", "lm"), 18.0, 0.82)]
        write_ablation_report(rows, tmp_path, "cumulative")
        assert (tmp_path / "ablation_cumulative.csv").read_text().splitlines()[1] == "+numeric,20.500000,0.800000"
        assert (tmp_path / "plot_cumulative.csv").read_text().splitlines()[2].startswith("2,")
        assert "+lm" in format_table(rows)
