import math

import numpy as np
import pytest

from divbs.errors import ContractViolationError
from divbs.linalg import FeatureMatrix, OrthonormalBasis, batch_sum
from divbs.objective import representativeness
from divbs.selectors import (
    SelectionConfig,
    SelectionResult,
    pad_selection,
    select_divbs,
    select_greedy,
    select_kmeanspp,
    select_top_score,
    select_uniform,
)

HAND = FeatureMatrix(np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))


def cfg(budget, **kw):
    kw.setdefault("pad_policy", "none")
    return SelectionConfig(budget=budget, **kw)


class TestGreedy:
    def test_hand_example(self):
        result = select_greedy(HAND, cfg(2))
        assert result.indices == [0, 2]
        assert result.step_scores == [2.0, 1.0]

    def test_single_row(self):
        fm = FeatureMatrix(np.array([[2.0, 3.0]]))
        assert select_greedy(fm, cfg(1)).indices == [0]

    def test_budget_exceeds_rows(self):
        with pytest.raises(ContractViolationError):
            select_greedy(HAND, cfg(4))

    def test_duplicate_rows_excluded(self):
        fm = FeatureMatrix(np.array([[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]]))
        result = select_greedy(fm, cfg(3))
        assert result.indices == [0]

    def test_step_scores_compose_r_prime(self):
        rng = np.random.default_rng(20)
        fm = FeatureMatrix(rng.standard_normal((20, 8)))
        result = select_greedy(fm, cfg(6))
        for t in range(1, len(result.indices) + 1):
            prefix_rp = representativeness(fm, result.indices[:t]).r_prime
            composed = math.sqrt(sum(s * s for s in result.step_scores[:t]))
            assert prefix_rp == pytest.approx(composed, rel=1e-9)

    def test_selected_rows_independent(self):
        rng = np.random.default_rng(21)
        base = rng.standard_normal((4, 6))
        # batch with deliberate duplicates
        X = np.vstack([base, base[0:2]])
        fm = FeatureMatrix(X)
        result = select_greedy(fm, cfg(6))
        obj = representativeness(fm, result.indices)
        assert obj.basis_size == len(result.indices)


class TestDivbs:
    def test_hand_example(self):
        result = select_divbs(HAND, cfg(2))
        assert result.indices == [0, 2]

    def test_zero_sum_terminates_empty(self):
        fm = FeatureMatrix(np.array([[1.0, 0.0], [-1.0, 0.0]]))
        result = select_divbs(fm, cfg(1))
        assert result.indices == []
        assert result.objective.r == 0.0

    def test_running_sum_stays_orthogonal(self):
        rng = np.random.default_rng(22)
        X = rng.standard_normal((30, 10))
        fm = FeatureMatrix(X)
        result = select_divbs(fm, cfg(8))
        total0 = np.linalg.norm(batch_sum(fm))
        basis = OrthonormalBasis(10)
        running = batch_sum(fm)
        for idx in result.indices:
            e = basis.extend(X[idx])
            running = running - np.dot(e, running) * e
            assert np.all(np.abs(basis.vectors @ running) <= 1e-9 * total0)

    def test_median_ratio_vs_greedy(self):
        rng = np.random.default_rng(23)
        ratios = []
        for _ in range(200):
            fm = FeatureMatrix(rng.standard_normal((64, 16)))
            c = cfg(8)
            g = select_greedy(fm, c).objective.r
            a = select_divbs(fm, c).objective.r
            ratios.append(a / g)
        assert float(np.median(ratios)) >= 0.9


class TestUniform:
    def test_deterministic(self):
        fm = FeatureMatrix(np.random.default_rng(0).standard_normal((10, 3)))
        a = select_uniform(fm, cfg(4, seed=99))
        b = select_uniform(fm, cfg(4, seed=99))
        assert a.indices == b.indices

    def test_full_budget(self):
        fm = FeatureMatrix(np.eye(5))
        result = select_uniform(fm, cfg(5, seed=1))
        assert sorted(result.indices) == list(range(5))

    def test_frequency(self):
        fm = FeatureMatrix(np.random.default_rng(1).standard_normal((10, 2)))
        counts = np.zeros(10)
        trials = 100_000
        rng_seeds = range(trials)
        for s in rng_seeds:
            idx = np.random.default_rng(s).choice(10, size=3, replace=False)
            counts[idx] += 1
        # sanity-check the rng itself, then spot-check the selector on a slice
        np.testing.assert_allclose(counts / trials, 0.3, atol=0.01)
        for s in range(50):
            assert (
                select_uniform(fm, cfg(3, seed=s)).indices
                == list(np.random.default_rng(s).choice(10, size=3, replace=False))
            )


class TestTopScore:
    def test_hand_example(self):
        fm = FeatureMatrix(np.zeros((3, 2)) + 1.0)
        result = select_top_score(fm, [3.0, 1.0, 2.0], cfg(2))
        assert result.indices == [0, 2]

    def test_tie_break(self):
        fm = FeatureMatrix(np.ones((3, 2)))
        result = select_top_score(fm, [1.0, 1.0, 1.0], cfg(2))
        assert result.indices == [0, 1]

    def test_grad_norm_mode(self):
        fm = FeatureMatrix(np.array([[3.0, 0.0], [1.0, 1.0]]))
        result = select_top_score(fm, None, cfg(1))
        assert result.indices == [0]

    def test_length_mismatch(self):
        fm = FeatureMatrix(np.ones((3, 2)))
        with pytest.raises(ContractViolationError):
            select_top_score(fm, [1.0, 2.0], cfg(1))


class TestKmeanspp:
    def test_deterministic(self):
        fm = FeatureMatrix(np.random.default_rng(2).standard_normal((12, 3)))
        a = select_kmeanspp(fm, cfg(4, seed=7))
        b = select_kmeanspp(fm, cfg(4, seed=7))
        assert a.indices == b.indices

    def test_duplicate_only_batch(self):
        fm = FeatureMatrix(np.tile([2.0, -1.0], (3, 1)))
        result = select_kmeanspp(fm, cfg(2, seed=3))
        assert len(result.indices) == 2
        assert len(set(result.indices)) == 2

    def test_separated_clusters(self):
        rng = np.random.default_rng(4)
        X = np.vstack(
            [rng.normal(0.0, 0.01, size=(4, 2)), rng.normal(100.0, 0.01, size=(4, 2))]
        )
        fm = FeatureMatrix(X)
        hits = 0
        runs = 10_000
        for s in range(runs):
            idx = select_kmeanspp(fm, cfg(2, seed=s)).indices
            if (idx[0] < 4) != (idx[1] < 4):
                hits += 1
        assert hits / runs >= 0.99


class TestPadding:
    def test_full_selection_unchanged(self):
        fm = FeatureMatrix(np.eye(3))
        c = SelectionConfig(budget=2, pad_policy="uniform-random", seed=5)
        result = select_greedy(fm, c)
        assert len(result.indices) == 2
        assert result.padded == [False, False]

    def test_empty_selection_padded(self):
        fm = FeatureMatrix(np.array([[1.0, 0.0], [-1.0, 0.0], [1.0, 0.0]]))
        base = SelectionResult([], [], representativeness(fm, []), [], 0.0)
        c = SelectionConfig(budget=2, pad_policy="uniform-random", seed=5)
        padded = pad_selection(base, fm, c)
        assert len(padded.indices) == 2
        assert padded.padded == [True, True]

    def test_padded_rows_never_duplicate(self):
        rng = np.random.default_rng(6)
        fm = FeatureMatrix(rng.standard_normal((10, 2)))
        base = SelectionResult([1, 4], [False, False], representativeness(fm, [1, 4]), [], 0.0)
        c = SelectionConfig(budget=7, pad_policy="uniform-random", seed=8)
        padded = pad_selection(base, fm, c)
        assert len(padded.indices) == 7
        assert len(set(padded.indices)) == 7
        assert padded.padded == [False, False] + [True] * 5

    def test_divbs_early_stop_pads_to_budget(self):
        fm = FeatureMatrix(np.array([[1.0, 0.0], [-1.0, 0.0], [0.5, 0.0]]))
        c = SelectionConfig(budget=2, pad_policy="uniform-random", seed=0)
        result = select_divbs(fm, c)
        assert len(result.indices) == 2


class TestDeterminismAndScaling:
    @pytest.mark.parametrize("selector", [select_greedy, select_divbs])
    def test_power_of_two_scaling(self, selector):
        rng = np.random.default_rng(30)
        X = rng.standard_normal((24, 6))
        base = selector(FeatureMatrix(X), cfg(5)).indices
        for c in (2.0**-3, 2.0**5):
            assert selector(FeatureMatrix(c * X), cfg(5)).indices == base

    def test_repeat_runs_bitwise(self):
        rng = np.random.default_rng(31)
        fm = FeatureMatrix(rng.standard_normal((20, 5)))
        for selector in (select_greedy, select_divbs, select_uniform, select_kmeanspp):
            runs = [selector(fm, cfg(4, seed=11)).indices for _ in range(3)]
            assert runs[0] == runs[1] == runs[2]
