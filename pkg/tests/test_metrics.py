"""EER and detection-cost metrics against brute-force oracles."""

import numpy as np
import pytest

from helpers import det_points_oracle, eer_oracle, min_dcf_oracle
from mdadapt.backend import TrialScore, TrialScoreSet
from mdadapt.errors import ConfigError, DataError
from mdadapt.metrics import (
    DCF08,
    DCF10,
    CostParams,
    compute_det,
    eer,
    evaluate,
    min_dcf,
)


def scoreset(scores, labels):
    rows = [
        TrialScore(f"e{i}", f"t{i}", float(s), "target" if l else "nontarget")
        for i, (s, l) in enumerate(zip(scores, labels))
    ]
    return TrialScoreSet(rows)


def random_trial_set(rng, n):
    # ties on purpose: draw from a small discrete support half the time
    if rng.random() < 0.5:
        scores = rng.integers(0, 6, size=n).astype(float)
    else:
        scores = np.round(rng.standard_normal(n), 2)
    labels = rng.integers(0, 2, size=n)
    labels[0], labels[1] = 1, 0  # at least one of each
    return scores, labels


class TestComputeDet:
    def test_separable_has_perfect_operating_point(self):
        curve = compute_det(scoreset([2.0, 3.0, 0.0, 1.0], [1, 1, 0, 0]))
        joint = list(zip(curve.p_miss, curve.p_fa))
        assert (0.0, 0.0) in joint

    def test_identical_scores_degenerate_curve(self):
        curve = compute_det(scoreset([1.0] * 6, [1, 0, 1, 0, 1, 0]))
        joint = list(zip(curve.p_miss, curve.p_fa))
        assert (0.0, 1.0) in joint
        assert (1.0, 0.0) in joint
        assert len(joint) == 2

    def test_monotone_trade_off(self):
        rng = np.random.default_rng(0)
        scores, labels = random_trial_set(rng, 50)
        curve = compute_det(scoreset(scores, labels))
        assert (np.diff(curve.p_miss) >= 0).all()
        assert (np.diff(curve.p_fa) <= 0).all()

    def test_matches_brute_force_recount(self):
        rng = np.random.default_rng(1)
        for n in (4, 11, 20, 37):
            scores, labels = random_trial_set(rng, n)
            curve = compute_det(scoreset(scores, labels))
            thr, p_miss, p_fa = det_points_oracle(scores, labels)
            assert np.array_equal(curve.thresholds, thr)
            assert np.array_equal(curve.p_miss, p_miss)
            assert np.array_equal(curve.p_fa, p_fa)

    def test_missing_keys_rejected(self):
        rows = [TrialScore("e", "t", 0.5, "unknown"), TrialScore("e", "u", 1.0, "target")]
        with pytest.raises(DataError):
            compute_det(TrialScoreSet(rows))

    def test_single_class_rejected(self):
        with pytest.raises(DataError):
            compute_det(scoreset([1.0, 2.0], [1, 1]))


class TestEer:
    def test_perfectly_separable(self):
        assert eer(compute_det(scoreset([2.0, 3.0, 0.0, 1.0], [1, 1, 0, 0]))) == 0.0

    def test_interleaved_quartet_interpolates_to_25(self):
        value = eer(compute_det(scoreset([1.0, 3.0, 0.0, 2.0], [1, 1, 0, 0])))
        assert value == 25.0

    def test_coin_flip_keys_near_50(self):
        rng = np.random.default_rng(2)
        scores = rng.standard_normal(2000)
        labels = rng.integers(0, 2, size=2000)
        value = eer(compute_det(scoreset(scores, labels)))
        assert abs(value - 50.0) < 5.0

    def test_matches_oracle_on_random_sets(self):
        rng = np.random.default_rng(3)
        for n in (4, 9, 25, 60, 120, 200):
            scores, labels = random_trial_set(rng, n)
            value = eer(compute_det(scoreset(scores, labels)))
            assert value == eer_oracle(scores, labels)

    def test_invariant_under_strictly_increasing_transforms(self):
        rng = np.random.default_rng(4)
        scores, labels = random_trial_set(rng, 80)
        base = eer(compute_det(scoreset(scores, labels)))
        affine = eer(compute_det(scoreset(3.0 * scores + 7.0, labels)))
        warped = eer(compute_det(scoreset(np.tanh(scores / 10.0), labels)))
        assert abs(base - affine) < 1e-12
        assert abs(base - warped) < 1e-12

    def test_range(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            scores, labels = random_trial_set(rng, 30)
            value = eer(compute_det(scoreset(scores, labels)))
            assert 0.0 <= value <= 100.0


class TestMinDcf:
    def test_separable_is_zero(self):
        curve = compute_det(scoreset([2.0, 3.0, 0.0, 1.0], [1, 1, 0, 0]))
        assert min_dcf(curve, DCF10) == 0.0
        assert min_dcf(curve, DCF08) == 0.0

    def test_uninformative_scores_cost_one(self):
        curve = compute_det(scoreset([1.0] * 4, [1, 0, 1, 0]))
        params = CostParams(p_target=0.5, c_miss=1.0, c_fa=1.0)
        assert min_dcf(curve, params) == 1.0

    def test_matches_oracle_on_random_sets(self):
        rng = np.random.default_rng(6)
        for n in (5, 18, 50, 140, 200):
            scores, labels = random_trial_set(rng, n)
            curve = compute_det(scoreset(scores, labels))
            for params in (DCF10, DCF08, CostParams(0.3, 2.0, 5.0)):
                expected = min_dcf_oracle(
                    scores, labels, params.p_target, params.c_miss, params.c_fa
                )
                assert min_dcf(curve, params) == expected

    def test_invariant_under_strictly_increasing_transforms(self):
        rng = np.random.default_rng(7)
        scores, labels = random_trial_set(rng, 70)
        curve = compute_det(scoreset(scores, labels))
        curve_warp = compute_det(scoreset(np.exp(scores), labels))
        for params in (DCF10, DCF08):
            assert abs(min_dcf(curve, params) - min_dcf(curve_warp, params)) < 1e-12

    def test_normalized_range(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            scores, labels = random_trial_set(rng, 40)
            curve = compute_det(scoreset(scores, labels))
            assert 0.0 <= min_dcf(curve, DCF10) <= 1.0

    def test_preset_parameterizations(self):
        assert (DCF10.p_target, DCF10.c_miss, DCF10.c_fa) == (0.001, 1.0, 1.0)
        assert (DCF08.p_target, DCF08.c_miss, DCF08.c_fa) == (0.01, 10.0, 1.0)

    def test_bad_params_rejected(self):
        with pytest.raises(ConfigError):
            CostParams(p_target=0.0, c_miss=1.0, c_fa=1.0)
        with pytest.raises(ConfigError):
            CostParams(p_target=0.5, c_miss=-1.0, c_fa=1.0)


class TestEvaluate:
    def test_returns_all_preset_metrics(self):
        rng = np.random.default_rng(9)
        scores, labels = random_trial_set(rng, 30)
        out = evaluate(scoreset(scores, labels))
        assert set(out) == {"eer", "dcf10", "dcf08"}

    def test_custom_presets(self):
        rng = np.random.default_rng(10)
        scores, labels = random_trial_set(rng, 30)
        out = evaluate(
            scoreset(scores, labels), {"flat": CostParams(0.5, 1.0, 1.0)}
        )
        assert set(out) == {"eer", "flat"}
