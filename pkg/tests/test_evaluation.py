import numpy as np
import pytest

from sunnpest.core.evaluation import (
    ConfusionMatrix,
    ci_mean,
    ci_proportion,
    cross_validate_classifier,
    cross_validate_regressor,
    kfold_assign,
    pearson_r,
    summarize_classification,
    summarize_regression,
    t_quantile,
    z_quantile,
)
from sunnpest.core.trees import TrainParams

# ─────────────────────────────────────────────────────────────────────────────
# Quantiles and intervals
# ─────────────────────────────────────────────────────────────────────────────


def test_quantiles():
    assert z_quantile(0.99) == pytest.approx(2.5758293035489, abs=1e-9)
    assert t_quantile(0.95, 1) == pytest.approx(12.706204736, abs=1e-6)
    assert t_quantile(0.99, 9) == pytest.approx(3.249835541, abs=1e-6)
    assert t_quantile(0.99, 100) == pytest.approx(2.625890521, abs=1e-6)


@pytest.mark.parametrize('level', [0.0, 1.0, 1.5])
def test_bad_level(level):
    with pytest.raises(ValueError):
        z_quantile(level)


@pytest.mark.parametrize(
    ('e_s', 'n', 'lower', 'upper'),
    [
        (1 - 0.863932, 2925, 0.1197, 0.1524),
        (1 - 0.993162, 2925, 0.0029, 0.0107),
        (23 / 2925, 2925, 0.0036, 0.0120),
    ],
)
def test_proportion_intervals_on_reference_sizes(e_s, n, lower, upper):
    interval = ci_proportion(e_s, n, 0.99)
    assert interval.lower == pytest.approx(lower, abs=5e-4)
    assert interval.upper == pytest.approx(upper, abs=5e-4)
    assert interval.method == 'proportion_z'


def test_proportion_interval_is_clamped():
    assert ci_proportion(0.0, 50).lower == 0.0
    assert ci_proportion(0.0, 50).upper == 0.0
    assert ci_proportion(1.0, 10).upper == 1.0


def test_proportion_interval_shrinks_with_n():
    assert ci_proportion(0.2, 10_000).width < ci_proportion(0.2, 100).width


def test_mean_interval():
    interval = ci_mean([1.0, 2.0, 3.0, 4.0, 5.0], 0.95)
    half = t_quantile(0.95, 4) * np.std([1, 2, 3, 4, 5], ddof=1) / np.sqrt(5)
    assert interval.lower == pytest.approx(3.0 - half)
    assert interval.upper == pytest.approx(3.0 + half)
    with pytest.raises(ValueError):
        ci_mean([1.0])


def test_mean_interval_of_two_values():
    interval = ci_mean([0.0, 1.0], 0.95)
    assert interval.lower == pytest.approx(-5.853, abs=1e-3)
    assert interval.upper == pytest.approx(6.853, abs=1e-3)


def test_mean_interval_coverage_on_large_uniform_samples():
    rng = np.random.default_rng(14)
    hits = sum(ci_mean(rng.uniform(0.0, 1.0, size=10_000), 0.99).contains(0.5) for _ in range(1000))
    assert hits >= 980


def test_mean_interval_coverage():
    rng = np.random.default_rng(12)
    hits = sum(ci_mean(rng.normal(0.5, 2.0, size=30), 0.90).contains(0.5) for _ in range(2000))
    assert 0.87 <= hits / 2000 <= 0.93


def test_proportion_interval_coverage():
    rng = np.random.default_rng(13)
    n, p = 400, 0.3
    hits = sum(ci_proportion(rng.binomial(n, p) / n, n, 0.95).contains(p) for _ in range(2000))
    assert 0.92 <= hits / 2000 <= 0.975


# ─────────────────────────────────────────────────────────────────────────────
# Correlation
# ─────────────────────────────────────────────────────────────────────────────


def test_pearson():
    assert pearson_r([1, 2, 3], [2, 4, 7]) == pytest.approx(0.99340, abs=1e-4)
    assert pearson_r([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)


def test_pearson_constant_side_is_undefined():
    assert pearson_r([1, 1, 1], [1, 2, 3]) is None
    assert pearson_r([1, 2, 3], [5, 5, 5]) is None


def test_pearson_length_mismatch():
    with pytest.raises(ValueError, match='length'):
        pearson_r([1, 2], [1, 2, 3])


# ─────────────────────────────────────────────────────────────────────────────
# Folds
# ─────────────────────────────────────────────────────────────────────────────


def test_folds_partition_evenly():
    folds = kfold_assign(103, 10, seed=1)
    sizes = np.bincount(folds, minlength=10)
    assert sizes.sum() == 103
    assert sizes.max() - sizes.min() <= 1


def test_folds_are_seeded():
    assert np.array_equal(kfold_assign(50, 5, seed=3), kfold_assign(50, 5, seed=3))
    assert not np.array_equal(kfold_assign(50, 5, seed=3), kfold_assign(50, 5, seed=4))


def test_stratified_folds_spread_each_class():
    labels = np.array([1] * 40 + [2] * 7 + [3] * 23)
    folds = kfold_assign(len(labels), 5, seed=0, strata=labels)
    for c in (1, 2, 3):
        per_fold = np.bincount(folds[labels == c], minlength=5)
        assert per_fold.max() - per_fold.min() <= 1


def test_too_few_instances_for_folds():
    with pytest.raises(ValueError, match='n < k'):
        kfold_assign(3, 5)


# ─────────────────────────────────────────────────────────────────────────────
# Summaries
# ─────────────────────────────────────────────────────────────────────────────


def test_confusion_matrix():
    matrix = ConfusionMatrix.from_pairs([1, 2, 2, 3], [1, 2, 3, 3], (1, 2, 3))
    assert matrix.counts.tolist() == [[1, 0, 0], [0, 1, 0], [0, 1, 1]]
    assert matrix.accuracy == 0.75


def test_summarize_classification():
    report = summarize_classification([1, 2, 2, 3], [1, 2, 3, 3], (1, 2, 3), 0.99)
    assert report.kind == 'classification'
    assert report.n == 4
    assert report.error_interval.contains(0.25)


def test_summarize_regression_flags_constant_stage():
    rng = np.random.default_rng(0)
    actual = rng.dirichlet(np.ones(5), size=30)
    predicted = actual + rng.normal(0, 0.01, size=actual.shape)
    predicted[:, 4] = 0.2
    report = summarize_regression(predicted, actual, 0.99)
    assert report.pearson[1] > 0.9
    assert report.pearson[5] is None
    assert any('stage 5' in flag for flag in report.flags)
    assert len(report.pairs[3]) == 30


# ─────────────────────────────────────────────────────────────────────────────
# Cross-validation on the synthetic corpus
# ─────────────────────────────────────────────────────────────────────────────


def test_classifier_cv_is_accurate(datasets):
    report = cross_validate_classifier(datasets['m2'], k=10, seed=0)
    assert report.accuracy >= 0.99
    assert report.confusion.total == len(datasets['m2'])
    assert report.error_interval.confidence_level == 0.99


def test_daily_values_classify_worse_than_accumulated(datasets):
    m1 = cross_validate_classifier(datasets['m1'], k=10, seed=0)
    m2 = cross_validate_classifier(datasets['m2'], k=10, seed=0)
    assert m1.accuracy < m2.accuracy


def test_classifier_cv_is_reproducible(datasets):
    a = cross_validate_classifier(datasets['m3'], k=5, seed=1)
    b = cross_validate_classifier(datasets['m3'], k=5, seed=1)
    assert a.to_dict() == b.to_dict()


def test_classifier_cv_rejects_regression_params(datasets):
    with pytest.raises(ValueError):
        cross_validate_classifier(datasets['m2'], TrainParams(criterion='mae'))


@pytest.mark.slow
def test_regressor_cv_tracks_true_ratios(datasets):
    report = cross_validate_regressor(datasets['m2'], TrainParams(criterion='mae', n_trees=10), k=10, seed=0)
    assert all(r is not None and r >= 0.99 for r in report.pearson.values())
    assert report.error_interval.method == 'mean_t'
