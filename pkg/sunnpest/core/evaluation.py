"""Cross-validation and the interval statistics reported with every evaluation."""

import logging
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy import stats

from .errors import EmptyDatasetError
from .features import PHASES, Dataset
from .trees import FOREST_DEFAULTS, TrainParams, predict_ratios, train_ratio_predictor, train_tree

logger = logging.getLogger('sunnpest')

IntervalMethod = Literal['proportion_z', 'mean_t']
ReportKind = Literal['classification', 'regression']

DEFAULT_FOLDS = 10
DEFAULT_LEVEL = 0.99


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float
    confidence_level: float
    method: IntervalMethod

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def to_dict(self) -> dict:
        return {'lower': self.lower, 'upper': self.upper, 'confidence_level': self.confidence_level, 'method': self.method}


@dataclass
class ConfusionMatrix:
    """Rows are actual classes, columns predicted classes."""

    classes: tuple[int, ...]
    counts: np.ndarray

    @classmethod
    def from_pairs(cls, predicted, actual, classes: tuple[int, ...]) -> 'ConfusionMatrix':
        position = {c: i for i, c in enumerate(classes)}
        counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
        for p, a in zip(predicted, actual):
            counts[position[int(a)], position[int(p)]] += 1
        return cls(classes, counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def correct(self) -> int:
        return int(np.trace(self.counts))

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0

    def to_dict(self) -> dict:
        return {'classes': list(self.classes), 'counts': self.counts.tolist()}


@dataclass
class EvalReport:
    kind: ReportKind
    n: int
    error_interval: Interval
    model_id: str = ''
    folds: int = 0
    seed: int = 0
    params: dict = field(default_factory=dict)
    accuracy: float | None = None
    confusion: ConfusionMatrix | None = None
    pearson: dict[int, float | None] = field(default_factory=dict)
    mae: dict[int, float] = field(default_factory=dict)
    stage_intervals: dict[int, Interval] = field(default_factory=dict)
    # Pooled out-of-fold (predicted, actual) pairs per stage.
    pairs: dict[int, list[tuple[float, float]]] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        data: dict = {
            'kind': self.kind,
            'model_id': self.model_id,
            'n': self.n,
            'folds': self.folds,
            'seed': self.seed,
            'params': self.params,
            'error_interval': self.error_interval.to_dict(),
        }
        if self.kind == 'classification':
            data['accuracy'] = self.accuracy
            data['confusion'] = self.confusion.to_dict() if self.confusion is not None else None
        else:
            data['pearson'] = {str(s): r for s, r in self.pearson.items()}
            data['mae'] = {str(s): v for s, v in self.mae.items()}
            data['stage_intervals'] = {str(s): i.to_dict() for s, i in self.stage_intervals.items()}
        data['flags'] = list(self.flags)
        return data


# ─────────────────────────────────────────────────────────────────────────────
# Statistics
# ─────────────────────────────────────────────────────────────────────────────


def _check_level(level: float) -> None:
    if not 0.0 < level < 1.0:
        raise ValueError(f'confidence level must lie in (0, 1), got {level}')


def z_quantile(level: float) -> float:
    """Two-sided standard-normal quantile, e.g. 2.5758 at 0.99."""
    _check_level(level)
    return float(stats.norm.ppf(1.0 - (1.0 - level) / 2.0))


def t_quantile(level: float, df: int) -> float:
    """Two-sided Student-t quantile with `df` degrees of freedom."""
    _check_level(level)
    if df < 1:
        raise ValueError(f'degrees of freedom must be >= 1, got {df}')
    return float(stats.t.ppf(1.0 - (1.0 - level) / 2.0, df))


def ci_proportion(e_s: float, n: int, level: float = DEFAULT_LEVEL) -> Interval:
    """Normal-approximation interval for an error proportion, clamped to [0, 1]."""
    _check_level(level)
    if not 0.0 <= e_s <= 1.0:
        raise ValueError(f'error proportion must lie in [0, 1], got {e_s}')
    if n < 1:
        raise ValueError(f'n must be >= 1, got {n}')
    half = z_quantile(level) * math.sqrt(e_s * (1.0 - e_s) / n)
    return Interval(max(0.0, e_s - half), min(1.0, e_s + half), level, 'proportion_z')


def ci_mean(errors, level: float = DEFAULT_LEVEL) -> Interval:
    """Student-t interval for the mean of `errors` (sample standard deviation)."""
    _check_level(level)
    values = np.asarray(errors, dtype=float).ravel()
    if len(values) < 2:
        raise ValueError(f'ci_mean needs at least 2 values, got {len(values)}')
    mean = float(values.mean())
    std = float(values.std(ddof=1))
    half = t_quantile(level, len(values) - 1) * std / math.sqrt(len(values))
    return Interval(mean - half, mean + half, level, 'mean_t')


def pearson_r(pred, actual) -> float | None:
    """Product-moment correlation; None when either side is constant."""
    p = np.asarray(pred, dtype=float).ravel()
    a = np.asarray(actual, dtype=float).ravel()
    if len(p) != len(a):
        raise ValueError(f'length mismatch: {len(p)} predictions, {len(a)} actuals')
    if len(p) < 2:
        raise ValueError(f'pearson_r needs at least 2 pairs, got {len(p)}')
    dp = p - p.mean()
    da = a - a.mean()
    spp = float(dp @ dp)
    saa = float(da @ da)
    if spp == 0.0 or saa == 0.0:
        return None
    return max(-1.0, min(1.0, float(dp @ da) / math.sqrt(spp * saa)))


# ─────────────────────────────────────────────────────────────────────────────
# Folds
# ─────────────────────────────────────────────────────────────────────────────


def kfold_assign(n: int, k: int, seed: int = 0, strata=None) -> np.ndarray:
    """Fold index per instance. Fold sizes differ by at most one.

    With `strata`, each class's shuffled members are dealt round-robin in
    turn, so every class is spread over the folds as evenly as possible.
    """
    if k < 2:
        raise ValueError(f'k must be >= 2, got {k}')
    if n < k:
        raise ValueError(f'n < k: cannot split {n} instance(s) into {k} folds')
    rng = np.random.default_rng(seed)
    if strata is None:
        order = rng.permutation(n)
    else:
        labels = np.asarray(strata)
        if len(labels) != n:
            raise ValueError(f'{len(labels)} strata labels for {n} instances')
        order = np.concatenate([rng.permutation(np.flatnonzero(labels == c)) for c in np.unique(labels)])
    folds = np.empty(n, dtype=np.int64)
    folds[order] = np.arange(n) % k
    return folds


# ─────────────────────────────────────────────────────────────────────────────
# Reports
# ─────────────────────────────────────────────────────────────────────────────


def summarize_classification(
    predicted, actual, classes: tuple[int, ...], level: float = DEFAULT_LEVEL, **meta
) -> EvalReport:
    """Pooled confusion matrix, accuracy and its error-proportion interval."""
    confusion = ConfusionMatrix.from_pairs(predicted, actual, classes)
    accuracy = confusion.accuracy
    return EvalReport(
        kind='classification',
        n=confusion.total,
        accuracy=accuracy,
        confusion=confusion,
        error_interval=ci_proportion(1.0 - accuracy, confusion.total, level),
        **meta,
    )


def summarize_regression(predicted, actual, level: float = DEFAULT_LEVEL, **meta) -> EvalReport:
    """Per-stage correlation and MAE over pooled n x 5 predictions."""
    P = np.asarray(predicted, dtype=float)
    A = np.asarray(actual, dtype=float)
    if P.shape != A.shape:
        raise ValueError(f'prediction shape {P.shape} does not match actual shape {A.shape}')
    report = EvalReport(kind='regression', n=len(A), error_interval=ci_mean(np.abs(P - A).mean(axis=1), level), **meta)
    for s in range(1, P.shape[1] + 1):
        p, a = P[:, s - 1], A[:, s - 1]
        report.pearson[s] = pearson_r(p, a)
        if report.pearson[s] is None:
            report.flags.append(f'stage {s}: constant predictions or actuals, correlation undefined')
        report.mae[s] = float(np.abs(p - a).mean())
        report.stage_intervals[s] = ci_mean(np.abs(p - a), level)
        report.pairs[s] = [(float(x), float(y)) for x, y in zip(p, a)]
    return report


def cross_validate_classifier(
    dataset: Dataset, params: TrainParams | None = None, k: int = DEFAULT_FOLDS, seed: int = 0, level: float = DEFAULT_LEVEL
) -> EvalReport:
    """Stratified k-fold CV of the phase tree, pooled into one confusion matrix."""
    params = params or TrainParams()
    if params.kind != 'classifier':
        raise ValueError(f'criterion {params.criterion!r} is not a classification criterion')
    X, y = dataset.features(), dataset.phases()
    folds = kfold_assign(len(y), k, seed, strata=y)
    classes = tuple(int(p) for p in PHASES)

    predicted = np.empty_like(y)
    for fold in range(k):
        held_out = folds == fold
        tree = train_tree(X[~held_out], y[~held_out], params, dataset.spec.fields, classes)
        predicted[held_out] = [tree.predict_class(x) for x in X[held_out]]
        logger.debug(f'[CV] {dataset.spec.model_id} phase fold {fold + 1}/{k}: {int(held_out.sum())} held out')

    report = summarize_classification(
        predicted, y, classes, level, model_id=dataset.spec.model_id, folds=k, seed=seed, params=params.to_dict()
    )
    logger.info(f'[CV] {dataset.spec.model_id} phase accuracy {report.accuracy:.6f} over {report.n} instances')
    return report


def cross_validate_regressor(
    dataset: Dataset, params: TrainParams | None = None, k: int = DEFAULT_FOLDS, seed: int = 0, level: float = DEFAULT_LEVEL
) -> EvalReport:
    """k-fold CV of the five stage forests on composed (clamped, renormalized) ratios."""
    params = params or FOREST_DEFAULTS
    X, R = dataset.ratio_subset()
    if len(R) == 0:
        raise EmptyDatasetError('no regression instances')
    folds = kfold_assign(len(R), k, seed)

    predicted = np.empty_like(R)
    for fold in range(k):
        held_out = folds == fold
        predictor = train_ratio_predictor(X[~held_out], R[~held_out], params, dataset.spec.fields)
        for row, x in zip(np.flatnonzero(held_out), X[held_out]):
            predicted[row] = predict_ratios(predictor, x).ratios.values
        logger.debug(f'[CV] {dataset.spec.model_id} ratio fold {fold + 1}/{k}: {int(held_out.sum())} held out')

    report = summarize_regression(predicted, R, level, model_id=dataset.spec.model_id, folds=k, seed=seed, params=params.to_dict())
    shown = ', '.join(f'{s}:{"n/a" if r is None else f"{r:.4f}"}' for s, r in report.pearson.items())
    logger.info(f'[CV] {dataset.spec.model_id} ratio correlation per stage {shown}')
    return report

