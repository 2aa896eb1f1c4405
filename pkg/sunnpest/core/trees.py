"""Binary-split decision trees and random forests, written from scratch.

Trees are CART-style: numeric features only, thresholds at midpoints between
consecutive distinct values, an instance goes left iff x[feature] <= threshold.
Classification trees store the class distribution at each leaf; regression
trees store the mean target.

Randomness (bootstrap rows, per-node feature subsets) comes from numpy
generators seeded with (rng_seed, stream, tree index[, node path]), so
training is reproducible no matter how trees are scheduled.
"""

import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import EmptyDatasetError, FeatureArityError
from .features import N_STAGES, NymphStageRatios, Phase

logger = logging.getLogger('sunnpest')

Criterion = Literal['gini', 'entropy', 'mae']
TreeKind = Literal['classifier', 'regressor']

CRITERIA: tuple[Criterion, ...] = ('gini', 'entropy', 'mae')

# Relative tolerance under which two split scores count as tied.
SPLIT_TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class TrainParams:
    """Learner parameters. Defaults are the unpruned tree defaults; forest-only fields are ignored by train_tree."""

    criterion: Criterion = 'gini'
    min_leaf: int = 1
    min_split: int = 2
    max_depth: int | None = None
    n_trees: int = 10
    feature_subsample: int | None = None
    bootstrap: bool = True
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.criterion not in CRITERIA:
            raise ValueError(f'unknown criterion {self.criterion!r}, expected one of {CRITERIA}')
        if self.min_leaf < 1:
            raise ValueError(f'min_leaf must be >= 1, got {self.min_leaf}')
        if self.min_split < 2:
            raise ValueError(f'min_split must be >= 2, got {self.min_split}')
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError(f'max_depth must be >= 0, got {self.max_depth}')
        if self.n_trees < 1:
            raise ValueError(f'n_trees must be >= 1, got {self.n_trees}')
        if self.feature_subsample is not None and self.feature_subsample < 1:
            raise ValueError(f'feature_subsample must be >= 1, got {self.feature_subsample}')
        if not 0 <= self.rng_seed < 2**64:
            raise ValueError(f'rng_seed must be an unsigned 64-bit integer, got {self.rng_seed}')

    @property
    def kind(self) -> TreeKind:
        return 'regressor' if self.criterion == 'mae' else 'classifier'

    def subsample_for(self, n_features: int) -> int:
        """Candidate features drawn per split: floor(log2(m)) + 1 unless set."""
        if self.feature_subsample is None:
            return max(1, min(n_features, int(math.log2(n_features)) + 1))
        if self.feature_subsample > n_features:
            raise ValueError(f'feature_subsample={self.feature_subsample} exceeds the {n_features} available features')
        return self.feature_subsample

    def to_dict(self) -> dict:
        return {
            'criterion': self.criterion,
            'min_leaf': self.min_leaf,
            'min_split': self.min_split,
            'max_depth': self.max_depth,
            'n_trees': self.n_trees,
            'feature_subsample': self.feature_subsample,
            'bootstrap': self.bootstrap,
            'rng_seed': self.rng_seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'TrainParams':
        return cls(**{key: data[key] for key in cls.__dataclass_fields__ if key in data})


FOREST_DEFAULTS = TrainParams(criterion='mae')


# ─────────────────────────────────────────────────────────────────────────────
# Split criteria
# ─────────────────────────────────────────────────────────────────────────────


def gini_impurity(class_counts) -> float:
    """1 - sum(p_i^2) over the class proportions."""
    counts = np.asarray(class_counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        raise ValueError('gini impurity is undefined for an empty node')
    p = counts / total
    return float(1.0 - np.sum(p * p))


def entropy_impurity(class_counts) -> float:
    """Shannon entropy of the class proportions, in bits."""
    counts = np.asarray(class_counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        raise ValueError('entropy is undefined for an empty node')
    p = counts[counts > 0] / total
    return float(-np.sum(p * np.log2(p)))


def mae_criterion(values) -> float:
    """Mean absolute deviation from the median (midpoint median for even sizes)."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError('mae criterion is undefined for an empty node')
    return float(np.mean(np.abs(v - np.median(v))))


def _impurity_rows(counts: np.ndarray, sizes: np.ndarray, criterion: Criterion) -> np.ndarray:
    p = counts / sizes[:, None]
    if criterion == 'gini':
        return 1.0 - np.sum(p * p, axis=1)
    with np.errstate(divide='ignore', invalid='ignore'):
        terms = np.where(p > 0, p * np.log2(p), 0.0)
    return -np.sum(terms, axis=1)


def _class_split_scores(y_sorted: np.ndarray, n_classes: int, cuts: np.ndarray, criterion: Criterion) -> np.ndarray:
    n = y_sorted.size
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y_sorted] = 1.0
    left = np.cumsum(onehot, axis=0)[cuts - 1]
    right = onehot.sum(axis=0) - left
    n_left = cuts.astype(float)
    n_right = n - n_left
    return (n_left * _impurity_rows(left, n_left, criterion) + n_right * _impurity_rows(right, n_right, criterion)) / n


def _prefix_abs_dev(values: list[float]) -> np.ndarray:
    """out[i] = sum |v - median| over values[:i+1], via two running heaps.

    The sum of absolute deviations from the median equals
    (sum of upper half) - (sum of lower half), plus the median itself when the
    lower half holds the extra element.
    """
    lo: list[float] = []  # max-heap of the lower half, negated
    hi: list[float] = []  # min-heap of the upper half
    s_lo = s_hi = 0.0
    out = np.empty(len(values))
    push, pushpop = heapq.heappush, heapq.heappushpop
    for i, v in enumerate(values):
        if len(lo) == len(hi):
            moved = pushpop(hi, v)
            push(lo, -moved)
            s_lo += moved
            s_hi += v - moved
            out[i] = s_hi - s_lo - lo[0]
        else:
            moved = -pushpop(lo, -v)
            push(hi, moved)
            s_hi += moved
            s_lo += v - moved
            out[i] = s_hi - s_lo
    return out


def _regression_split_scores(y_sorted: np.ndarray, cuts: np.ndarray) -> np.ndarray:
    n = y_sorted.size
    values = y_sorted.tolist()
    prefix = _prefix_abs_dev(values)
    suffix = _prefix_abs_dev(values[::-1])
    return (prefix[cuts - 1] + suffix[n - cuts - 1]) / n


def _midpoints(lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    mid = (lower + upper) / 2.0
    # Adjacent floats can round the midpoint up onto the upper value.
    return np.where(mid < upper, mid, lower)


@dataclass(frozen=True)
class SplitChoice:
    feature: int
    threshold: float
    score: float


def best_split(
    X: np.ndarray,
    y: np.ndarray,
    features,
    criterion: Criterion,
    min_leaf: int = 1,
    n_classes: int | None = None,
) -> SplitChoice | None:
    """Exhaustive search for the split with the lowest size-weighted child criterion.

    Classification targets are class indices 0..n_classes-1. Both children
    must hold at least `min_leaf` instances. Ties go to the lowest feature
    index, then the lowest threshold. Returns None when no legal split exists.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    n = X.shape[0]
    if n < 2 or n < 2 * min_leaf:
        return None
    if criterion != 'mae' and n_classes is None:
        n_classes = int(y.max()) + 1

    candidates: list[tuple[int, np.ndarray, np.ndarray]] = []
    for j in sorted(int(f) for f in features):
        order = np.argsort(X[:, j], kind='stable')
        xs = X[order, j]
        cuts = np.flatnonzero(xs[1:] > xs[:-1]) + 1
        cuts = cuts[(cuts >= min_leaf) & (cuts <= n - min_leaf)]
        if cuts.size == 0:
            continue
        ys = y[order]
        if criterion == 'mae':
            scores = _regression_split_scores(ys.astype(float), cuts)
        else:
            scores = _class_split_scores(ys.astype(np.int64), n_classes, cuts, criterion)
        candidates.append((j, _midpoints(xs[cuts - 1], xs[cuts]), scores))

    if not candidates:
        return None

    best = min(float(scores.min()) for _, _, scores in candidates)
    tolerance = SPLIT_TIE_TOLERANCE * max(1.0, abs(best))
    for j, thresholds, scores in candidates:
        hits = np.flatnonzero(scores <= best + tolerance)
        if hits.size:
            k = int(hits[0])
            return SplitChoice(j, float(thresholds[k]), float(scores[k]))
    return None


# ─────────────────────────────────────────────────────────────────────────────
# Trees
# ─────────────────────────────────────────────────────────────────────────────


@dataclass
class TreeNode:
    n_samples: int
    feature: int = -1
    threshold: float = 0.0
    left: int = -1
    right: int = -1
    distribution: tuple[float, ...] | None = None
    value: float | None = None

    @property
    def is_leaf(self) -> bool:
        return self.left < 0

    def to_dict(self) -> dict:
        if not self.is_leaf:
            return {'samples': self.n_samples, 'feature': self.feature, 'threshold': self.threshold, 'left': self.left, 'right': self.right}
        if self.distribution is not None:
            return {'samples': self.n_samples, 'distribution': list(self.distribution)}
        return {'samples': self.n_samples, 'value': self.value}

    @classmethod
    def from_dict(cls, data: dict) -> 'TreeNode':
        if 'feature' in data:
            return cls(
                n_samples=int(data['samples']),
                feature=int(data['feature']),
                threshold=float(data['threshold']),
                left=int(data['left']),
                right=int(data['right']),
            )
        if 'distribution' in data:
            return cls(n_samples=int(data['samples']), distribution=tuple(float(p) for p in data['distribution']))
        return cls(n_samples=int(data['samples']), value=float(data['value']))


def _check_arity(x, feature_names: tuple[str, ...]) -> None:
    if len(x) != len(feature_names):
        raise FeatureArityError(f'feature vector has {len(x)} values, model expects {len(feature_names)} ({", ".join(feature_names)})')


@dataclass
class TreeModel:
    kind: TreeKind
    feature_names: tuple[str, ...]
    nodes: list[TreeNode]
    classes: tuple[int, ...] = ()

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def leaf_count(self) -> int:
        return sum(1 for node in self.nodes if node.is_leaf)

    def depth(self) -> int:
        deepest = 0
        stack = [(0, 0)]
        while stack:
            index, d = stack.pop()
            node = self.nodes[index]
            deepest = max(deepest, d)
            if not node.is_leaf:
                stack.extend(((node.left, d + 1), (node.right, d + 1)))
        return deepest

    def leaf_for(self, x) -> TreeNode:
        _check_arity(x, self.feature_names)
        node = self.nodes[0]
        while not node.is_leaf:
            node = self.nodes[node.left if x[node.feature] <= node.threshold else node.right]
        return node

    def predict_distribution(self, x) -> tuple[float, ...]:
        if self.kind != 'classifier':
            raise TypeError('regression trees have no class distribution')
        distribution = self.leaf_for(x).distribution
        assert distribution is not None
        return distribution

    def predict_class(self, x) -> int:
        """Most probable class; ties go to the lowest class label."""
        distribution = self.predict_distribution(x)
        return self.classes[int(np.argmax(distribution))]

    def predict_value(self, x) -> float:
        if self.kind != 'regressor':
            raise TypeError('classification trees have no regression value')
        value = self.leaf_for(x).value
        assert value is not None
        return value

    def to_dict(self) -> dict:
        return {
            'kind': self.kind,
            'features': list(self.feature_names),
            'classes': list(self.classes),
            'nodes': [node.to_dict() for node in self.nodes],
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'TreeModel':
        tree = cls(
            kind=data['kind'],
            feature_names=tuple(data['features']),
            nodes=[TreeNode.from_dict(node) for node in data['nodes']],
            classes=tuple(int(c) for c in data.get('classes', [])),
        )
        tree.validate()
        return tree

    def validate(self) -> None:
        """Structural checks used when loading a tree from disk."""
        if self.kind not in ('classifier', 'regressor'):
            raise ValueError(f'unknown tree kind {self.kind!r}')
        if not self.nodes:
            raise ValueError('tree has no nodes')
        for index, node in enumerate(self.nodes):
            if node.is_leaf:
                if self.kind == 'classifier' and (node.distribution is None or len(node.distribution) != len(self.classes)):
                    raise ValueError(f'node {index}: classifier leaf needs a distribution over {len(self.classes)} classes')
                if self.kind == 'regressor' and node.value is None:
                    raise ValueError(f'node {index}: regressor leaf needs a value')
            elif not (index < node.left < len(self.nodes) and index < node.right < len(self.nodes)):
                raise ValueError(f'node {index}: child index out of range')
            elif not 0 <= node.feature < len(self.feature_names):
                raise ValueError(f'node {index}: feature index {node.feature} out of range')


def _leaf(y: np.ndarray, kind: TreeKind, n_classes: int) -> TreeNode:
    n = int(y.size)
    if kind == 'classifier':
        counts = np.bincount(y, minlength=n_classes)
        return TreeNode(n_samples=n, distribution=tuple(float(c) / n for c in counts))
    return TreeNode(n_samples=n, value=float(np.mean(y)))


def _grow(
    X: np.ndarray,
    y: np.ndarray,
    params: TrainParams,
    kind: TreeKind,
    n_classes: int,
    subsample: int | None,
    seed_key: tuple[int, ...],
) -> list[TreeNode]:
    """Greedy depth-first growth. Nodes are stored in preorder; the root path is 1, children 2p and 2p+1."""
    n_features = X.shape[1]
    all_features = range(n_features)
    nodes: list[TreeNode] = []
    stack: list[tuple[np.ndarray, int, int, int, bool]] = [(np.arange(X.shape[0]), 0, 1, -1, False)]

    while stack:
        rows, depth, path, parent, is_right = stack.pop()
        node_id = len(nodes)
        y_node = y[rows]
        node = _leaf(y_node, kind, n_classes)
        nodes.append(node)
        if parent >= 0:
            if is_right:
                nodes[parent].right = node_id
            else:
                nodes[parent].left = node_id

        if rows.size < params.min_split:
            continue
        if params.max_depth is not None and depth >= params.max_depth:
            continue
        if kind == 'classifier':
            if max(node.distribution or (0.0,)) == 1.0:
                continue
        elif np.all(y_node == y_node[0]):
            continue

        if subsample is None:
            features = all_features
        else:
            rng = np.random.default_rng([*seed_key, path])
            features = np.sort(rng.choice(n_features, size=subsample, replace=False))

        split = best_split(X[rows], y_node, features, params.criterion, params.min_leaf, n_classes)
        if split is None:
            continue

        go_left = X[rows, split.feature] <= split.threshold
        node.feature = split.feature
        node.threshold = split.threshold
        node.distribution = None
        node.value = None
        stack.append((rows[~go_left], depth + 1, 2 * path + 1, node_id, True))
        stack.append((rows[go_left], depth + 1, 2 * path, node_id, False))

    return nodes


def _prepare(X, y, feature_names) -> tuple[np.ndarray, np.ndarray, tuple[str, ...]]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyDatasetError('cannot train on an empty dataset')
    if y.shape[0] != X.shape[0]:
        raise ValueError(f'{X.shape[0]} feature rows but {y.shape[0]} targets')
    if np.isnan(X).any():
        raise ValueError('feature matrix contains missing values')
    names = tuple(feature_names) if feature_names is not None else tuple(f'x{j}' for j in range(X.shape[1]))
    if len(names) != X.shape[1]:
        raise FeatureArityError(f'{len(names)} feature names for {X.shape[1]} columns')
    # Canonical row order: bootstrap draws and float sums depend only on the row multiset.
    order = np.lexsort((y, *X.T[::-1]))
    return X[order], y[order], names


def train_tree(X, y, params: TrainParams | None = None, feature_names=None, classes=None) -> TreeModel:
    """Grow one unpruned tree. The criterion decides classification (gini/entropy) or regression (mae)."""
    params = params or TrainParams()
    X, y, names = _prepare(X, y, feature_names)

    if params.kind == 'classifier':
        labels = tuple(sorted(int(c) for c in (classes if classes is not None else np.unique(y))))
        encoded = np.searchsorted(labels, y.astype(np.int64))
        if np.any(encoded >= len(labels)) or np.any(np.asarray(labels)[np.minimum(encoded, len(labels) - 1)] != y):
            raise ValueError(f'targets contain labels outside {labels}')
        nodes = _grow(X, encoded, params, 'classifier', len(labels), None, (params.rng_seed,))
        tree = TreeModel('classifier', names, nodes, labels)
    else:
        nodes = _grow(X, y.astype(float), params, 'regressor', 0, None, (params.rng_seed,))
        tree = TreeModel('regressor', names, nodes)

    logger.debug(f'[TRAIN] {tree.kind} tree: {tree.node_count} nodes, depth {tree.depth()}, {X.shape[0]} instances')
    return tree


# ─────────────────────────────────────────────────────────────────────────────
# Forests
# ─────────────────────────────────────────────────────────────────────────────


@dataclass
class ForestModel:
    trees: list[TreeModel]
    stage: int
    feature_names: tuple[str, ...]
    params: TrainParams = field(default_factory=lambda: FOREST_DEFAULTS)

    def predict(self, x) -> float:
        """Average of the trees' leaf values."""
        _check_arity(x, self.feature_names)
        return sum(tree.predict_value(x) for tree in self.trees) / len(self.trees)

    def to_dict(self) -> dict:
        return {
            'stage': self.stage,
            'features': list(self.feature_names),
            'params': self.params.to_dict(),
            'trees': [tree.to_dict() for tree in self.trees],
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'ForestModel':
        forest = cls(
            trees=[TreeModel.from_dict(t) for t in data['trees']],
            stage=int(data['stage']),
            feature_names=tuple(data['features']),
            params=TrainParams.from_dict(data['params']),
        )
        if not forest.trees:
            raise ValueError(f'forest for stage {forest.stage} has no trees')
        for tree in forest.trees:
            if tree.kind != 'regressor' or tree.feature_names != forest.feature_names:
                raise ValueError(f'forest for stage {forest.stage} holds a tree with a different kind or feature set')
        return forest


def train_forest(X, y, params: TrainParams | None = None, feature_names=None, stage: int = 1) -> ForestModel:
    """Bagged regression trees with per-split feature subsampling."""
    params = params or FOREST_DEFAULTS
    if params.kind != 'regressor':
        raise ValueError(f'forests are regression models; criterion {params.criterion!r} is for classification')
    X, y, names = _prepare(X, y, feature_names)
    y = y.astype(float)
    n, m = X.shape
    k = params.subsample_for(m)
    subsample = k if k < m else None

    trees = []
    for t in range(params.n_trees):
        if params.bootstrap:
            rows = np.random.default_rng([params.rng_seed, stage, t]).integers(0, n, size=n)
            Xt, yt = X[rows], y[rows]
        else:
            Xt, yt = X, y
        nodes = _grow(Xt, yt, params, 'regressor', 0, subsample, (params.rng_seed, stage, t))
        trees.append(TreeModel('regressor', names, nodes))

    logger.debug(f'[TRAIN] stage {stage} forest: {params.n_trees} trees, {k}/{m} features per split, {n} instances')
    return ForestModel(trees, stage, names, params)


@dataclass
class RatioPredictor:
    """One forest per nymphal stage, all on the same feature set."""

    forests: list[ForestModel]

    def __post_init__(self) -> None:
        if len(self.forests) != N_STAGES:
            raise ValueError(f'expected {N_STAGES} stage forests, got {len(self.forests)}')
        names = {forest.feature_names for forest in self.forests}
        if len(names) != 1:
            raise ValueError('stage forests use different feature sets')

    @property
    def feature_names(self) -> tuple[str, ...]:
        return self.forests[0].feature_names

    def raw(self, x) -> tuple[float, ...]:
        return tuple(forest.predict(x) for forest in self.forests)

    def to_dict(self) -> list[dict]:
        return [forest.to_dict() for forest in self.forests]

    @classmethod
    def from_dict(cls, data: list[dict]) -> 'RatioPredictor':
        return cls([ForestModel.from_dict(f) for f in data])


def train_ratio_predictor(X, R, params: TrainParams | None = None, feature_names=None) -> RatioPredictor:
    """Train the five stage forests on the ratio matrix R (n x 5)."""
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or R.shape[0] == 0:
        raise EmptyDatasetError('no regression instances')
    if R.shape[1] != N_STAGES:
        raise ValueError(f'ratio matrix needs {N_STAGES} columns, got {R.shape[1]}')
    return RatioPredictor([train_forest(X, R[:, s - 1], params, feature_names, stage=s) for s in range(1, N_STAGES + 1)])


# ─────────────────────────────────────────────────────────────────────────────
# Prediction
# ─────────────────────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class RatioPrediction:
    ratios: NymphStageRatios
    degenerate: bool
    raw: tuple[float, ...]


def predict_phase(tree: TreeModel, x) -> tuple[Phase, tuple[float, ...]]:
    """Phase with the largest leaf probability (ties to the lowest phase) and the full distribution."""
    distribution = tree.predict_distribution(x)
    return Phase(tree.classes[int(np.argmax(distribution))]), distribution


def predict_ratios(predictor: RatioPredictor, x) -> RatioPrediction:
    """Stage forest outputs clamped to [0, 1] and renormalized to sum to 1.

    If every clamped output is zero the prediction is all stage 1 and flagged degenerate.
    """
    _check_arity(x, predictor.feature_names)
    raw = predictor.raw(x)
    clamped = [min(1.0, max(0.0, v)) for v in raw]
    total = sum(clamped)
    if total == 0.0:
        return RatioPrediction(NymphStageRatios((1.0, 0.0, 0.0, 0.0, 0.0)), True, raw)
    return RatioPrediction(NymphStageRatios(tuple(v / total for v in clamped)), False, raw)
