"""Trained-model bundle: phase tree, stage forests, feature set and season clock in one JSON file."""

import datetime as dt
import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .errors import BundleError, BundleVersionError
from .features import Dataset, FeatureSetSpec, SeasonClock
from .trees import FOREST_DEFAULTS, RatioPredictor, TrainParams, TreeModel, train_ratio_predictor, train_tree

logger = logging.getLogger('sunnpest')

FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainingMetadata:
    """Provenance of a bundle. Nothing here depends on when training ran."""

    digest: str
    instances: int
    regression_instances: int
    dropped: int
    stations: tuple[str, ...]
    first_date: dt.date
    last_date: dt.date
    tree_params: TrainParams = field(default_factory=TrainParams)
    forest_params: TrainParams = field(default_factory=lambda: FOREST_DEFAULTS)

    def to_dict(self) -> dict:
        return {
            'digest': self.digest,
            'instances': self.instances,
            'regression_instances': self.regression_instances,
            'dropped': self.dropped,
            'stations': list(self.stations),
            'first_date': self.first_date.isoformat(),
            'last_date': self.last_date.isoformat(),
        }

    @classmethod
    def from_dict(cls, data: dict, params: dict) -> 'TrainingMetadata':
        return cls(
            digest=data['digest'],
            instances=int(data['instances']),
            regression_instances=int(data['regression_instances']),
            dropped=int(data['dropped']),
            stations=tuple(data['stations']),
            first_date=dt.date.fromisoformat(data['first_date']),
            last_date=dt.date.fromisoformat(data['last_date']),
            tree_params=TrainParams.from_dict(params['tree']),
            forest_params=TrainParams.from_dict(params['forest']),
        )


@dataclass
class ModelBundle:
    classifier: TreeModel
    ratios: RatioPredictor
    spec: FeatureSetSpec
    clock: SeasonClock
    metadata: TrainingMetadata

    def validate(self) -> None:
        """Every model must read exactly the bundle's feature set."""
        if self.classifier.kind != 'classifier':
            raise BundleError('phase model is not a classification tree')
        if self.classifier.feature_names != self.spec.fields:
            raise BundleError(f'phase tree features {self.classifier.feature_names} differ from feature set {self.spec.fields}')
        if self.ratios.feature_names != self.spec.fields:
            raise BundleError(f'stage forest features {self.ratios.feature_names} differ from feature set {self.spec.fields}')

    def to_dict(self) -> dict:
        return {
            'format_version': FORMAT_VERSION,
            'feature_set': self.spec.to_dict(),
            'cycle_start': self.clock.cycle_start,
            'rng_seed': self.metadata.forest_params.rng_seed,
            'train_params': {'tree': self.metadata.tree_params.to_dict(), 'forest': self.metadata.forest_params.to_dict()},
            'training_metadata': self.metadata.to_dict(),
            'phase_tree': self.classifier.to_dict(),
            'ratio_forests': self.ratios.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'ModelBundle':
        bundle = cls(
            classifier=TreeModel.from_dict(data['phase_tree']),
            ratios=RatioPredictor.from_dict(data['ratio_forests']),
            spec=FeatureSetSpec.from_dict(data['feature_set']),
            clock=SeasonClock(int(data['cycle_start'])),
            metadata=TrainingMetadata.from_dict(data['training_metadata'], data['train_params']),
        )
        bundle.validate()
        return bundle


def train_bundle(
    dataset: Dataset, clock: SeasonClock, tree_params: TrainParams | None = None, forest_params: TrainParams | None = None
) -> ModelBundle:
    """Train the phase tree on every instance and the stage forests on those with nymph counts."""
    tree_params = tree_params or TrainParams()
    forest_params = forest_params or FOREST_DEFAULTS
    fields = dataset.spec.fields

    classifier = train_tree(dataset.features(), dataset.phases(), tree_params, fields, (1, 2, 3))
    X, R = dataset.ratio_subset()
    ratios = train_ratio_predictor(X, R, forest_params, fields)

    first, last = dataset.date_bounds()
    metadata = TrainingMetadata(
        digest=dataset.digest(),
        instances=len(dataset),
        regression_instances=len(R),
        dropped=dataset.dropped,
        stations=tuple(sorted({inst.station_id for inst in dataset.instances})),
        first_date=first,
        last_date=last,
        tree_params=tree_params,
        forest_params=forest_params,
    )
    logger.info(
        f'[TRAIN] {dataset.spec.model_id}: phase tree {classifier.node_count} nodes, '
        f'{forest_params.n_trees} trees per stage on {len(R)} counted days'
    )
    return ModelBundle(classifier, ratios, dataset.spec, clock, metadata)


def save_bundle(bundle: ModelBundle, path: Path) -> None:
    """Write the bundle atomically: a temporary file in the target directory, then rename."""
    bundle.validate()
    path = Path(path)
    text = json.dumps(bundle.to_dict(), separators=(',', ':')) + '\n'
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f'.{path.name}.', dir=path.parent)
    try:
        with os.fdopen(fd, 'w', encoding='utf-8') as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    logger.info(f'[BUNDLE] wrote {path} ({len(text)} bytes)')


def load_bundle(path: Path) -> ModelBundle:
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except FileNotFoundError:
        raise BundleError(f'{path}: bundle file not found') from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise BundleError(f'{path}: corrupt bundle at line {e.lineno} column {e.colno} (offset {e.pos}): {e.msg}') from None
    if not isinstance(data, dict):
        raise BundleError(f'{path}: bundle is not a JSON object')

    version = data.get('format_version')
    if version != FORMAT_VERSION:
        raise BundleVersionError(f'{path}: unsupported bundle format_version {version!r}, this build reads version {FORMAT_VERSION}')

    try:
        bundle = ModelBundle.from_dict(data)
    except BundleError as e:
        raise BundleError(f'{path}: {e}') from None
    except (KeyError, TypeError, ValueError, IndexError) as e:
        raise BundleError(f'{path}: malformed bundle: {type(e).__name__}: {e}') from None
    logger.debug(f'[BUNDLE] loaded {path}: feature set {bundle.spec.model_id}')
    return bundle
