"""Configuration management for sunnpest.

Config is stored in ~/.config/sunnpest/config.toml unless SUNNPEST_CONFIG
or --config points elsewhere. Command-line flags override file values.
"""

import os
import tomllib
from dataclasses import dataclass, field
from pathlib import Path

import tomli_w

from sunnpest.core.climate import DEFAULT_MAX_GAP, StationMeta
from sunnpest.core.features import SeasonClock
from sunnpest.core.forecast import WarningRule
from sunnpest.core.trees import TrainParams

CONFIG_DIR = Path.home() / '.config' / 'sunnpest'
CONFIG_FILE = CONFIG_DIR / 'config.toml'


def config_path(override: Path | None = None) -> Path:
    """Explicit path, else $SUNNPEST_CONFIG, else the per-user default."""
    if override is not None:
        return Path(override)
    env = os.environ.get('SUNNPEST_CONFIG')
    return Path(env) if env else CONFIG_FILE


def _without_none(data: dict) -> dict:
    # TOML has no null; absent keys mean "use the default".
    return {key: value for key, value in data.items() if value is not None}


@dataclass
class PipelineConfig:
    max_gap: int = DEFAULT_MAX_GAP
    cycle_start: int = 1


@dataclass
class TreeConfig:
    criterion: str = 'gini'
    min_leaf: int = 1
    min_split: int = 2
    max_depth: int | None = None


@dataclass
class ForestConfig:
    criterion: str = 'mae'
    n_trees: int = 10
    min_leaf: int = 1
    min_split: int = 2
    max_depth: int | None = None
    feature_subsample: int | None = None
    bootstrap: bool = True


@dataclass
class EvaluationConfig:
    folds: int = 10
    level: float = 0.99


@dataclass
class WarningConfig:
    stages: list[int] = field(default_factory=lambda: [2, 3])
    threshold: float = 0.55
    require_phase3: bool = True


@dataclass
class StationConfig:
    site_kind: str = 'WheatField'
    location_name: str = ''


@dataclass
class Config:
    seed: int = 0
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    tree: TreeConfig = field(default_factory=TreeConfig)
    forest: ForestConfig = field(default_factory=ForestConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    warning: WarningConfig = field(default_factory=WarningConfig)
    stations: dict[str, StationConfig] = field(default_factory=dict)

    def clock(self, cycle_start: int | None = None) -> SeasonClock:
        return SeasonClock(cycle_start if cycle_start is not None else self.pipeline.cycle_start)

    def tree_params(self, seed: int | None = None) -> TrainParams:
        return TrainParams(
            criterion=self.tree.criterion,
            min_leaf=self.tree.min_leaf,
            min_split=self.tree.min_split,
            max_depth=self.tree.max_depth,
            rng_seed=self.seed if seed is None else seed,
        )

    def forest_params(self, seed: int | None = None, n_trees: int | None = None) -> TrainParams:
        return TrainParams(
            criterion=self.forest.criterion,
            min_leaf=self.forest.min_leaf,
            min_split=self.forest.min_split,
            max_depth=self.forest.max_depth,
            n_trees=self.forest.n_trees if n_trees is None else n_trees,
            feature_subsample=self.forest.feature_subsample,
            bootstrap=self.forest.bootstrap,
            rng_seed=self.seed if seed is None else seed,
        )

    def warning_rule(self, stages=None, threshold: float | None = None, require_phase3: bool | None = None) -> WarningRule:
        return WarningRule(
            stages=frozenset(stages if stages is not None else self.warning.stages),
            threshold=self.warning.threshold if threshold is None else threshold,
            require_phase3=self.warning.require_phase3 if require_phase3 is None else require_phase3,
        )

    def station_metas(self) -> dict[str, StationMeta]:
        return {sid: StationMeta(sid, st.site_kind, st.location_name) for sid, st in self.stations.items()}

    def to_dict(self) -> dict:
        """Convert config to dict for TOML serialization."""
        return {
            'seed': self.seed,
            'pipeline': {
                'max_gap': self.pipeline.max_gap,
                'cycle_start': self.pipeline.cycle_start,
            },
            'tree': _without_none(
                {
                    'criterion': self.tree.criterion,
                    'min_leaf': self.tree.min_leaf,
                    'min_split': self.tree.min_split,
                    'max_depth': self.tree.max_depth,
                }
            ),
            'forest': _without_none(
                {
                    'criterion': self.forest.criterion,
                    'n_trees': self.forest.n_trees,
                    'min_leaf': self.forest.min_leaf,
                    'min_split': self.forest.min_split,
                    'max_depth': self.forest.max_depth,
                    'feature_subsample': self.forest.feature_subsample,
                    'bootstrap': self.forest.bootstrap,
                }
            ),
            'evaluation': {
                'folds': self.evaluation.folds,
                'level': self.evaluation.level,
            },
            'warning': {
                'stages': list(self.warning.stages),
                'threshold': self.warning.threshold,
                'require_phase3': self.warning.require_phase3,
            },
            'stations': {
                sid: {'site_kind': st.site_kind, 'location_name': st.location_name} for sid, st in sorted(self.stations.items())
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'Config':
        """Create config from dict."""
        config = cls()
        config.seed = data.get('seed', 0)

        if 'pipeline' in data:
            pl = data['pipeline']
            config.pipeline.max_gap = pl.get('max_gap', DEFAULT_MAX_GAP)
            config.pipeline.cycle_start = pl.get('cycle_start', 1)

        if 'tree' in data:
            tr = data['tree']
            config.tree.criterion = tr.get('criterion', 'gini')
            config.tree.min_leaf = tr.get('min_leaf', 1)
            config.tree.min_split = tr.get('min_split', 2)
            config.tree.max_depth = tr.get('max_depth')

        if 'forest' in data:
            fo = data['forest']
            config.forest.criterion = fo.get('criterion', 'mae')
            config.forest.n_trees = fo.get('n_trees', 10)
            config.forest.min_leaf = fo.get('min_leaf', 1)
            config.forest.min_split = fo.get('min_split', 2)
            config.forest.max_depth = fo.get('max_depth')
            config.forest.feature_subsample = fo.get('feature_subsample')
            config.forest.bootstrap = fo.get('bootstrap', True)

        if 'evaluation' in data:
            ev = data['evaluation']
            config.evaluation.folds = ev.get('folds', 10)
            config.evaluation.level = ev.get('level', 0.99)

        if 'warning' in data:
            wr = data['warning']
            config.warning.stages = list(wr.get('stages', [2, 3]))
            config.warning.threshold = wr.get('threshold', 0.55)
            config.warning.require_phase3 = wr.get('require_phase3', True)

        for sid, st in data.get('stations', {}).items():
            config.stations[sid] = StationConfig(st.get('site_kind', 'WheatField'), st.get('location_name', ''))

        return config

    def validate(self) -> None:
        """Build every derived object once so bad values fail at load time."""
        self.clock()
        self.tree_params()
        self.forest_params()
        self.warning_rule()
        if self.pipeline.max_gap < 0:
            raise ValueError(f'pipeline.max_gap must be >= 0, got {self.pipeline.max_gap}')
        if self.evaluation.folds < 2:
            raise ValueError(f'evaluation.folds must be >= 2, got {self.evaluation.folds}')
        if not 0 < self.evaluation.level < 1:
            raise ValueError(f'evaluation.level must lie in (0, 1), got {self.evaluation.level}')
        for sid, st in self.stations.items():
            if st.site_kind not in ('WheatField', 'WinterQuarters'):
                raise ValueError(f'stations.{sid}.site_kind must be WheatField or WinterQuarters, got {st.site_kind!r}')


def load_config(path: Path | None = None) -> Config:
    """Load config from file, or return defaults if not exists."""
    path = config_path(path)
    if not path.exists():
        return Config()

    with open(path, 'rb') as f:
        data = tomllib.load(f)

    config = Config.from_dict(data)
    config.validate()
    return config


def save_config(config: Config, path: Path | None = None) -> Path:
    """Save config to file."""
    path = config_path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    with open(path, 'wb') as f:
        tomli_w.dump(config.to_dict(), f)
    return path
