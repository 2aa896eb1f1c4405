"""Shared fixtures: one seeded synthetic corpus reused across the whole session."""

from pathlib import Path

import pytest

from sunnpest.core.bundle import train_bundle
from sunnpest.core.features import SeasonClock
from sunnpest.core.pipeline import corpus_dataset, load_corpus
from sunnpest.core.synthetic import SynthConfig, generate_seasons

SEED = 7


@pytest.fixture(scope='session')
def season():
    return generate_seasons(SynthConfig(years=4, stations=2, rng_seed=SEED))


@pytest.fixture(scope='session')
def corpus_dir(season, tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp('corpus')
    season.write(out)
    return out


@pytest.fixture(scope='session')
def climate_paths(corpus_dir) -> list[Path]:
    return sorted(corpus_dir.glob('climate_*.csv'))


@pytest.fixture(scope='session')
def labels_path(corpus_dir) -> Path:
    return corpus_dir / 'labels.csv'


@pytest.fixture(scope='session')
def corpus(climate_paths, labels_path):
    return load_corpus(climate_paths, [labels_path])


@pytest.fixture(scope='session')
def datasets(corpus):
    return {model_id: corpus_dataset(corpus, model_id) for model_id in ('m1', 'm2', 'm3')}


@pytest.fixture(scope='session')
def bundle(datasets):
    return train_bundle(datasets['m2'], SeasonClock())
