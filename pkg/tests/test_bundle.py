import json

import numpy as np
import pytest

from sunnpest.core.bundle import FORMAT_VERSION, load_bundle, save_bundle, train_bundle
from sunnpest.core.errors import BundleError, BundleVersionError
from sunnpest.core.features import SeasonClock
from sunnpest.core.trees import TrainParams, predict_phase, predict_ratios


@pytest.fixture(scope='module')
def saved(bundle, tmp_path_factory):
    path = tmp_path_factory.mktemp('bundle') / 'model.json'
    save_bundle(bundle, path)
    return path


def test_round_trip_predicts_identically(bundle, saved, datasets):
    restored = load_bundle(saved)
    X = datasets['m2'].features()
    rng = np.random.default_rng(0)
    points = rng.uniform(X.min(axis=0), X.max(axis=0), size=(1000, X.shape[1]))
    for x in points:
        assert predict_phase(restored.classifier, x) == predict_phase(bundle.classifier, x)
        assert predict_ratios(restored.ratios, x) == predict_ratios(bundle.ratios, x)


def test_round_trip_keeps_metadata(bundle, saved):
    restored = load_bundle(saved)
    assert restored.metadata == bundle.metadata
    assert restored.spec == bundle.spec
    assert restored.clock == bundle.clock


def test_bundle_layout(saved):
    data = json.loads(saved.read_text(encoding='utf-8'))
    assert data['format_version'] == FORMAT_VERSION
    assert data['feature_set']['model_id'] == 'm2'
    assert len(data['ratio_forests']) == 5
    assert set(data['train_params']) == {'tree', 'forest'}
    assert data['training_metadata']['stations'] == ['AKS-WF1', 'KIR-WF1']


def test_training_is_byte_reproducible(datasets, tmp_path):
    params = TrainParams(criterion='mae', n_trees=3, rng_seed=9)
    for name in ('a.json', 'b.json'):
        save_bundle(train_bundle(datasets['m3'], SeasonClock(), forest_params=params), tmp_path / name)
    assert (tmp_path / 'a.json').read_bytes() == (tmp_path / 'b.json').read_bytes()


def test_missing_file(tmp_path):
    with pytest.raises(BundleError, match='not found'):
        load_bundle(tmp_path / 'absent.json')


def test_truncated_file(saved, tmp_path):
    path = tmp_path / 'truncated.json'
    path.write_bytes(saved.read_bytes()[:-40])
    with pytest.raises(BundleError, match='corrupt bundle at line 1'):
        load_bundle(path)


def test_version_mismatch(saved, tmp_path):
    data = json.loads(saved.read_text(encoding='utf-8'))
    data['format_version'] = FORMAT_VERSION + 1
    path = tmp_path / 'future.json'
    path.write_text(json.dumps(data), encoding='utf-8')
    with pytest.raises(BundleVersionError, match='format_version'):
        load_bundle(path)


def test_feature_mismatch(saved, tmp_path):
    data = json.loads(saved.read_text(encoding='utf-8'))
    data['feature_set']['fields'] = data['feature_set']['fields'][:-1]
    path = tmp_path / 'mismatch.json'
    path.write_text(json.dumps(data), encoding='utf-8')
    with pytest.raises(BundleError, match='differ from feature set'):
        load_bundle(path)


def test_missing_section(saved, tmp_path):
    data = json.loads(saved.read_text(encoding='utf-8'))
    del data['phase_tree']
    path = tmp_path / 'partial.json'
    path.write_text(json.dumps(data), encoding='utf-8')
    with pytest.raises(BundleError, match='malformed bundle'):
        load_bundle(path)


def test_no_temporary_files_left(saved):
    assert [p.name for p in saved.parent.iterdir()] == ['model.json']
