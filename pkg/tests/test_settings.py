import pytest

from sunnpest.core.features import SeasonClock
from sunnpest.settings import CONFIG_FILE, Config, StationConfig, config_path, load_config, save_config


def test_config_path_precedence(tmp_path, monkeypatch):
    monkeypatch.delenv('SUNNPEST_CONFIG', raising=False)
    assert config_path() == CONFIG_FILE
    monkeypatch.setenv('SUNNPEST_CONFIG', str(tmp_path / 'env.toml'))
    assert config_path() == tmp_path / 'env.toml'
    assert config_path(tmp_path / 'flag.toml') == tmp_path / 'flag.toml'


def test_missing_file_gives_defaults(tmp_path):
    config = load_config(tmp_path / 'absent.toml')
    assert config == Config()
    assert config.forest_params().criterion == 'mae'
    assert config.warning_rule().stages == frozenset({2, 3})


def test_save_and_load_round_trip(tmp_path):
    config = Config(seed=5)
    config.pipeline.cycle_start = 32
    config.forest.n_trees = 25
    config.tree.max_depth = 6
    config.warning.threshold = 0.6
    config.stations['KIR-WF1'] = StationConfig('WheatField', 'Kirsehir')
    path = save_config(config, tmp_path / 'config.toml')
    assert load_config(path) == config


def test_partial_file_keeps_other_defaults(tmp_path):
    path = tmp_path / 'config.toml'
    path.write_text('[forest]\nn_trees = 40\n', encoding='utf-8')
    config = load_config(path)
    assert config.forest.n_trees == 40
    assert config.forest.criterion == 'mae'
    assert config.evaluation.folds == 10


def test_flags_override_file_values():
    config = Config(seed=3)
    assert config.forest_params().rng_seed == 3
    assert config.forest_params(seed=8, n_trees=4).rng_seed == 8
    assert config.forest_params(seed=8, n_trees=4).n_trees == 4
    assert config.clock(60) == SeasonClock(60)
    rule = config.warning_rule(stages=frozenset({4}), threshold=0.7, require_phase3=False)
    assert (rule.stages, rule.threshold, rule.require_phase3) == (frozenset({4}), 0.7, False)


@pytest.mark.parametrize(
    'text',
    [
        '[pipeline]\ncycle_start = 400\n',
        '[tree]\ncriterion = "variance"\n',
        '[warning]\nthreshold = 2.0\n',
        '[stations.KIR-WF1]\nsite_kind = "Orchard"\n',
    ],
)
def test_invalid_values_fail_at_load(tmp_path, text):
    path = tmp_path / 'config.toml'
    path.write_text(text, encoding='utf-8')
    with pytest.raises(ValueError):
        load_config(path)


def test_station_metas():
    config = Config()
    config.stations['AKS-WF1'] = StationConfig('WinterQuarters', 'Aksaray')
    meta = config.station_metas()['AKS-WF1']
    assert (meta.station_id, meta.site_kind, meta.location_name) == ('AKS-WF1', 'WinterQuarters', 'Aksaray')
