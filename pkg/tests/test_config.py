import pytest

from protofed.cli import build_parser, overrides_from_args
from protofed.errors import ConfigError
from protofed.models.enums.all import LossSecondTerm
from protofed.models.pd.configuration import ExperimentConfig, deep_merge, load_presets, load_yaml, resolve_config


class TestPresets:
    def test_known_presets(self):
        assert set(load_presets()) >= {'desk', 'full'}

    def test_desk(self):
        config = resolve_config('desk')
        assert config.preset == 'desk'
        assert (config.dataset.clients, config.dataset.window) == (4, 32)
        assert (config.rounds.rounds, config.rounds.epochs) == (5, 10)
        assert config.rounds.clients == 4

    def test_full_syncs_model_shape(self):
        config = resolve_config('full')
        assert config.dataset.window == 128 and config.model.window == 128
        assert config.model.input_dim == config.dataset.channels == 16
        assert config.dataset.stride == 64

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            resolve_config('laptop')


class TestResolution:
    def test_precedence(self, tmp_path):
        path = tmp_path / 'run.yml'
        path.write_text('rounds:\n  rounds: 3\n  epochs: 4\ndataset:\n  rho: 50\n', encoding='utf-8')
        config = resolve_config('desk', str(path), {'rounds': {'epochs': 7}})
        assert config.rounds.rounds == 3
        assert config.rounds.epochs == 7
        assert config.dataset.rho == 50
        assert config.dataset.clients == 4

    def test_lambda_alias(self):
        config = resolve_config(overrides={'rounds': {'loss': {'lambda': 0.5, 'second_term': 'l2'}}})
        assert config.rounds.loss.lam == 0.5
        assert config.rounds.loss.second_term == LossSecondTerm.L2

    def test_flag_lambda_beats_file_alias(self, tmp_path):
        path = tmp_path / 'run.yml'
        path.write_text('rounds:\n  loss:\n    lambda: 0.1\n', encoding='utf-8')
        config = resolve_config(None, str(path), {'rounds': {'loss': {'lam': 0.5}}})
        assert config.rounds.loss.lam == 0.5
        config = resolve_config(None, str(path), {'rounds': {'loss': {'tau': 0.3}}})
        assert config.rounds.loss.lam == 0.1

    def test_alias_and_name_in_one_source(self):
        with pytest.raises(ConfigError, match='alias'):
            resolve_config(overrides={'rounds': {'loss': {'lam': 0.5, 'lambda': 0.1}}})

    def test_seed_propagates(self):
        config = resolve_config(overrides={'seed': 11})
        assert config.dataset.seed == 11 and config.rounds.seed == 11

    @pytest.mark.parametrize('overrides', [
        {'rounds': {'loss': {'lambda': 1.5}}},
        {'dataset': {'rho': 0}},
        {'rounds': {'epochs': 0}},
        {'transport': 'udp'},
        {'unknown': 1},
    ])
    def test_invalid(self, overrides):
        with pytest.raises(ConfigError):
            resolve_config(overrides=overrides)

    def test_transport_address(self):
        assert ExperimentConfig().tcp_address is None
        assert ExperimentConfig(transport='tcp:[::1]:9000').tcp_address == ('::1', 9000)
        assert ExperimentConfig(transport='tcp:127.0.0.1:0').tcp_address == ('127.0.0.1', 0)

    def test_bad_yaml(self, tmp_path):
        path = tmp_path / 'list.yml'
        path.write_text('- 1\n- 2\n', encoding='utf-8')
        with pytest.raises(ConfigError):
            load_yaml(path)
        with pytest.raises(ConfigError):
            load_yaml(tmp_path / 'missing.yml')

    def test_deep_merge(self):
        merged = deep_merge({'a': {'b': 1, 'c': 2}, 'd': 3}, {'a': {'c': 5}})
        assert merged == {'a': {'b': 1, 'c': 5}, 'd': 3}


class TestFlags:
    def test_overrides_from_args(self):
        args = build_parser().parse_args([
            '--rho', '50', '--lambda', '0.1', '--loss', 'l2', '--rounds', '3', '--activation', 'silu', '--seed', '4',
        ])
        assert overrides_from_args(args) == {
            'seed': 4,
            'dataset': {'rho': 50},
            'rounds': {'rounds': 3, 'loss': {'lam': 0.1, 'second_term': 'l2'}},
            'model': {'activation': 'silu'},
        }

    def test_defaults(self):
        args = build_parser().parse_args([])
        assert args.preset == 'desk'
        assert overrides_from_args(args) == {}
