import json
import time

import pandas as pd
import pytest
import yaml

from conftest import TINY_DATASET, TINY_MODEL, TINY_ROUNDS
from protofed.cli import EXIT_CONFIG, EXIT_OK, main

ARTIFACTS = ('manifest.json', 'dataset.json', 'rounds.csv', 'trajectory.csv', 'bytes.csv', 'summary.json', 'report.json')
DETERMINISTIC = ('rounds.csv', 'trajectory.csv', 'bytes.csv', 'summary.json', 'report.json')
ABLATION_SECONDS = 600.0


@pytest.fixture
def tiny_yaml(tmp_path):
    path = tmp_path / 'tiny.yml'
    path.write_text(yaml.safe_dump({
        'dataset': dict(TINY_DATASET),
        'rounds': dict(TINY_ROUNDS),
        'model': {key: list(value) if isinstance(value, tuple) else value
                  for key, value in TINY_MODEL.items() if key not in ('input_dim', 'window')},
    }), encoding='utf-8')
    return str(path)


def run_cli(tiny_yaml, output, *flags):
    return main(['--config', tiny_yaml, '--output', str(output), '--log-level', 'WARNING', *flags])


class TestRun:
    def test_smoke(self, tiny_yaml, tmp_path):
        output = tmp_path / 'run'
        assert run_cli(tiny_yaml, output, '--mode', 'fedhpb', '--seed', '1', '--save-checkpoints') == EXIT_OK
        for name in ARTIFACTS:
            assert (output / name).exists(), name
        assert len(list((output / 'checkpoints').iterdir())) == TINY_DATASET['clients']
        rounds = pd.read_csv(output / 'rounds.csv')
        assert list(rounds.columns) == ['round', 'client', 'tp', 'tn', 'fp', 'fn', 'precision', 'recall', 'fbeta', 'ba']
        assert len(rounds) == TINY_ROUNDS['rounds'] * (TINY_DATASET['clients'] + 1)
        summary = json.loads((output / 'summary.json').read_text())
        assert summary['mode'] == 'fedhpb' and summary['rounds'] == TINY_ROUNDS['rounds']
        manifest = json.loads((output / 'manifest.json').read_text())
        assert manifest['seed'] == 1 and manifest['ablation']['loss_second_term'] == 'contrastive'

    def test_reruns_are_byte_identical(self, tiny_yaml, tmp_path):
        assert run_cli(tiny_yaml, tmp_path / 'a', '--seed', '5') == EXIT_OK
        assert run_cli(tiny_yaml, tmp_path / 'b', '--seed', '5') == EXIT_OK
        for name in DETERMINISTIC:
            assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes(), name

    def test_invalid_rho_exits_with_config_code(self, tiny_yaml, tmp_path):
        assert run_cli(tiny_yaml, tmp_path / 'run', '--rho', '0') == EXIT_CONFIG
        assert not (tmp_path / 'run').exists()

    def test_unknown_preset(self, tmp_path):
        assert main(['--preset', 'nope', '--output', str(tmp_path)]) == EXIT_CONFIG

    def test_fedavg_bytes_exceed_prototype_bytes(self, tiny_yaml, tmp_path):
        assert run_cli(tiny_yaml, tmp_path / 'proto') == EXIT_OK
        assert run_cli(tiny_yaml, tmp_path / 'avg', '--mode', 'fedavg') == EXIT_OK
        proto = pd.read_csv(tmp_path / 'proto' / 'bytes.csv')
        avg = pd.read_csv(tmp_path / 'avg' / 'bytes.csv')
        assert proto['upload_bytes'].max() < avg['upload_bytes'].min()


class TestSweepsAndAblations:
    def test_lambda_sweep(self, tiny_yaml, tmp_path):
        output = tmp_path / 'sweep'
        assert run_cli(tiny_yaml, output, '--sweep', 'lambda', '--sweep-values', '0,0.5') == EXIT_OK
        rows = pd.read_csv(output / 'sweep_summary.csv')
        assert rows['value'].tolist() == [0.0, 0.5]
        assert (rows['status'] == 'ok').all()
        assert (output / 'lambda_0.5' / 'rounds.csv').exists()

    def test_failed_sweep_value_is_recorded(self, tiny_yaml, tmp_path):
        output = tmp_path / 'sweep'
        assert run_cli(tiny_yaml, output, '--sweep', 'rho', '--sweep-values', '20,1000') == EXIT_OK
        rows = pd.read_csv(output / 'sweep_summary.csv')
        assert rows['status'].tolist() == ['ok', 'failed']
        assert 'SizeError' in rows['error'].iloc[1]

    def test_bad_sweep_values(self, tiny_yaml, tmp_path):
        assert run_cli(tiny_yaml, tmp_path, '--sweep', 'rho', '--sweep-values', '20,abc') == EXIT_CONFIG

    def test_ablations(self, tiny_yaml, tmp_path):
        output = tmp_path / 'ablations'
        assert run_cli(tiny_yaml, output, '--mode', 'ablations') == EXIT_OK
        rows = pd.read_csv(output / 'ablations.csv')
        assert rows['variant'].tolist() == ['fedhpb', 'none', 'l2', 'silu', 'adam', 'fedavg']
        communication = pd.read_csv(output / 'communication.csv')
        assert communication.set_index('mode').loc['fedhpb', 'ratio_to_fedavg'] < 1.0
        assert json.loads((output / 'l2' / 'manifest.json').read_text())['ablation']['loss_second_term'] == 'l2'


@pytest.mark.slow
class TestDeskPreset:
    def test_desk_smoke(self, tmp_path):
        assert main(['--rho', '20', '--rounds', '2', '--epochs', '2', '--seed', '1', '--output', str(tmp_path)]) == EXIT_OK
        for name in ARTIFACTS:
            assert (tmp_path / name).exists(), name

    def test_contrastive_not_worse_than_l2_at_high_imbalance(self, tmp_path):
        started = time.perf_counter()
        results = {}
        for term in ('contrastive', 'l2'):
            scores = []
            for seed in (1, 2, 3):
                output = tmp_path / f'{term}_{seed}'
                assert main(['--rho', '100', '--loss', term, '--seed', str(seed), '--output', str(output)]) == EXIT_OK
                summary = json.loads((output / 'summary.json').read_text())
                scores.append((summary['avg_mfbeta'], summary['avg_mba']))
            results[term] = [sum(values) / len(values) for values in zip(*scores)]
        assert results['contrastive'][0] >= results['l2'][0]
        assert results['contrastive'][1] >= results['l2'][1]
        assert results['contrastive'][1] >= 0.70
        assert time.perf_counter() - started < ABLATION_SECONDS

    def test_higher_imbalance_lowers_fbeta(self, tmp_path):
        for seed in (1, 2, 3):
            scores = {}
            for rho in (20, 100):
                output = tmp_path / f'rho{rho}_{seed}'
                assert main(['--rho', str(rho), '--seed', str(seed), '--output', str(output)]) == EXIT_OK
                scores[rho] = json.loads((output / 'summary.json').read_text())['avg_mfbeta']
            assert scores[20] >= scores[100]
