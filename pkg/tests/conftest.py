"""
Shared fixtures: tiny model/data configurations that keep every federated
test to a few seconds.
"""

import numpy as np
import pytest

from protofed.data import generate_synthetic
from protofed.federation import ClientWorker, make_clients
from protofed.model import init_params
from protofed.models.pd.configuration import ExperimentConfig
from protofed.models.pd.dataset import DatasetSpec
from protofed.models.pd.model import LcnnConfig
from protofed.models.pd.rounds import RoundConfig
from protofed.transport import InProcTransport

TINY_MODEL = {'input_dim': 4, 'window': 8, 'lstm_hidden': 4, 'conv_channels': (4, 6, 6), 'dropout_rate': 0.0}
TINY_DATASET = {'channels': 4, 'window': 8, 'rho': 20, 'train_windows': 84, 'clients': 3, 'signature_channels': 2}
TINY_ROUNDS = {'rounds': 2, 'epochs': 2, 'batch_size': 32, 'lr': 0.05}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config():
    return LcnnConfig(**TINY_MODEL)


@pytest.fixture
def tiny_model(tiny_config):
    return init_params(tiny_config, seed=7)


@pytest.fixture
def tiny_spec():
    return DatasetSpec(**TINY_DATASET)


@pytest.fixture
def tiny_rounds():
    return RoundConfig(**TINY_ROUNDS)


def build_transport(spec: DatasetSpec, model_config: LcnnConfig, rounds: RoundConfig, worker_cls=ClientWorker):
    datasets = generate_synthetic(spec)
    clients = make_clients(datasets, model_config, rounds.seed)
    workers = [worker_cls(client, rounds) for client in clients]
    return clients, workers, InProcTransport({w.client_id: w for w in workers})


@pytest.fixture
def federation(tiny_spec, tiny_config, tiny_rounds):
    return build_transport(tiny_spec, tiny_config, tiny_rounds)


def tiny_experiment(tmp_path, **overrides) -> ExperimentConfig:
    data = {
        'dataset': dict(TINY_DATASET),
        'rounds': dict(TINY_ROUNDS),
        'model': {key: value for key, value in TINY_MODEL.items() if key not in ('input_dim', 'window')},
        'output_dir': str(tmp_path / 'run'),
        'seed': 3,
    }
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(data.get(key), dict):
            data[key].update(value)
        else:
            data[key] = value
    return ExperimentConfig.model_validate(data)
