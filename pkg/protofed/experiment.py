#   Copyright 2026 protofed authors
#
#   Licensed under the Apache License, Version 2.0 (the "License");
#   you may not use this file except in compliance with the License.
#   You may obtain a copy of the License at
#
#       http://www.apache.org/licenses/LICENSE-2.0
#
#   Unless required by applicable law or agreed to in writing, software
#   distributed under the License is distributed on an "AS IS" BASIS,
#   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#   See the License for the specific language governing permissions and
#   limitations under the License.

""" Experiment lifecycle: data, clients, carrier, federation loop, artifacts """

from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

from loguru import logger as log

from . import __version__
from .data import generate_synthetic, write_dataset_manifest
from .federation import ClientWorker, TrainReport, fedavg_run, make_clients, server_run
from .federation.report import METRIC_COLUMNS, TRAJECTORY_COLUMNS
from .model import save_checkpoint
from .models.enums.all import Activation, LossSecondTerm, Mode, OptimizerKind, SweepAxis
from .models.pd.configuration import ExperimentConfig, canonical_keys, deep_merge
from .transport import InProcTransport, bytes_accounting, compare_bytes, serve
from .transport.tcp import client_thread
from .utils.artifact_utils import human_size, write_csv, write_json
from .utils.utils import make_addr

ABLATION_VARIANTS = ('fedhpb', 'none', 'l2', 'silu', 'adam', 'fedavg')
SWEEP_DEFAULTS = {
    SweepAxis.WINDOW: [32, 64, 128, 256],
    SweepAxis.RHO: [20, 50, 100],
    SweepAxis.LAMBDA: [0.0, 0.1, 0.25, 0.5, 0.75, 1.0],
}
ABLATION_COLUMNS = ['variant', 'mfbeta', 'mba', 'final_mfbeta', 'final_mba', 'upload_bytes']
SWEEP_COLUMNS = ['axis', 'value', 'status', 'mfbeta', 'mba', 'final_mfbeta', 'final_mba', 'upload_bytes', 'error']
BYTES_COLUMNS = ['round', 'client', 'upload_bytes', 'download_bytes']


def with_overrides(config: ExperimentConfig, overrides: Dict) -> ExperimentConfig:
    return ExperimentConfig.model_validate(deep_merge(config.model_dump(), canonical_keys(ExperimentConfig, overrides)))


class Experiment:
    """ One federated run """

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.output_dir = Path(config.output_dir)
        self.datasets = None
        self.clients = None
        self.report: Optional[TrainReport] = None

    def init(self):
        """ Generate client data and initialize client models """
        config = self.config
        log.info("Initializing experiment {} ({} clients, rho={}:1, T={})",
                 config.mode.value, config.dataset.clients, config.dataset.rho, config.dataset.window)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        write_json(self.output_dir, 'manifest.json', {
            'version': __version__,
            'mode': config.mode.value,
            'seed': config.rounds.seed,
            'ablation': config.ablation,
            'config': config.model_dump(mode='json'),
        })
        self.datasets = generate_synthetic(config.dataset)
        write_dataset_manifest(self.datasets, config.dataset, self.output_dir)
        self.clients = make_clients(self.datasets, config.model, config.rounds.seed)
        log.info("Model has {} parameters ({} as float64)",
                 self.clients[0].model.num_parameters(), human_size(self.clients[0].model.num_parameters() * 8))

    @contextmanager
    def carrier(self):
        """In-process or TCP loopback carrier serving one ClientWorker per client."""
        workers = [ClientWorker(client, self.config.rounds) for client in self.clients]
        address = self.config.tcp_address
        if address is None:
            transport = InProcTransport({worker.client_id: worker for worker in workers})
            try:
                yield transport
            finally:
                transport.close(self.config.rounds.rounds)
            return

        timeout = self.config.rounds.client_timeout
        server = serve(make_addr(*address), timeout=timeout)
        threads = [client_thread(server.address, worker, timeout) for worker in workers]
        try:
            server.accept_clients(len(workers))
            yield server
        finally:
            server.close(self.config.rounds.rounds)
            for thread, _ in threads:
                thread.join(timeout=timeout)

    def run(self) -> TrainReport:
        if self.clients is None:
            self.init()
        with self.carrier() as transport:
            if self.config.mode == Mode.FEDAVG:
                self.report = fedavg_run(transport, self.config.rounds, self.config.model, self.config.rounds.seed)
            else:
                self.report = server_run(transport, self.config.rounds, self.config.mode.value)
        self.write_artifacts()
        return self.report

    def write_artifacts(self):
        report = self.report
        write_csv(self.output_dir, 'rounds.csv', report.metric_rows(), METRIC_COLUMNS)
        write_csv(self.output_dir, 'trajectory.csv', report.trajectory_rows(), TRAJECTORY_COLUMNS)
        write_csv(self.output_dir, 'bytes.csv', bytes_accounting(report), BYTES_COLUMNS)
        write_json(self.output_dir, 'summary.json', {
            'mode': report.mode,
            'round_means': [summary.model_dump(exclude={'global_prototypes'}) for summary in report.rounds],
            **report.summary.model_dump(),
        })
        write_json(self.output_dir, 'report.json', report.comparable())
        if self.config.save_checkpoints:
            for client in self.clients:
                save_checkpoint(client.model, self.output_dir / 'checkpoints' / f'client_{client.client_id:02d}.ckpt')
        log.info("Artifacts written to {}", self.output_dir)

    def deinit(self):
        """ Release client state """
        self.datasets = None
        self.clients = None


def run_experiment(config: ExperimentConfig) -> TrainReport:
    experiment = Experiment(config)
    try:
        experiment.init()
        return experiment.run()
    finally:
        experiment.deinit()


def variant_overrides(variant: str, output_dir: Path) -> Dict:
    overrides = {'output_dir': str(output_dir / variant), 'mode': Mode.FEDHPB.value}
    if variant in (LossSecondTerm.NONE.value, LossSecondTerm.L2.value):
        overrides['rounds'] = {'loss': {'second_term': variant}}
    elif variant == Activation.SILU.value:
        overrides['model'] = {'activation': Activation.SILU.value}
    elif variant == OptimizerKind.ADAM.value:
        overrides['rounds'] = {'optimizer': OptimizerKind.ADAM.value}
    elif variant == Mode.FEDAVG.value:
        overrides['mode'] = Mode.FEDAVG.value
    return overrides


def run_ablations(config: ExperimentConfig, variants: Iterable[str] = ABLATION_VARIANTS) -> List[dict]:
    """One sub-run per variant; writes ablations.csv and communication.csv."""
    output_dir = Path(config.output_dir)
    reports: Dict[str, TrainReport] = {}
    rows = []
    for variant in variants:
        log.info("Ablation variant {}", variant)
        report = run_experiment(with_overrides(config, variant_overrides(variant, output_dir)))
        reports[variant] = report
        summary = report.summary
        rows.append({
            'variant': variant,
            'mfbeta': summary.avg_mfbeta, 'mba': summary.avg_mba,
            'final_mfbeta': summary.final_mfbeta, 'final_mba': summary.final_mba,
            'upload_bytes': summary.mean_upload_bytes,
        })
    write_csv(output_dir, 'ablations.csv', rows, ABLATION_COLUMNS)
    if 'fedhpb' in reports and 'fedavg' in reports:
        write_csv(output_dir, 'communication.csv', compare_bytes(reports['fedhpb'], reports['fedavg']))
    return rows


def run(config: ExperimentConfig) -> Union[TrainReport, List[dict]]:
    if config.mode == Mode.ABLATIONS:
        return run_ablations(config)
    return run_experiment(config)


def sweep_overrides(axis: SweepAxis, value) -> Dict:
    if axis == SweepAxis.WINDOW:
        return {'dataset': {'window': int(value), 'stride': None}}
    if axis == SweepAxis.RHO:
        return {'dataset': {'rho': int(value)}}
    return {'rounds': {'loss': {'lam': float(value)}}}


def run_sweep(config: ExperimentConfig, axis: SweepAxis, values: Optional[List] = None) -> List[dict]:
    """
    One sub-experiment per axis value, each in its own directory.

    A failing sub-run is logged and recorded as failed; the sweep continues.
    """
    axis = SweepAxis(axis)
    output_dir = Path(config.output_dir)
    rows = []
    for value in values if values is not None else SWEEP_DEFAULTS[axis]:
        row = {'axis': axis.value, 'value': value, 'status': 'ok'}
        try:
            overrides = deep_merge(sweep_overrides(axis, value), {'output_dir': str(output_dir / f"{axis.value}_{value}")})
            sub_config = with_overrides(config, overrides)
            result = run(sub_config)
            if isinstance(result, TrainReport):
                summary = result.summary
                row.update(mfbeta=summary.avg_mfbeta, mba=summary.avg_mba, final_mfbeta=summary.final_mfbeta,
                           final_mba=summary.final_mba, upload_bytes=summary.mean_upload_bytes)
        except Exception as exc:  # pylint: disable=W0703
            log.exception("Sweep {}={} failed", axis.value, value)
            row.update(status='failed', error=f"{type(exc).__name__}: {exc}")
        rows.append(row)
    write_csv(output_dir, 'sweep_summary.csv', rows, SWEEP_COLUMNS)
    return rows
